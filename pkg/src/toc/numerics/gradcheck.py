"""Central finite-difference verification of network gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Network


@dataclass
class GradCheckReport:
    max_rel_error: float
    tolerance: float
    n_params: int

    @property
    def passed(self):
        return self.max_rel_error <= self.tolerance

    def __str__(self):
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"grad_check: max_rel_error={self.max_rel_error:.3e} "
            f"tol={self.tolerance:.1e} over {self.n_params} params -> {verdict}"
        )


def grad_check(net: Network, x, tolerance=1e-4, eps=1e-5, rng=None):
    """Compare analytic parameter gradients against central differences.

    Loss is a fixed random linear functional of the output so every output
    element contributes.  O(total params) forward evaluations; keep nets
    small.
    """
    x = np.asarray(x, dtype=np.float64)
    if rng is None:
        rng = np.random.default_rng(0)
    y, tape = net.forward(x)
    w = rng.standard_normal(y.shape)
    grads, _ = net.backward(tape, w)

    def loss():
        out, _ = net.forward(x, want_tape=False)
        return float(np.sum(w * out))

    max_rel = 0.0
    n = 0
    for p, g in zip(net.params, grads):
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + eps
            f_plus = loss()
            flat_p[i] = orig - eps
            f_minus = loss()
            flat_p[i] = orig
            num = (f_plus - f_minus) / (2.0 * eps)
            denom = max(abs(num), abs(flat_g[i]), 1e-8)
            max_rel = max(max_rel, abs(num - flat_g[i]) / denom)
            n += 1
    return GradCheckReport(max_rel, tolerance, n)
