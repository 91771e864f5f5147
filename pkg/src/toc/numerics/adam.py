"""Adam with bias correction, operating on flat lists of float64 arrays."""

from __future__ import annotations

import numpy as np


class NonFiniteGradError(FloatingPointError):
    pass


class AdamState:
    """First/second moments plus step counter for one parameter list."""

    def __init__(self, param_shapes, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.step_count = 0
        self.m = [np.zeros(s, dtype=np.float64) for s in param_shapes]
        self.v = [np.zeros(s, dtype=np.float64) for s in param_shapes]

    @classmethod
    def for_params(cls, params, lr, **kw):
        return cls([p.shape for p in params], lr, **kw)


def adam_step(params, grads, state: AdamState, names=None):
    """One in-place Adam update.  Raises on non-finite gradients, naming
    the offending array; guarantees finite parameters on return."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params/grads/state length mismatch")
    for i, g in enumerate(grads):
        if not np.all(np.isfinite(g)):
            label = names[i] if names else f"param[{i}]"
            raise NonFiniteGradError(f"non-finite gradient for {label}")
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state
