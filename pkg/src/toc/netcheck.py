"""Finite-difference verification across every network family in the
project, at sizes small enough for exhaustive central differences."""

from __future__ import annotations

import numpy as np

from . import architectures as arch
from .numerics import Conv, Dense, Network, NetworkSpec, grad_check

REDUCED_IMAGE = 12


def _reduced_encoder_spec():
    # same layer vocabulary as the full encoder, shrunk to a 12x12 input
    return NetworkSpec(
        (1, REDUCED_IMAGE, REDUCED_IMAGE),
        (Conv(4, 5, 2), Conv(6, 3, 1), Conv(8, 2, 1), Dense(10)),
    )


def network_inventory():
    """name -> (spec builder, input builder). Touch dim 10, actions 4."""
    latent, adim, touch = 10, 4, 10
    return {
        "encoder": (
            _reduced_encoder_spec,
            lambda rng: rng.random((2, 1, REDUCED_IMAGE, REDUCED_IMAGE)),
        ),
        "decoder": (
            lambda: arch.decoder_spec(latent, touch, hidden=12),
            lambda rng: rng.standard_normal((3, latent)),
        ),
        "forward_model": (
            lambda: arch.forward_model_spec(latent, adim, hidden=12),
            lambda rng: rng.standard_normal((3, latent + adim)),
        ),
        "inverse_dynamics": (
            lambda: arch.inverse_dynamics_spec(latent, adim, hidden=12),
            lambda rng: rng.standard_normal((3, 2 * latent)),
        ),
        "touch_forward": (
            lambda: arch.touch_forward_spec(touch, adim, hidden=12),
            lambda rng: rng.standard_normal((3, touch + adim)),
        ),
        "rnd": (
            lambda: arch.rnd_spec(latent, hidden=12, out_dim=8),
            lambda rng: rng.standard_normal((3, latent)),
        ),
        "policy": (
            lambda: arch.policy_spec(latent, adim, hidden=12),
            lambda rng: rng.standard_normal((3, latent)),
        ),
        "critic": (
            lambda: arch.critic_spec(latent, adim, hidden=12),
            lambda rng: rng.standard_normal((3, latent + adim)),
        ),
    }


def check_all_networks(n_seeds=10, tolerance=1e-4):
    """Returns a list of (name, seed, GradCheckReport)."""
    results = []
    for name, (spec_fn, input_fn) in network_inventory().items():
        for seed in range(n_seeds):
            rng = np.random.default_rng(seed + 1)
            net = Network(spec_fn(), rng=rng)
            report = grad_check(net, input_fn(rng), tolerance=tolerance, rng=rng)
            results.append((name, seed, report))
    return results
