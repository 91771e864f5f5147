"""Soft actor-critic on visual features: squashed-Gaussian policy, twin
critics with Polyak targets, and learned temperature."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import architectures as arch
from .numerics import AdamState, Network, adam_step
from .numerics import autodiff as ad
from .numerics.network import apply_network

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
LOG2 = math.log(2.0)
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass
class SacConfig:
    """Published defaults: Adam at 3e-5, batches of 128, reward scale 100,
    a million-slot buffer, two hidden layers of 128 LeakyReLU units, and a
    0.99 discount.  Polyak rate and target entropy follow common practice."""

    lr: float = 3e-5
    batch_size: int = 128
    reward_scale: float = 100.0
    buffer_size: int = 1_000_000
    hidden: int = 128
    gamma: float = 0.99
    tau: float = 0.005
    alpha_init: float = 1.0
    target_entropy: float | None = None  # defaults to -action_dim

    def __post_init__(self):
        for name in ("lr", "batch_size", "reward_scale", "buffer_size",
                     "hidden", "gamma", "tau", "alpha_init"):
            if getattr(self, name) <= 0:
                raise ValueError(f"SacConfig.{name} must be positive")

    def with_overrides(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


class SacAgent:
    def __init__(self, latent_dim, action_dim, cfg: SacConfig, rng):
        self.cfg = cfg
        self.action_dim = action_dim
        self.latent_dim = latent_dim
        self.target_entropy = (
            -float(action_dim) if cfg.target_entropy is None else cfg.target_entropy
        )
        self.policy = Network(arch.policy_spec(latent_dim, action_dim, cfg.hidden), rng=rng)
        self.q1 = Network(arch.critic_spec(latent_dim, action_dim, cfg.hidden), rng=rng)
        self.q2 = Network(arch.critic_spec(latent_dim, action_dim, cfg.hidden), rng=rng)
        self.q1_target = Network(self.q1.spec, params=[p.copy() for p in self.q1.params])
        self.q2_target = Network(self.q2.spec, params=[p.copy() for p in self.q2.params])
        self.log_alpha = np.array([math.log(cfg.alpha_init)])
        self.policy_adam = AdamState.for_params(self.policy.params, cfg.lr)
        self.q_adam = AdamState.for_params(self.q1.params + self.q2.params, cfg.lr)
        self.alpha_adam = AdamState.for_params([self.log_alpha], cfg.lr)

    @property
    def alpha(self):
        return float(np.exp(self.log_alpha[0]))

    def set_lr(self, lr):
        for st in (self.policy_adam, self.q_adam, self.alpha_adam):
            st.lr = float(lr)

    # ---------------------------------------------------------------- policy

    def _policy_dist(self, z_var, param_vars=None):
        if param_vars is None:
            param_vars = [ad.Var(p, requires_grad=False) for p in self.policy.params]
        out = apply_network(self.policy.spec, param_vars, z_var)
        mean = ad.take_cols(out, 0, self.action_dim)
        log_std = ad.clip(
            ad.take_cols(out, self.action_dim, 2 * self.action_dim),
            LOG_STD_MIN, LOG_STD_MAX,
        )
        if not np.all(np.isfinite(log_std.data)):
            raise FloatingPointError("policy emitted non-finite log-std")
        return mean, log_std

    def _squash(self, mean, log_std, noise):
        """Reparameterized tanh-Gaussian sample and its log-probability."""
        std = ad.exp(log_std)
        u = mean + std * ad.Var(noise, requires_grad=False)
        a = ad.tanh(u)
        gauss = (
            ad.square((u - mean) / std) * (-0.5)
            - log_std
            - HALF_LOG_2PI
        )
        # log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)), evaluated stably
        squash_corr = (LOG2 - u - ad.softplus(u * (-2.0))) * 2.0
        logp = ad.vsum(gauss - squash_corr, axis=1)
        return a, logp

    def act(self, z, mode="stochastic", rng=None):
        """Single action from features. Components always land in (-1, 1)."""
        if not np.all(np.isfinite(z)):
            raise FloatingPointError("non-finite policy input")
        with ad.no_grad():
            mean, log_std = self._policy_dist(ad.Var(np.asarray(z)[None]))
            if mode == "deterministic":
                a = np.tanh(mean.data[0])
            else:
                if rng is None:
                    raise ValueError("stochastic action needs an rng")
                noise = rng.standard_normal((1, self.action_dim))
                a = self._squash(mean, log_std, noise)[0].data[0]
        # float64 tanh saturates to exactly +-1 for |u| > ~19; keep the
        # emitted action strictly inside the open box
        return np.clip(a, -1.0 + 1e-9, 1.0 - 1e-9)

    def log_prob(self, z, action_pre_tanh):
        """Log-density of tanh(u) at u = action_pre_tanh, for tests."""
        with ad.no_grad():
            mean, log_std = self._policy_dist(ad.Var(np.asarray(z)[None]))
            noise = (action_pre_tanh - mean.data[0]) / np.exp(log_std.data[0])
            _, logp = self._squash(mean, log_std, noise[None])
        return float(logp.data[0])

    # --------------------------------------------------------------- updates

    def critic_update(self, z, action, reward, z1, done, rng):
        """One TD step toward r + gamma (1-done) (min Q_target - alpha log pi)."""
        cfg = self.cfg
        with ad.no_grad():
            mean, log_std = self._policy_dist(ad.Var(z1))
            noise = rng.standard_normal(mean.data.shape)
            a1, logp1 = self._squash(mean, log_std, noise)
            q_in1 = ad.concat([ad.Var(z1), a1], axis=1)
            q1t = self._apply(self.q1_target, q_in1).data[:, 0]
            q2t = self._apply(self.q2_target, q_in1).data[:, 0]
            target = reward + cfg.gamma * (1.0 - done) * (
                np.minimum(q1t, q2t) - self.alpha * logp1.data
            )

        q1_vars = [ad.Var(p) for p in self.q1.params]
        q2_vars = [ad.Var(p) for p in self.q2.params]
        q_in = ad.Var(np.concatenate([z, action], axis=1), requires_grad=False)
        t_var = ad.Var(target[:, None], requires_grad=False)
        d1 = apply_network(self.q1.spec, q1_vars, q_in) - t_var
        d2 = apply_network(self.q2.spec, q2_vars, q_in) - t_var
        loss = ad.vmean(ad.square(d1)) + ad.vmean(ad.square(d2))
        if not np.isfinite(loss.data):
            raise FloatingPointError(f"non-finite critic loss {loss.data!r}")
        loss.backward()
        params = self.q1.params + self.q2.params
        grads = [
            (v.grad if v.grad is not None else np.zeros_like(v.data))
            for v in q1_vars + q2_vars
        ]
        adam_step(params, grads, self.q_adam)
        self._polyak()
        return float(loss.data)

    def actor_update(self, z, rng):
        p_vars = [ad.Var(p) for p in self.policy.params]
        mean, log_std = self._policy_dist(ad.Var(z, requires_grad=False), p_vars)
        noise = rng.standard_normal(mean.data.shape)
        a, logp = self._squash(mean, log_std, noise)
        q_in = ad.concat([ad.Var(z, requires_grad=False), a], axis=1)
        qmin = ad.minimum(self._apply(self.q1, q_in), self._apply(self.q2, q_in))
        loss = ad.vmean(logp * self.alpha - ad.reshape(qmin, (qmin.data.shape[0],)))
        if not np.isfinite(loss.data):
            raise FloatingPointError(f"non-finite actor loss {loss.data!r}")
        loss.backward()
        grads = [
            (v.grad if v.grad is not None else np.zeros_like(v.data)) for v in p_vars
        ]
        adam_step(self.policy.params, grads, self.policy_adam)
        return float(loss.data), logp.data.copy()

    def alpha_update(self, logp):
        la = ad.Var(self.log_alpha)
        loss = ad.vmean(la * (-(logp + self.target_entropy)))
        loss.backward()
        adam_step([self.log_alpha], [la.grad], self.alpha_adam)
        return float(loss.data)

    def _polyak(self):
        tau = self.cfg.tau
        for main, targ in ((self.q1, self.q1_target), (self.q2, self.q2_target)):
            for p, pt in zip(main.params, targ.params):
                pt *= 1.0 - tau
                pt += tau * p

    @staticmethod
    def _apply(net, x_var):
        return apply_network(net.spec, [ad.Var(p, requires_grad=False) for p in net.params], x_var)

    # ------------------------------------------------------------- checkpoint

    def networks(self):
        return {
            "policy": self.policy,
            "q1": self.q1,
            "q2": self.q2,
            "q1_target": self.q1_target,
            "q2_target": self.q2_target,
        }

    def state_dict(self):
        out = {"log_alpha": self.log_alpha.copy()}
        for name, net in self.networks().items():
            for i, p in enumerate(net.params):
                out[f"{name}/{i}"] = p
        for label, st in (
            ("policy_adam", self.policy_adam),
            ("q_adam", self.q_adam),
            ("alpha_adam", self.alpha_adam),
        ):
            for i, (m, v) in enumerate(zip(st.m, st.v)):
                out[f"{label}_m/{i}"] = m
                out[f"{label}_v/{i}"] = v
            out[f"{label}_step"] = np.int64(st.step_count)
        return out

    def load_state_dict(self, state):
        self.log_alpha[...] = state["log_alpha"]
        for name, net in self.networks().items():
            for i in range(len(net.params)):
                net.params[i][...] = state[f"{name}/{i}"]
        for label, st in (
            ("policy_adam", self.policy_adam),
            ("q_adam", self.q_adam),
            ("alpha_adam", self.alpha_adam),
        ):
            for i in range(len(st.m)):
                st.m[i][...] = state[f"{label}_m/{i}"]
                st.v[i][...] = state[f"{label}_v/{i}"]
            st.step_count = int(state[f"{label}_step"])
