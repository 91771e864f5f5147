"""Cross-modal intrinsic reward: visual encoder, touch decoder, latent
forward dynamics, and the reward variants used as baselines.

The reward for a transition is built from raw (non-squared) L2 prediction
errors.  For the main variant the touch-reconstruction error and the
latent forward-dynamics error are blended with a factor lam in [0, 1]:

    r = (1 - lam) * l_touch + lam * l_fdm

lam = 0 keeps only the touch term (the "pure" variant), lam = 1 keeps only
the visual forward term (which is also what the icm variant rewards).
"""

from __future__ import annotations

import numpy as np

from . import architectures as arch
from .numerics import AdamState, Network, adam_step
from .numerics import autodiff as ad
from .numerics.network import apply_network

VARIANTS = ("toc", "toc-pure", "icm", "rnd", "disagreement", "toc-future")
FEATURE_MODES = ("learned", "random-fixed", "idf")
ENSEMBLE_SIZE = 5


def intrinsic_reward(l_touch, l_fdm, lam):
    """Convex blend of the two prediction errors."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam must lie in [0, 1], got {lam}")
    return (1.0 - lam) * l_touch + lam * l_fdm


class CuriosityModule:
    """Prediction networks plus per-variant reward computation.

    One Adam state covers every trainable array; random-fixed encoders are
    simply left out of the trainable list so their parameters can never
    move after initialization.
    """

    def __init__(self, image_size, latent_dim, touch_dim, action_dim, rng,
                 variant="toc", lam=0.5, feature_mode="learned",
                 lr=3e-5, profile="desk", dec_hidden=64, fdm_hidden=None):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        if feature_mode not in FEATURE_MODES:
            raise ValueError(f"unknown feature mode {feature_mode!r}")
        if variant in ("rnd", "disagreement"):
            feature_mode = "random-fixed"  # these baselines run on fixed features
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"lam must lie in [0, 1], got {lam}")
        self.variant = variant
        self.lam = float(lam)
        self.feature_mode = feature_mode
        self.latent_dim = latent_dim
        self.touch_dim = touch_dim
        self.action_dim = action_dim

        self.enc = Network(arch.encoder_spec(profile, image_size, latent_dim), rng=rng)
        self.dec = Network(arch.decoder_spec(latent_dim, touch_dim, dec_hidden), rng=rng)
        self.fdm = Network(arch.forward_model_spec(latent_dim, action_dim, fdm_hidden), rng=rng)
        self.idf = None
        self.tfm = None
        self.rnd_target = None
        self.rnd_predictor = None
        self.ensemble = None
        if feature_mode == "idf":
            self.idf = Network(arch.inverse_dynamics_spec(latent_dim, action_dim), rng=rng)
        if variant == "toc-future":
            self.tfm = Network(arch.touch_forward_spec(touch_dim, action_dim), rng=rng)
        if variant == "rnd":
            self.rnd_target = Network(arch.rnd_spec(latent_dim), rng=rng)
            self.rnd_predictor = Network(arch.rnd_spec(latent_dim), rng=rng)
        if variant == "disagreement":
            self.ensemble = [
                Network(arch.forward_model_spec(latent_dim, action_dim, fdm_hidden), rng=rng)
                for _ in range(ENSEMBLE_SIZE)
            ]

        self._groups = self._trainable_groups()
        self.adam = AdamState.for_params(self._flat_params(), lr)

    # -------------------------------------------------------------- plumbing

    def _trainable_groups(self):
        groups = []
        if self.variant in ("toc", "toc-pure", "icm", "toc-future"):
            if self.feature_mode == "learned" or self.feature_mode == "idf":
                groups.append(("enc", self.enc))
            groups.append(("dec", self.dec))
            groups.append(("fdm", self.fdm))
            if self.idf is not None:
                groups.append(("idf", self.idf))
            if self.tfm is not None:
                groups.append(("tfm", self.tfm))
        elif self.variant == "rnd":
            groups.append(("rnd_predictor", self.rnd_predictor))
        elif self.variant == "disagreement":
            for k, net in enumerate(self.ensemble):
                groups.append((f"ensemble{k}", net))
        return groups

    def _flat_params(self):
        return [p for _, net in self._groups for p in net.params]

    def _param_names(self):
        return [
            f"{name}[{i}]"
            for name, net in self._groups
            for i in range(len(net.params))
        ]

    def networks(self):
        """name -> Network for every net this variant owns."""
        out = {"enc": self.enc, "dec": self.dec, "fdm": self.fdm}
        for name, net in (("idf", self.idf), ("tfm", self.tfm),
                          ("rnd_target", self.rnd_target),
                          ("rnd_predictor", self.rnd_predictor)):
            if net is not None:
                out[name] = net
        if self.ensemble is not None:
            for k, net in enumerate(self.ensemble):
                out[f"ensemble{k}"] = net
        return out

    @staticmethod
    def _batched(images):
        images = np.asarray(images, dtype=np.float64)
        if images.ndim == 2:
            images = images[None]
        return images[:, None, :, :]  # add channel axis

    # -------------------------------------------------------------- inference

    def encode(self, images):
        """Visual features, no gradient. (H,W) -> (D,) or (B,H,W) -> (B,D)."""
        x = self._batched(images)
        y, _ = self.enc.forward(x, want_tape=False)
        return y[0] if np.asarray(images).ndim == 2 else y

    def touch_loss(self, image, touch):
        z = self.encode(image)
        pred, _ = self.dec.forward(z, want_tape=False)
        return float(np.linalg.norm(pred - np.asarray(touch, dtype=np.float64)))

    def fdm_loss(self, image_t, action, image_t1):
        z = self.encode(image_t)
        z1 = self.encode(image_t1)
        pred, _ = self.fdm.forward(np.concatenate([z, action]), want_tape=False)
        return float(np.linalg.norm(pred - z1))

    def inverse_dynamics_loss(self, image_t, image_t1, action):
        if self.feature_mode != "idf":
            raise RuntimeError("inverse dynamics head only exists in idf mode")
        z = self.encode(image_t)
        z1 = self.encode(image_t1)
        pred, _ = self.idf.forward(np.concatenate([z, z1]), want_tape=False)
        return float(np.linalg.norm(pred - np.asarray(action, dtype=np.float64)))

    def touch_future_loss(self, touch_t, action, touch_t1):
        if self.tfm is None:
            raise RuntimeError("touch forward model only exists for toc-future")
        pred, _ = self.tfm.forward(np.concatenate([touch_t, action]), want_tape=False)
        return float(np.linalg.norm(pred - np.asarray(touch_t1, dtype=np.float64)))

    # ---------------------------------------------------------------- rewards

    def batch_errors(self, batch):
        """Per-sample l_touch and l_fdm (and extras) without building graphs."""
        with ad.no_grad():
            x = ad.Var(self._batched(batch["image"]))
            x1 = ad.Var(self._batched(batch["next_image"]))
            z = self._apply(self.enc, x)
            z1 = self._apply(self.enc, x1)
            out = {}
            pred_touch = self._apply(self.dec, z)
            out["l_touch"] = ad.row_norm(pred_touch - ad.Var(batch["touch"])).data
            fdm_in = ad.concat([z, ad.Var(batch["action"])], axis=1)
            out["l_fdm"] = ad.row_norm(self._apply(self.fdm, fdm_in) - z1).data
            if self.tfm is not None:
                tf_in = ad.concat([ad.Var(batch["touch"]), ad.Var(batch["action"])], axis=1)
                out["l_tfm"] = ad.row_norm(
                    self._apply(self.tfm, tf_in) - ad.Var(batch["next_touch"])
                ).data
            if self.variant == "rnd":
                out["l_rnd"] = ad.row_norm(
                    self._apply(self.rnd_predictor, z) - self._apply(self.rnd_target, z)
                ).data
            if self.variant == "disagreement":
                preds = np.stack(
                    [self._apply(net, fdm_in).data for net in self.ensemble]
                )
                out["l_disagree"] = preds.var(axis=0).sum(axis=-1)
        return out

    def rewards(self, batch):
        """Per-sample intrinsic reward for this module's variant."""
        errs = self.batch_errors(batch)
        return self.rewards_from_errors(errs), errs

    def errors_from_latents(self, z, z1, batch):
        """Prediction errors for a batch whose features are already encoded."""
        with ad.no_grad():
            z_var, z1_var = ad.Var(z), ad.Var(z1)
            pred_touch = self._apply(self.dec, z_var)
            l_touch = ad.row_norm(pred_touch - ad.Var(batch["touch"])).data
            fdm_in = ad.concat([z_var, ad.Var(batch["action"])], axis=1)
            l_fdm = ad.row_norm(self._apply(self.fdm, fdm_in) - z1_var).data
        return {"l_touch": l_touch, "l_fdm": l_fdm}

    def rewards_from_errors(self, errs):
        if self.variant == "toc":
            return intrinsic_reward(errs["l_touch"], errs["l_fdm"], self.lam)
        if self.variant == "toc-pure":
            return errs["l_touch"].copy()
        if self.variant == "icm":
            return errs["l_fdm"].copy()
        if self.variant == "toc-future":
            return (errs["l_touch"] + errs["l_fdm"] + errs["l_tfm"]) / 3.0
        if self.variant == "rnd":
            return errs["l_rnd"].copy()
        if self.variant == "disagreement":
            return errs["l_disagree"].copy()
        raise ValueError(f"unknown variant {self.variant!r}")

    @staticmethod
    def _apply(net, x_var):
        return apply_network(net.spec, [ad.Var(p, requires_grad=False) for p in net.params], x_var)

    # ---------------------------------------------------------------- training

    def update(self, batch):
        """One Adam step on this variant's prediction losses.

        Returns (report, per_sample) where per_sample holds the pre-step
        per-transition errors, so rewards derived from them describe the
        model the batch was actually scored with.
        """
        per_sample = {}
        param_vars = {
            name: [ad.Var(p) for p in net.params] for name, net in self._groups
        }

        def net_out(name, net, x):
            if name in param_vars:
                return apply_network(net.spec, param_vars[name], x)
            return self._apply(net, x)

        x = ad.Var(self._batched(batch["image"]), requires_grad=False)
        x1 = self._batched(batch["next_image"])
        actions = ad.Var(batch["action"], requires_grad=False)
        report = {}
        losses = []

        if self.variant in ("toc", "toc-pure", "icm", "toc-future"):
            z = net_out("enc", self.enc, x)
            with ad.no_grad():
                z1_const = self._apply(self.enc, ad.Var(x1)).data  # stop-gradient target
            per_sample["z"] = z.data.copy()
            per_sample["z1"] = z1_const.copy()
            z_for_heads = z if self.feature_mode == "learned" else ad.Var(z.data, requires_grad=False)

            pred_touch = net_out("dec", self.dec, z_for_heads)
            l_touch = ad.row_norm(pred_touch - ad.Var(batch["touch"], requires_grad=False))
            fdm_in = ad.concat([z_for_heads, actions], axis=1)
            l_fdm = ad.row_norm(net_out("fdm", self.fdm, fdm_in) - ad.Var(z1_const, requires_grad=False))
            losses += [ad.vmean(l_touch), ad.vmean(l_fdm)]
            per_sample["l_touch"] = l_touch.data.copy()
            per_sample["l_fdm"] = l_fdm.data.copy()
            report["l_touch"] = float(np.mean(l_touch.data))
            report["l_fdm"] = float(np.mean(l_fdm.data))

            if self.feature_mode == "idf":
                z1_idf = net_out("enc", self.enc, ad.Var(x1, requires_grad=False))
                idf_in = ad.concat([z, z1_idf], axis=1)
                l_idf = ad.row_norm(net_out("idf", self.idf, idf_in) - actions)
                losses.append(ad.vmean(l_idf))
                report["l_idf"] = float(np.mean(l_idf.data))
            if self.tfm is not None:
                tf_in = ad.concat([ad.Var(batch["touch"], requires_grad=False), actions], axis=1)
                l_tfm = ad.row_norm(
                    net_out("tfm", self.tfm, tf_in)
                    - ad.Var(batch["next_touch"], requires_grad=False)
                )
                losses.append(ad.vmean(l_tfm))
                per_sample["l_tfm"] = l_tfm.data.copy()
                report["l_tfm"] = float(np.mean(l_tfm.data))
        elif self.variant == "rnd":
            with ad.no_grad():
                z_const = self._apply(self.enc, x).data
                z1_const = self._apply(self.enc, ad.Var(x1)).data
                target = self._apply(self.rnd_target, ad.Var(z_const)).data
            per_sample["z"] = z_const.copy()
            per_sample["z1"] = z1_const.copy()
            z_in = ad.Var(z_const, requires_grad=False)
            l_rnd = ad.row_norm(
                net_out("rnd_predictor", self.rnd_predictor, z_in)
                - ad.Var(target, requires_grad=False)
            )
            losses.append(ad.vmean(l_rnd))
            per_sample["l_rnd"] = l_rnd.data.copy()
            report["l_rnd"] = float(np.mean(l_rnd.data))
        elif self.variant == "disagreement":
            with ad.no_grad():
                z_const = self._apply(self.enc, x).data
                z1_const = self._apply(self.enc, ad.Var(x1)).data
            per_sample["z"] = z_const.copy()
            per_sample["z1"] = z1_const.copy()
            fdm_in = ad.concat([ad.Var(z_const, requires_grad=False), actions], axis=1)
            target = ad.Var(z1_const, requires_grad=False)
            per_head = []
            preds = []
            for k, net in enumerate(self.ensemble):
                out_k = net_out(f"ensemble{k}", net, fdm_in)
                preds.append(out_k.data)
                l_k = ad.vmean(ad.row_norm(out_k - target))
                per_head.append(l_k)
                losses.append(l_k)
            per_sample["l_disagree"] = np.stack(preds).var(axis=0).sum(axis=-1)
            report["l_ensemble"] = float(np.mean([l.data for l in per_head]))

        total = losses[0]
        for extra in losses[1:]:
            total = total + extra
        if not np.isfinite(total.data):
            raise FloatingPointError(
                f"non-finite curiosity loss {total.data!r} (variant {self.variant})"
            )
        total.backward()

        params = self._flat_params()
        grads = []
        for name, _ in self._groups:
            for pv in param_vars[name]:
                grads.append(pv.grad if pv.grad is not None else np.zeros_like(pv.data))
        adam_step(params, grads, self.adam, names=self._param_names())
        report["loss"] = float(total.data)
        return report, per_sample

    # ------------------------------------------------------------- checkpoint

    def state_dict(self):
        out = {"lam": np.float64(self.lam)}
        for name, net in self.networks().items():
            for i, p in enumerate(net.params):
                out[f"{name}/{i}"] = p
        for i, (m, v) in enumerate(zip(self.adam.m, self.adam.v)):
            out[f"adam_m/{i}"] = m
            out[f"adam_v/{i}"] = v
        out["adam_step"] = np.int64(self.adam.step_count)
        return out

    def load_state_dict(self, state):
        self.lam = float(state["lam"])
        for name, net in self.networks().items():
            for i in range(len(net.params)):
                net.params[i][...] = state[f"{name}/{i}"]
        for i in range(len(self.adam.m)):
            self.adam.m[i][...] = state[f"adam_m/{i}"]
            self.adam.v[i][...] = state[f"adam_v/{i}"]
        self.adam.step_count = int(state["adam_step"])
