"""Two-phase training loop: curiosity-driven exploration, then adaptation
on the sparse task reward with policy, critics, and buffer carried over.

Rewards used by the learner are recomputed at sample time: during
exploration each drawn batch is scored by the current prediction networks;
during adaptation the stored task rewards are used.  Both streams pass
through the same reward scale, and the learner never mixes them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, config_to_text, parse_config_text
from .curiosity import CuriosityModule
from .env import action_dim, make_env
from .env.physics import PolygonBody
from .env.shapes import ShapeDescriptor
from .env.tasks import TOUCH_DIM
from .metrics import (
    EpisodeTrace,
    RunLog,
    episode_steps,
    object_movement,
    success_rate,
    touch_interaction,
)
from .replay import ReplayBuffer
from .rngstate import restore_rng, save_rng
from .sac import SacAgent, SacConfig


@dataclass
class EvalResult:
    success: float
    episode_steps: float
    touch_var: float
    touch_events: float
    obj_move: float
    traces: list


class Trainer:
    def __init__(self, cfg: RunConfig, seed: int):
        self.cfg = cfg
        self.seed = int(seed)
        ss = np.random.SeedSequence([0x70C, self.seed])
        env_ss, eval_ss, init_ss, act_ss, replay_ss, upd_ss = ss.spawn(6)

        adim = action_dim(cfg.task)
        shape_split = None if cfg.shape_split == "off" else cfg.shape_split
        env_kw = dict(
            image_size=cfg.image_size, horizon=cfg.horizon,
            shape_split=shape_split, shape_seed=cfg.shape_seed,
        )
        self.env = make_env(cfg.task, seed=env_ss, **env_kw)
        self.eval_env = make_env(cfg.task, seed=0, **env_kw)
        self._eval_seed_root = int(eval_ss.generate_state(1)[0] % (2**31))

        init_rng = np.random.default_rng(init_ss)
        curiosity_variant = "toc" if cfg.variant == "sac" else cfg.variant
        feature_mode = "random-fixed" if cfg.variant == "sac" else cfg.feature_mode
        self.curiosity = CuriosityModule(
            image_size=cfg.image_size, latent_dim=cfg.latent_dim,
            touch_dim=TOUCH_DIM, action_dim=adim, rng=init_rng,
            variant=curiosity_variant, lam=cfg.lam, feature_mode=feature_mode,
            lr=cfg.effective_curiosity_lr, profile=cfg.profile,
        )
        self.train_curiosity = cfg.variant != "sac"
        sac_cfg = SacConfig(
            lr=cfg.lr, batch_size=cfg.batch_size, reward_scale=cfg.reward_scale,
            buffer_size=cfg.buffer_size, hidden=cfg.hidden, gamma=cfg.gamma,
            tau=cfg.tau, alpha_init=cfg.alpha_init,
        )
        self.agent = SacAgent(cfg.latent_dim, adim, sac_cfg, init_rng)
        self.buffer = ReplayBuffer(cfg.buffer_size, seed=replay_ss)
        self.act_rng = np.random.default_rng(act_ss)
        self.upd_rng = np.random.default_rng(upd_ss)

        self.step = 0
        self.episode = 0
        self._ep_return = 0.0
        self._obs = None
        self._phase_overrides_applied = None
        self._accum = _LogAccumulator()
        self._last_eval = None

    # ------------------------------------------------------------- phase glue

    def phase_at(self, step):
        return "exploration" if step <= self.cfg.effective_exploration_steps else "adaptation"

    @property
    def phase(self):
        return self.phase_at(max(self.step, 1))

    def _apply_phase_overrides(self, phase):
        if self._phase_overrides_applied == phase:
            return
        self._phase_overrides_applied = phase
        cfg = self.cfg
        lr = cfg.explore_lr if phase == "exploration" else cfg.adapt_lr
        alpha = cfg.explore_alpha if phase == "exploration" else cfg.adapt_alpha
        if lr is not None:
            self.agent.set_lr(lr)
        elif phase == "adaptation":
            self.agent.set_lr(cfg.lr)
        if alpha is not None:
            self.agent.log_alpha[...] = np.log(alpha)

    # ---------------------------------------------------------------- running

    def run(self, log_path=None, switch_checkpoint=None, final_checkpoint=None,
            stop_after=None):
        """Advance from the current step to stop_after (default total_steps).

        A CSV row is appended every log_every steps, evaluation runs every
        eval_every steps, and checkpoints are written at the exploration to
        adaptation switch and at the end when paths are given.
        """
        cfg = self.cfg
        stop = cfg.total_steps if stop_after is None else min(stop_after, cfg.total_steps)
        log = RunLog(log_path) if log_path is not None else None
        switch_at = cfg.effective_exploration_steps

        if self._obs is None:
            self._obs = self.env.reset()
        obs = self._obs
        if self._last_eval is None:
            self._last_eval = self._evaluate()
            if log and self.step == 0:
                self._write_row(log)

        while self.step < stop:
            self.step += 1
            phase = self.phase_at(self.step)
            self._apply_phase_overrides(phase)

            if self.step <= cfg.start_steps:
                action = self.act_rng.uniform(-1.0, 1.0, self.env_action_dim)
            else:
                z = self.curiosity.encode(obs.image)
                action = self.agent.act(z, mode="stochastic", rng=self.act_rng)
            next_obs, reward, done, info = self.env.step(action)
            self.buffer.push(
                obs.image, obs.touch, action, reward,
                next_obs.image, next_obs.touch, done,
            )
            self._ep_return += reward
            if done:
                self._accum.add_episode(self._ep_return)
                self._ep_return = 0.0
                self.episode += 1
                obs = self.env.reset()
            else:
                obs = next_obs

            if self.step > cfg.start_steps and len(self.buffer) >= cfg.batch_size \
                    and self.step % cfg.update_every == 0:
                self._update(phase)

            if self.step % cfg.eval_every == 0:
                self._last_eval = self._evaluate()
            if log and self.step % cfg.log_every == 0:
                self._write_row(log)
            if switch_checkpoint and self.step == switch_at:
                self._obs = obs
                self.save(switch_checkpoint)

        self._obs = obs
        if final_checkpoint:
            self.save(final_checkpoint)
        if log:
            log.close()
        return self._last_eval

    @property
    def env_action_dim(self):
        return action_dim(self.cfg.task)

    def _update(self, phase):
        cfg = self.cfg
        batch = self.buffer.sample(cfg.batch_size)
        if phase == "exploration":
            report, per = self.curiosity.update(batch)
            r_int = self.curiosity.rewards_from_errors(per)
            z, z1 = per["z"], per["z1"]
            reward_used = cfg.reward_scale * r_int
            self._accum.add_curiosity(report, float(np.mean(r_int)))
        else:
            z = self.curiosity.encode(batch["image"])
            z1 = self.curiosity.encode(batch["next_image"])
            reward_used = cfg.reward_scale * batch["reward_ext"]
            if self.train_curiosity:
                errs = self.curiosity.errors_from_latents(z, z1, batch)
                self._accum.add_curiosity(
                    {k: float(np.mean(v)) for k, v in errs.items()}, None
                )
        l_critic = self.agent.critic_update(
            z, batch["action"], reward_used, z1, batch["done"], self.upd_rng
        )
        l_actor, logp = self.agent.actor_update(z, self.upd_rng)
        if self.cfg.alpha_autotune:
            self.agent.alpha_update(logp)
        self._accum.add_sac(l_critic, l_actor)

    # ------------------------------------------------------------- evaluation

    def _evaluate(self):
        cfg = self.cfg
        traces = []
        eval_index = self.step // cfg.eval_every
        for ep in range(cfg.eval_episodes):
            seed = self._eval_seed_root + 100_000 * eval_index + ep
            obs = self.eval_env.reset(seed=seed)
            trace = EpisodeTrace(task=cfg.task, phase=self.phase)
            done = False
            while not done:
                z = self.curiosity.encode(obs.image)
                action = self.agent.act(z, mode="deterministic")
                obs, reward, done, info = self.eval_env.step(action)
                trace.record(
                    obs.touch, info["object_position"], self.eval_env.mount.copy(),
                    info["door_angle"], reward, done,
                )
            traces.append(trace)
        tvars, tevents, moves = [], [], []
        for t in traces:
            var, events = touch_interaction(t)
            tvars.append(var)
            tevents.append(events)
            moves.append(object_movement(t)[0])
        return EvalResult(
            success=success_rate(traces),
            episode_steps=episode_steps(traces),
            touch_var=float(np.mean(tvars)),
            touch_events=float(np.mean(tevents)),
            obj_move=float(np.mean(moves)),
            traces=traces,
        )

    def _write_row(self, log):
        acc = self._accum
        ev = self._last_eval
        log.write(
            step=self.step,
            episode=self.episode,
            phase=self.phase,
            variant=self.cfg.variant,
            seed=self.seed,
            r_int_mean=acc.mean_r_int(),
            extrinsic_return=acc.mean_return(),
            success=ev.success,
            episode_steps=ev.episode_steps,
            touch_var=ev.touch_var,
            touch_events=ev.touch_events,
            obj_move=ev.obj_move,
            l_touch=acc.mean_loss("l_touch"),
            l_fdm=acc.mean_loss("l_fdm"),
            l_critic=acc.mean_loss("l_critic"),
            l_actor=acc.mean_loss("l_actor"),
            alpha=self.agent.alpha,
        )
        self._accum = _LogAccumulator()

    # ------------------------------------------------------------- checkpoint

    def save(self, path):
        if self._obs is None:
            self._obs = self.env.reset()
        meta = {
            "config": config_to_text(self.cfg),
            "seed": self.seed,
            "step": self.step,
            "episode": self.episode,
            "phase": self.phase,
            "ep_return": self._ep_return,
        }
        save_checkpoint(path, meta, {
            "curiosity": self.curiosity.state_dict(),
            "agent": self.agent.state_dict(),
            "buffer": self.buffer.state_dict(),
            "rng": {
                "env": np.str_(save_rng(self.env._rng)),
                "act": np.str_(save_rng(self.act_rng)),
                "upd": np.str_(save_rng(self.upd_rng)),
            },
            "scene": self._scene_arrays(),
        })

    def _scene_arrays(self):
        env = self.env
        out = {
            "mount": env.mount.copy(),
            "aperture": np.float64(env.aperture),
            "yaw": np.float64(env.yaw),
            "step_count": np.int64(env.step_count),
            "finger_impulses": env._finger_impulses.copy(),
            "finger_torques": env._finger_torques.copy(),
        }
        if env.goal is not None:
            out["goal"] = env.goal.copy()
        if env.object is not None:
            out["object_position"] = env.object.position.copy()
            out["object_velocity"] = env.object.velocity.copy()
            out["object_angle"] = np.float64(env.object.angle)
            out["object_omega"] = np.float64(env.object.omega)
            out["shape_vertices"] = env.object.shape.vertices.copy()
            out["shape_mass"] = np.float64(env.object.shape.mass)
            out["shape_friction"] = np.float64(env.object.shape.friction)
        if env.door is not None:
            out["door_hinge"] = env.door.hinge.copy()
            out["door_rest"] = np.float64(env.door.rest_direction)
            out["door_theta"] = np.float64(env.door.theta)
            out["door_omega"] = np.float64(env.door.omega)
        return out

    def _restore_scene(self, state):
        env = self.env
        env.reset()  # builds task structures; every field is overwritten below
        env.mount = np.asarray(state["mount"], dtype=np.float64)
        env.aperture = float(state["aperture"])
        env.yaw = float(state["yaw"])
        env.step_count = int(state["step_count"])
        env._finger_impulses = np.asarray(state["finger_impulses"], dtype=np.float64)
        env._finger_torques = np.asarray(state["finger_torques"], dtype=np.float64)
        env.done = False
        env.done_reason = None
        if "goal" in state:
            env.goal = np.asarray(state["goal"], dtype=np.float64)
        if "object_position" in state:
            shape = ShapeDescriptor(
                np.asarray(state["shape_vertices"], dtype=np.float64),
                float(state["shape_mass"]),
                float(state["shape_friction"]),
            )
            body = PolygonBody(shape, np.asarray(state["object_position"], dtype=np.float64))
            body.velocity = np.asarray(state["object_velocity"], dtype=np.float64)
            body.angle = float(state["object_angle"])
            body.omega = float(state["object_omega"])
            env.object = body
        if "door_theta" in state:
            env.door.hinge = np.asarray(state["door_hinge"], dtype=np.float64)
            env.door.rest_direction = float(state["door_rest"])
            env.door.theta = float(state["door_theta"])
            env.door.omega = float(state["door_omega"])
        self._obs = env._observe()

    @classmethod
    def restore(cls, path):
        meta, sections = load_checkpoint(path)
        cfg = parse_config_text(meta["config"])
        t = cls(cfg, seed=meta["seed"])
        t.curiosity.load_state_dict(sections["curiosity"])
        t.agent.load_state_dict(sections["agent"])
        t.buffer.load_state_dict(sections["buffer"])
        t._restore_scene(sections["scene"])
        restore_rng(t.env._rng, str(sections["rng"]["env"]))
        restore_rng(t.act_rng, str(sections["rng"]["act"]))
        restore_rng(t.upd_rng, str(sections["rng"]["upd"]))
        t.step = int(meta["step"])
        t.episode = int(meta["episode"])
        t._ep_return = float(meta["ep_return"])
        return t


class _LogAccumulator:
    def __init__(self):
        self.returns = []
        self.r_ints = []
        self.losses = {}

    def add_episode(self, ret):
        self.returns.append(ret)

    def add_curiosity(self, report, r_int_mean):
        for k, v in report.items():
            self.losses.setdefault(k, []).append(v)
        if r_int_mean is not None:
            self.r_ints.append(r_int_mean)

    def add_sac(self, l_critic, l_actor):
        self.losses.setdefault("l_critic", []).append(l_critic)
        self.losses.setdefault("l_actor", []).append(l_actor)

    def mean_r_int(self):
        return float(np.mean(self.r_ints)) if self.r_ints else 0.0

    def mean_return(self):
        return float(np.mean(self.returns)) if self.returns else 0.0

    def mean_loss(self, key):
        vals = self.losses.get(key)
        return float(np.mean(vals)) if vals else 0.0


# ------------------------------------------------------------------ wrappers


def run_exploration_phase(cfg: RunConfig, seed, checkpoint_path, log_path=None):
    """Free exploration on the intrinsic reward; returns the checkpoint path."""
    t = Trainer(cfg, seed)
    if cfg.effective_exploration_steps == 0:
        t.save(checkpoint_path)  # nothing to explore: checkpoint equals init
        return checkpoint_path
    t.run(log_path=log_path, stop_after=cfg.effective_exploration_steps)
    t.save(checkpoint_path)
    return checkpoint_path


def run_adaptation_phase(cfg: RunConfig, checkpoint_path, log_path=None,
                         final_checkpoint_path=None):
    """Adaptation on the sparse task reward, resuming nets and buffer."""
    t = Trainer.restore(checkpoint_path)
    if config_to_text(t.cfg) != config_to_text(cfg):
        raise ValueError("checkpoint was produced under a different config")
    result = t.run(log_path=log_path, final_checkpoint=final_checkpoint_path)
    return result, t
