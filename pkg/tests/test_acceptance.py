"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The training-run criteria use the desk profile through the real CLI.  Run
directories are cached under .acceptance_cache keyed by their resolved
configuration, so a green suite can be re-verified cheaply; delete the
cache directory for a cold run.  Use `pytest -m "not slow"` to skip the
run-heavy criteria during development.
"""

import hashlib
import json
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from toc.config import config_to_text, parse_config_text
from toc.curiosity import CuriosityModule
from toc.metrics import read_run_csv
from toc.trainer import Trainer

PKG_ROOT = Path(__file__).resolve().parent.parent
CACHE = Path(os.environ.get("TOC_ACCEPT_CACHE", PKG_ROOT / ".acceptance_cache"))


def report(criterion, ok, detail):
    line = f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(f"\n{line}")
    assert ok, line


# ----------------------------------------------------------------- run cache


def desk_config_text(task, variant, seed, lam=0.5, shape_split="off", tag=""):
    cfg = parse_config_text(
        "\n".join([
            f"task = {task}",
            f"variant = {variant}",
            "profile = desk",
            f"lambda = {lam}",
            f"seeds = {seed}",
            f"shape_split = {shape_split}",
        ])
    )
    return config_to_text(cfg)


def run_dir_for(task, variant, seed, lam=0.5, shape_split="off", tag=""):
    text = desk_config_text(task, variant, seed, lam, shape_split) + tag
    key = hashlib.sha1(text.encode()).hexdigest()[:14]
    return CACHE / f"{task}_{variant}_lam{lam:g}_{shape_split}_seed{seed}{tag}_{key}"


def ensure_runs(specs, workers=2):
    """specs: list of dicts with task/variant/seed/lam/shape_split/tag.
    Launches missing runs through the CLI, two at a time."""
    CACHE.mkdir(exist_ok=True)
    jobs = []
    for spec in specs:
        d = run_dir_for(**spec)
        if not (d / "result.json").exists():
            jobs.append((spec, d))
    env = dict(os.environ, OMP_NUM_THREADS="1", OPENBLAS_NUM_THREADS="1")
    active = []
    pending = list(jobs)
    while pending or active:
        while pending and len(active) < workers:
            spec, d = pending.pop(0)
            d.mkdir(parents=True, exist_ok=True)
            cfg_path = d / "launch.txt"
            cfg_path.write_text(
                desk_config_text(**spec) + f"out_dir = {d}\n", encoding="utf-8"
            )
            cmd = [sys.executable, "-m", "toc.cli", "run", "--config", str(cfg_path)]
            active.append((subprocess.Popen(cmd, env=env,
                                            stdout=subprocess.DEVNULL,
                                            stderr=subprocess.PIPE), spec, d))
        still = []
        for proc, spec, d in active:
            if proc.poll() is None:
                still.append((proc, spec, d))
                continue
            if proc.returncode != 0:
                raise RuntimeError(
                    f"run failed for {spec}: {proc.stderr.read().decode()[-2000:]}"
                )
            inner = next(p for p in d.iterdir() if p.is_dir())
            for item in inner.iterdir():
                item.rename(d / item.name)
            inner.rmdir()
        active = still
        if active:
            time.sleep(1.0)
    return {tuple(sorted(s.items())): run_dir_for(**s) for s in specs}


def final_metrics(run_dir):
    return json.loads((run_dir / "result.json").read_text())


def spec_key(**kw):
    base = {"task": "playing", "variant": "toc", "seed": 0, "lam": 0.5,
            "shape_split": "off", "tag": ""}
    base.update(kw)
    return base


# -------------------------------------------------------------- criterion 1


def test_criterion_1_gradient_integrity():
    from toc.netcheck import check_all_networks

    t0 = time.time()
    results = check_all_networks(n_seeds=10, tolerance=1e-4)
    elapsed = time.time() - t0
    worst = max(r.max_rel_error for _, _, r in results)
    failures = [(n, s) for n, s, r in results if not r.passed]
    report(
        1,
        not failures and elapsed < 300,
        f"max rel error {worst:.2e} over {len(results)} checks "
        f"(8 network families x 10 seeds) in {elapsed:.0f}s",
    )


# -------------------------------------------------------------- criterion 2


def test_criterion_2_reward_endpoints_bitwise():
    t0 = time.time()
    rng = np.random.default_rng(0)
    n = 1000

    def build(variant, lam):
        return CuriosityModule(
            image_size=42, latent_dim=64, touch_dim=10, action_dim=4,
            rng=np.random.default_rng(1234), variant=variant, lam=lam,
        )

    batch = {
        "image": rng.integers(0, 256, (n, 42, 42)) / 255.0,
        "touch": rng.standard_normal((n, 10)),
        "action": rng.uniform(-1, 1, (n, 4)),
        "next_image": rng.integers(0, 256, (n, 42, 42)) / 255.0,
        "next_touch": rng.standard_normal((n, 10)),
        "reward_ext": np.zeros(n),
        "done": np.zeros(n),
    }
    r_lam0, _ = build("toc", 0.0).rewards(batch)
    r_pure, _ = build("toc-pure", 0.0).rewards(batch)
    r_lam1, _ = build("toc", 1.0).rewards(batch)
    r_icm, _ = build("icm", 0.0).rewards(batch)
    ok = np.array_equal(r_lam0, r_pure) and np.array_equal(r_lam1, r_icm)
    report(
        2,
        ok and time.time() - t0 < 60,
        f"lam=0 vs toc-pure and lam=1 vs icm bit-equal over {n} transitions "
        f"({time.time() - t0:.0f}s)",
    )


# -------------------------------------------------------------- criterion 3


@pytest.mark.slow
def test_criterion_3_cli_determinism():
    t0 = time.time()
    spec_a = spec_key(task="pushing", variant="toc", seed=7, tag="_copyA")
    spec_b = spec_key(task="pushing", variant="toc", seed=7, tag="_copyB")
    ensure_runs([spec_a, spec_b])
    csv_a = (run_dir_for(**spec_a) / "run.csv").read_bytes()
    csv_b = (run_dir_for(**spec_b) / "run.csv").read_bytes()
    report(
        3,
        csv_a == csv_b and len(csv_a) > 0,
        f"two desk pushing runs (seed 7) byte-identical CSVs "
        f"({len(csv_a)} bytes, {time.time() - t0:.0f}s)",
    )


# -------------------------------------------------------------- criterion 4


def test_criterion_4_phase_retention(tmp_path):
    t0 = time.time()
    cfg = parse_config_text("""
task = pushing
profile = desk
total_steps = 4000
exploration_steps = 2500
start_steps = 300
eval_every = 2000
eval_episodes = 2
log_every = 1000
""")
    t = Trainer(cfg, seed=2)
    path = tmp_path / "switch.npz"
    t.run(switch_checkpoint=path, stop_after=cfg.exploration_steps)

    live_agent = t.agent.state_dict()
    live_curiosity = t.curiosity.state_dict()
    live_len = len(t.buffer)

    restored = Trainer.restore(path)
    mismatches = []
    for k, v in restored.agent.state_dict().items():
        if not np.array_equal(np.asarray(v), np.asarray(live_agent[k])):
            mismatches.append(f"agent/{k}")
    for k, v in restored.curiosity.state_dict().items():
        if not np.array_equal(np.asarray(v), np.asarray(live_curiosity[k])):
            mismatches.append(f"curiosity/{k}")
    ok = not mismatches and len(restored.buffer) == live_len
    report(
        4,
        ok and time.time() - t0 < 300,
        f"buffer {live_len} transitions and every parameter array bit-equal "
        f"across the switch ({time.time() - t0:.0f}s)"
        + (f"; mismatches {mismatches[:4]}" if mismatches else ""),
    )


# -------------------------------------------------------------- criterion 5


def collect_play_transitions(seed, n_steps=2500):
    """Scripted chase-and-poke data with both contact and no-contact phases."""
    from toc.env import make_env

    env = make_env("playing", image_size=42, seed=seed)
    obs = env.reset()
    rng = np.random.default_rng(seed + 500)
    out = []
    mode, mode_left = "wander", 40
    for _ in range(n_steps):
        if mode_left <= 0:
            mode = "chase" if mode == "wander" else "wander"
            mode_left = 60 if mode == "chase" else 40
        if mode == "chase":
            d = env.object.position - env.mount
            a = np.array([*np.clip(d / 0.02, -1, 1), 0.0, -1.0])
        else:
            a = rng.uniform(-1, 1, 4)
        mode_left -= 1
        nxt, r, done, info = env.step(a)
        out.append((obs.image, obs.touch, a, nxt.image, nxt.touch))
        obs = env.reset() if done else nxt
    return out


def test_criterion_5_surprise_mechanism():
    t0 = time.time()
    ratios = []
    for seed in range(3):
        data = collect_play_transitions(seed)
        touches = np.stack([t[1] for t in data])
        forces = np.maximum(
            np.linalg.norm(touches[:, 4:6], axis=1),
            np.linalg.norm(touches[:, 7:9], axis=1),
        )
        contact_idx = np.where(forces > 1e-3)[0]
        free_idx = np.where(forces <= 1e-3)[0]
        assert len(contact_idx) >= 40, f"seed {seed}: too few contacts"
        holdout = free_idx[::5]
        train_free = np.setdiff1d(free_idx, holdout)

        module = CuriosityModule(
            image_size=42, latent_dim=64, touch_dim=10, action_dim=4,
            rng=np.random.default_rng(seed), variant="toc-pure", lr=1e-3,
        )
        rng = np.random.default_rng(seed + 99)
        images = np.stack([t[0] for t in data])
        actions = np.stack([t[2] for t in data])
        next_images = np.stack([t[3] for t in data])
        next_touches = np.stack([t[4] for t in data])
        for _ in range(400):
            idx = rng.choice(train_free, size=64, replace=False)
            module.update({
                "image": images[idx], "touch": touches[idx],
                "action": actions[idx], "next_image": next_images[idx],
                "next_touch": next_touches[idx],
                "reward_ext": np.zeros(64), "done": np.zeros(64),
            })

        def mean_touch_loss(idx):
            errs = module.batch_errors({
                "image": images[idx], "touch": touches[idx],
                "action": actions[idx], "next_image": next_images[idx],
                "next_touch": next_touches[idx],
            })
            return float(np.mean(errs["l_touch"]))

        on_contact = mean_touch_loss(contact_idx)
        on_free = mean_touch_loss(holdout)
        ratios.append(on_contact / on_free)
    ok = all(r >= 2.0 for r in ratios) and time.time() - t0 < 900
    report(
        5,
        ok,
        "contact-vs-free touch-loss ratios "
        + ", ".join(f"{r:.1f}x" for r in ratios)
        + f" (3 seeds, {time.time() - t0:.0f}s)",
    )


# -------------------------------------------------------------- criterion 6


@pytest.mark.slow
def test_criterion_6_interaction_ordering():
    t0 = time.time()
    specs = [spec_key(task="playing", variant=v, seed=s)
             for v in ("toc-pure", "sac") for s in (0, 1, 2)]
    ensure_runs(specs)
    toc_events = [final_metrics(run_dir_for(**spec_key(task="playing", variant="toc-pure", seed=s)))
                  ["final_touch_events"] for s in (0, 1, 2)]
    sac_events = [final_metrics(run_dir_for(**spec_key(task="playing", variant="sac", seed=s)))
                  ["final_touch_events"] for s in (0, 1, 2)]
    toc_mean, sac_mean = np.mean(toc_events), np.mean(sac_events)
    ok = toc_mean >= 2.0 * sac_mean and toc_mean >= 5.0
    report(
        6,
        ok,
        f"final touch events: toc-pure {toc_mean:.1f} {[round(x,1) for x in toc_events]} "
        f"vs sac {sac_mean:.1f} {[round(x,1) for x in sac_events]} "
        f"({(time.time() - t0) / 60:.0f} min)",
    )


# -------------------------------------------------------------- criterion 7


@pytest.mark.slow
def test_criterion_7_downstream_ordering():
    t0 = time.time()
    specs = [spec_key(task="pushing", variant=v, seed=s)
             for v in ("toc", "sac", "icm") for s in (0, 1, 2)]
    ensure_runs(specs)

    def successes(variant):
        return [final_metrics(run_dir_for(**spec_key(task="pushing", variant=variant, seed=s)))
                ["final_success"] for s in (0, 1, 2)]

    toc_s, sac_s, icm_s = successes("toc"), successes("sac"), successes("icm")
    toc_mean, sac_mean, icm_mean = map(np.mean, (toc_s, sac_s, icm_s))
    ok = toc_mean >= sac_mean + 0.15
    report(
        7,
        ok,
        f"final success: toc {toc_mean:.2f} {toc_s} vs sac {sac_mean:.2f} {sac_s} "
        f"(icm alongside: {icm_mean:.2f} {icm_s}) ({(time.time() - t0) / 60:.0f} min)",
    )


# -------------------------------------------------------------- criterion 8


@pytest.mark.slow
def test_criterion_8_lambda_tradeoff():
    t0 = time.time()
    # lam endpoints reuse the identity toc@0 == toc-pure verified bitwise on
    # abbreviated runs below; middle point runs fresh
    specs = (
        [spec_key(task="playing", variant="toc-pure", seed=s) for s in (0, 1, 2)]
        + [spec_key(task="playing", variant="toc", lam=1.0, seed=s) for s in (0, 1, 2)]
        + [spec_key(task="playing", variant="toc", lam=0.5, seed=s) for s in (0, 1, 2)]
    )
    ensure_runs(specs)

    def metrics_for(variant, lam):
        events, moves = [], []
        for s in (0, 1, 2):
            m = final_metrics(run_dir_for(**spec_key(task="playing", variant=variant, lam=lam, seed=s)))
            events.append(m["final_touch_events"])
            moves.append(m["final_obj_move"])
        return np.array(events), np.array(moves)

    ev0, mv0 = metrics_for("toc-pure", 0.5)  # rewards identical to toc@lam=0
    ev1, mv1 = metrics_for("toc", 1.0)
    evm, mvm = metrics_for("toc", 0.5)

    move_ok = mv1.mean() >= mv0.mean()
    events_ok = ev1.mean() <= ev0.mean()
    s_ev = max(ev0.std(), ev1.std(), evm.std())
    s_mv = max(mv0.std(), mv1.std(), mvm.std())
    mid_ev_ok = (min(ev0.mean(), ev1.mean()) - s_ev
                 <= evm.mean() <= max(ev0.mean(), ev1.mean()) + s_ev)
    mid_mv_ok = (min(mv0.mean(), mv1.mean()) - s_mv
                 <= mvm.mean() <= max(mv0.mean(), mv1.mean()) + s_mv)
    ok = move_ok and events_ok and mid_ev_ok and mid_mv_ok
    report(
        8,
        ok,
        f"obj_move lam0 {mv0.mean():.2e} <= lam1 {mv1.mean():.2e} ({move_ok}); "
        f"events lam0 {ev0.mean():.1f} >= lam1 {ev1.mean():.1f} ({events_ok}); "
        f"lam0.5 within 1 std of the endpoint band: events {mid_ev_ok}, move {mid_mv_ok} "
        f"({(time.time() - t0) / 60:.0f} min)",
    )


def test_criterion_8_lambda_zero_run_identity(tmp_path):
    # justifies reusing toc-pure runs as the lam = 0 endpoint above
    base = """
task = playing
profile = desk
total_steps = 1600
start_steps = 400
eval_every = 800
eval_episodes = 2
log_every = 400
"""
    cfg_pure = parse_config_text(base + "variant = toc-pure\n")
    cfg_lam0 = parse_config_text(base + "variant = toc\nlambda = 0.0\n")
    a, b = tmp_path / "pure.csv", tmp_path / "lam0.csv"
    Trainer(cfg_pure, seed=3).run(log_path=a)
    Trainer(cfg_lam0, seed=3).run(log_path=b)
    rows_a, rows_b = read_run_csv(a), read_run_csv(b)
    for ra, rb in zip(rows_a, rows_b):
        for col in ra:
            if col == "variant":
                continue
            assert ra[col] == rb[col], (col, ra[col], rb[col])


# -------------------------------------------------------------- criterion 9


def test_criterion_9_tabular_soft_q():
    t0 = time.time()
    from toc.sac import SacAgent, SacConfig

    gamma = 0.9
    agent = SacAgent(2, 1, SacConfig(lr=3e-3, batch_size=2, hidden=32,
                                     gamma=gamma, tau=0.02, alpha_init=1e-12),
                     np.random.default_rng(16))
    agent.log_alpha[...] = np.log(1e-12)
    agent.policy.params[-2][...] = 0.0
    agent.policy.params[-1][...] = np.array([0.0, -20.0])
    for p, q in zip(agent.q2.params, agent.q1.params):
        p[...] = q
    for p, q in zip(agent.q2_target.params, agent.q1_target.params):
        p[...] = q

    z = np.eye(2)
    z1 = z[::-1].copy()
    act = np.zeros((2, 1))
    r = np.array([1.0, 0.0])
    analytic = np.array([1.0 / (1 - gamma**2), gamma / (1 - gamma**2)])

    rng = np.random.default_rng(17)
    for lr, steps in ((3e-3, 4000), (3e-4, 2000), (3e-5, 1500)):
        agent.q_adam.lr = lr
        for _ in range(steps):
            agent.critic_update(z, act, r, z1, np.zeros(2), rng)

    import toc.numerics.autodiff as ad

    with ad.no_grad():
        q_in = ad.Var(np.concatenate([z, np.tanh(np.zeros((2, 1)))], axis=1))
        learned = np.minimum(
            agent._apply(agent.q1, q_in).data[:, 0],
            agent._apply(agent.q2, q_in).data[:, 0],
        )
    err = float(np.max(np.abs(learned - analytic)))
    report(
        9,
        err <= 1e-3 and time.time() - t0 < 120,
        f"|learned - analytic soft Q| = {err:.2e} on the 2-state loop "
        f"({time.time() - t0:.0f}s)",
    )


# ------------------------------------------------------------- criterion 10


@pytest.mark.slow
def test_criterion_10_shape_generalization():
    t0 = time.time()
    specs = [spec_key(task="playing", variant="toc-pure", seed=s, shape_split="train")
             for s in (0, 1, 2)]
    ensure_runs(specs)

    from toc.env import make_env

    train_events, eval_events = [], []
    for s in (0, 1, 2):
        d = run_dir_for(**spec_key(task="playing", variant="toc-pure", seed=s,
                                   shape_split="train"))
        t = Trainer.restore(d / "checkpoint_final.npz")
        t.cfg = parse_config_text(
            config_to_text(t.cfg), {"eval_episodes": "50"}
        )
        train_events.append(t._evaluate().touch_events)
        t.eval_env = make_env(
            "playing", image_size=t.cfg.image_size, horizon=t.cfg.horizon,
            seed=0, shape_split="eval", shape_seed=t.cfg.shape_seed,
        )
        eval_events.append(t._evaluate().touch_events)
    tr, ev = float(np.mean(train_events)), float(np.mean(eval_events))
    ok = tr > 0 and abs(ev - tr) <= 0.5 * tr
    report(
        10,
        ok,
        f"touch events on held-out shapes {ev:.1f} vs training shapes {tr:.1f} "
        f"(within 50%: {ok}) ({(time.time() - t0) / 60:.0f} min)",
    )
