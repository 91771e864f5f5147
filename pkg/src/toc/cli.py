"""Experiment runner: `toc run | eval | plot | gradcheck`.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import subprocess
import sys
from pathlib import Path

from . import __version__
from .config import (
    RUN_VARIANTS,
    ConfigError,
    RunConfig,
    config_to_text,
    parse_config,
    parse_config_text,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

OUT_ROOT_ENV = "TOC_OUT_ROOT"


def version_hash():
    return hashlib.sha1(f"toc-{__version__}".encode()).hexdigest()[:12]


def _out_root(out_dir):
    root = os.environ.get(OUT_ROOT_ENV, ".")
    return Path(root) / out_dir


def run_name(cfg: RunConfig, seed):
    lam = f"_lam{cfg.lam:g}" if cfg.variant in ("toc", "toc-future") else ""
    return f"{cfg.task}_{cfg.variant}{lam}_seed{seed}"


def _resolve_config(args):
    overrides = {}
    for key in ("task", "variant", "profile", "feature_mode", "out_dir",
                "shape_split"):
        v = getattr(args, key.replace("-", "_"), None)
        if v is not None:
            overrides[key] = v
    for key in ("total_steps", "exploration_steps", "eval_every",
                "eval_episodes", "log_every", "horizon", "seeds"):
        v = getattr(args, key, None)
        if v is not None:
            overrides[key] = str(v)
    if getattr(args, "lam", None) is not None:
        overrides["lambda"] = str(args.lam)
    if args.config:
        return parse_config(args.config, overrides)
    return parse_config_text("", overrides, source="<cli>")


def run_single(cfg: RunConfig, seed, run_dir: Path):
    from .trainer import Trainer

    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.txt").write_text(config_to_text(cfg), encoding="utf-8")
    (run_dir / "meta.json").write_text(
        json.dumps(
            {
                "version": __version__,
                "version_hash": version_hash(),
                "seed": seed,
                "seeds": list(cfg.seeds),
                "task": cfg.task,
                "variant": cfg.variant,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    trainer = Trainer(cfg, seed)
    result = trainer.run(
        log_path=run_dir / "run.csv",
        switch_checkpoint=run_dir / "checkpoint_switch.npz",
        final_checkpoint=run_dir / "checkpoint_final.npz",
    )
    summary = {
        "final_success": result.success,
        "final_episode_steps": result.episode_steps,
        "final_touch_events": result.touch_events,
        "final_obj_move": result.obj_move,
    }
    (run_dir / "result.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return summary


def cmd_run(args):
    sweep_all = args.variant == "all"
    if sweep_all:
        args.variant = None
    cfg = _resolve_config(args)
    variants = list(RUN_VARIANTS) if sweep_all else [cfg.variant]
    out = _out_root(cfg.out_dir)

    jobs = []
    for variant in variants:
        vcfg = cfg if variant == cfg.variant else parse_config_text(
            config_to_text(cfg), {"variant": variant}
        )
        for seed in vcfg.seeds:
            jobs.append((vcfg, seed, out / run_name(vcfg, seed)))

    if args.parallel > 1 and len(jobs) > 1:
        return _run_parallel(jobs, args.parallel)
    for vcfg, seed, run_dir in jobs:
        print(f"[toc] running {run_dir.name}")
        summary = run_single(vcfg, seed, run_dir)
        print(f"[toc] {run_dir.name}: {json.dumps(summary, sort_keys=True)}")
    return EXIT_OK


def _run_parallel(jobs, workers):
    """Seed fan-out as independent processes, one BLAS thread each."""
    import time

    env = dict(os.environ, OMP_NUM_THREADS="1", OPENBLAS_NUM_THREADS="1")
    pending = list(jobs)
    active = []
    failed = False
    while pending or active:
        while pending and len(active) < workers:
            vcfg, seed, run_dir = pending.pop(0)
            run_dir.mkdir(parents=True, exist_ok=True)
            cfg_path = run_dir / "config.txt"
            cfg_path.write_text(config_to_text(vcfg), encoding="utf-8")
            cmd = [
                sys.executable, "-m", "toc.cli", "run",
                "--config", str(cfg_path), "--seeds", str(seed),
                "--out-dir", str(run_dir.parent), "--parallel", "1",
            ]
            print(f"[toc] spawning {run_dir.name}", flush=True)
            active.append((subprocess.Popen(cmd, env=env), run_dir.name))
        still = []
        for proc, name in active:
            if proc.poll() is None:
                still.append((proc, name))
            elif proc.returncode != 0:
                print(f"[toc] {name} failed with exit {proc.returncode}", file=sys.stderr)
                failed = True
            else:
                print(f"[toc] {name} finished", flush=True)
        active = still
        if active:
            time.sleep(0.5)
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_eval(args):
    from .metrics import episode_steps, object_movement, success_rate, touch_interaction
    from .trainer import Trainer

    trainer = Trainer.restore(args.checkpoint)
    cfg = parse_config_text(
        config_to_text(trainer.cfg),
        {"eval_episodes": str(args.episodes)} if args.episodes else None,
    )
    trainer.cfg = cfg
    result = trainer._evaluate()
    print(json.dumps(
        {
            "success": result.success,
            "episode_steps": result.episode_steps,
            "touch_var": result.touch_var,
            "touch_events": result.touch_events,
            "obj_move": result.obj_move,
        },
        indent=2, sort_keys=True,
    ))
    if args.export_traces:
        out = Path(args.export_traces)
        out.mkdir(parents=True, exist_ok=True)
        for i, trace in enumerate(result.traces):
            trace.write_csv(out / f"episode_{i:03d}.csv")
        print(f"[toc] wrote {len(result.traces)} trace files to {out}")
    return EXIT_OK


def cmd_plot(args):
    from .plotting import plot_metric

    path = plot_metric(args.glob, args.metric, args.out)
    print(f"[toc] wrote {path}")
    return EXIT_OK


def cmd_gradcheck(args):
    from .netcheck import check_all_networks

    results = check_all_networks(n_seeds=args.seeds, tolerance=args.tolerance)
    worst = {}
    ok = True
    for name, seed, report in results:
        worst[name] = max(worst.get(name, 0.0), report.max_rel_error)
        if not report.passed:
            ok = False
            print(f"FAIL {name} seed {seed}: {report}")
    for name in sorted(worst):
        print(f"{'PASS' if worst[name] <= args.tolerance else 'FAIL'} "
              f"{name}: max rel error {worst[name]:.3e} over {args.seeds} seeds")
    return EXIT_OK if ok else EXIT_RUNTIME


def build_parser():
    p = argparse.ArgumentParser(prog="toc", description=__doc__)
    p.add_argument("--version", action="version", version=f"toc {__version__} ({version_hash()})")
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="train one or more seeds")
    run_p.add_argument("--config", help="flat key = value config file")
    run_p.add_argument("--task", choices=("playing", "pushing", "opening", "pickup"))
    run_p.add_argument("--variant", choices=RUN_VARIANTS + ("all",))
    run_p.add_argument("--profile", choices=("paper", "desk"))
    run_p.add_argument("--feature-mode", dest="feature_mode",
                       choices=("learned", "random-fixed", "idf"))
    run_p.add_argument("--lambda", dest="lam", type=float)
    run_p.add_argument("--seeds", help="comma-separated, e.g. 0,1,2")
    run_p.add_argument("--total-steps", dest="total_steps", type=int)
    run_p.add_argument("--exploration-steps", dest="exploration_steps", type=int)
    run_p.add_argument("--eval-every", dest="eval_every", type=int)
    run_p.add_argument("--eval-episodes", dest="eval_episodes", type=int)
    run_p.add_argument("--log-every", dest="log_every", type=int)
    run_p.add_argument("--horizon", type=int)
    run_p.add_argument("--shape-split", dest="shape_split", choices=("off", "train", "eval"))
    run_p.add_argument("--out-dir", dest="out_dir")
    run_p.add_argument("--parallel", type=int, default=1)
    run_p.set_defaults(fn=cmd_run)

    eval_p = sub.add_parser("eval", help="evaluate a checkpoint")
    eval_p.add_argument("--checkpoint", required=True)
    eval_p.add_argument("--episodes", type=int)
    eval_p.add_argument("--export-traces")
    eval_p.set_defaults(fn=cmd_eval)

    plot_p = sub.add_parser("plot", help="seed-averaged metric curves as SVG")
    plot_p.add_argument("--glob", required=True)
    plot_p.add_argument("--metric", required=True)
    plot_p.add_argument("--out", required=True)
    plot_p.set_defaults(fn=cmd_plot)

    gc_p = sub.add_parser("gradcheck", help="finite-difference check every network family")
    gc_p.add_argument("--seeds", type=int, default=10)
    gc_p.add_argument("--tolerance", type=float, default=1e-4)
    gc_p.set_defaults(fn=cmd_gradcheck)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
