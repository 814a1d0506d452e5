"""Command-line entry points: run, sweep, bc, and serve."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness
from .harness import ConfigError
from .world import MapError


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="experiment config JSON file")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--out", default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrlearn")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run config.trials learning trials")
    _add_common(run_p)

    sweep_p = sub.add_parser("sweep", help="sweep one axis over trials")
    _add_common(sweep_p)
    sweep_p.add_argument(
        "--axis", required=True, choices=["channel", "sigma", "threshold"]
    )

    bc_p = sub.add_parser("bc", help="behavior cloning baseline")
    _add_common(bc_p)

    serve_p = sub.add_parser("serve", help="start the teach service")
    serve_p.add_argument("--config", required=True)
    serve_p.add_argument("--port", type=int, default=8000)
    serve_p.add_argument("--host", default="127.0.0.1")
    return parser


def _load(args) -> harness.ExperimentConfig:
    cfg = harness.load_config(args.config)
    if getattr(args, "seed", None) is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    return cfg


def _out_dir(args, cfg) -> Path:
    return Path(args.out or cfg.out_dir or "results")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = _load(args)
            out = _out_dir(args, cfg)
            logs = harness.run(cfg, out_dir=out, keep_hinge_stream=True)
            window = min(cfg.smoothing_window, cfg.steps)
            for i, lg in enumerate(logs):
                m = harness.compute_metrics(lg, window)
                _, hindsight = harness.best_in_hindsight(lg.hinge_stream)
                print(
                    f"trial {i}: final smoothed latent loss "
                    f"{m.final_smoothed_latent_loss:.4f}, "
                    f"corrections {lg.total_corrections()}, "
                    f"R(T)/R(T/4) {m.sublinearity_ratio:.3f}, "
                    f"best-in-hindsight surrogate {hindsight:.2f}"
                )
            print(f"wrote {len(logs)} trial logs to {out}")
        elif args.command == "sweep":
            cfg = _load(args)
            out = _out_dir(args, cfg)
            cells = harness.run_sweep(cfg, args.axis, out_dir=out)
            for c in cells:
                print(
                    f"{c.axis}={c.value}: loss {c.mean_final_loss:.4f} "
                    f"(+/- {c.std_final_loss:.4f}), corrections "
                    f"{c.mean_corrections:.1f} (+/- {c.std_corrections:.1f}), "
                    f"errors {c.errors}"
                )
            print(f"wrote summary to {out / 'summary.csv'}")
        elif args.command == "bc":
            cfg = _load(args)
            out = _out_dir(args, cfg)
            log = harness.run_bc_baseline(cfg)
            harness.write_trial_csv(log, out / "bc_trial.csv")
            harness.write_weights_json(log.final_weights, out / "weights.json")
            m = harness.compute_metrics(log, min(cfg.smoothing_window, cfg.steps))
            print(
                f"bc baseline: final smoothed latent loss "
                f"{m.final_smoothed_latent_loss:.4f} over {cfg.steps} steps"
            )
        elif args.command == "serve":
            import uvicorn

            from .service.app import create_app

            cfg = harness.load_config(args.config)
            cfg.validate(require_teacher=False)
            app = create_app(cfg)
            uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    except (ConfigError, MapError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
