"""Command-line entry point.

Subcommands: ``gen-data``, ``train``, ``eval``, ``baseline``, ``report``.
Each run is driven by a JSON config file (``--config``); command-line flags
override file values.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import (
    cmd_baseline,
    cmd_eval,
    cmd_gen_data,
    cmd_report,
    cmd_train,
    load_run_config,
)


def _parse_deltas(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid delta list '{text}'") from exc


def _parse_resilience(text: str):
    if ":" in text:
        out = {}
        for part in text.split(","):
            key, value = part.split(":")
            out[float(key)] = float(value)
        return out
    return float(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linksched",
        description="Constrained link scheduling on conflict graphs: dataset "
        "generation, policy training, execution, baselines, and reporting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a graph dataset")
    p.add_argument("--count-train", type=int, default=10)
    p.add_argument("--count-test", type=int, default=50)
    p.add_argument("--n-min", type=int, default=200)
    p.add_argument("--n-max", type=int, default=300)
    p.add_argument("--radius-factor", type=float, default=1.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="dataset output directory")

    p = sub.add_parser("train", help="train the scheduling policy")
    p.add_argument("--config", help="run config JSON")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="override the output directory")
    p.add_argument("--data", help="override the dataset directory")
    p.add_argument("--epochs", type=int)
    p.add_argument("--eval-every", type=int)
    p.add_argument("--no-eval", action="store_true", help="skip held-out evaluation")

    p = sub.add_parser("eval", help="execute a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test", choices=("train", "test"))
    p.add_argument("--deltas", type=_parse_deltas, default=[0.1])
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--eta-dual", type=float, default=2.0)
    p.add_argument(
        "--resilience",
        type=_parse_resilience,
        default=None,
        help="scalar, or per-delta map like 0.1:0.05,0.125:0.1",
    )
    p.add_argument("--dual-signal", default="relaxed", choices=("binary", "relaxed"))
    p.add_argument("--norm-stats", default="batch", choices=("batch", "running"))
    p.add_argument("--no-traces", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("baseline", help="run a heuristic baseline")
    p.add_argument("--kind", required=True, choices=("p_persistent", "mis_random"))
    p.add_argument("--ca", action="store_true", help="apply collision avoidance")
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test", choices=("train", "test"))
    p.add_argument("--deltas", type=_parse_deltas, default=[0.1])
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="consolidate metrics into figure feeds")
    p.add_argument("--inputs", required=True, help="directory tree holding run outputs")
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=int, default=5)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen-data":
            manifest = cmd_gen_data(
                count_train=args.count_train,
                count_test=args.count_test,
                n_min=args.n_min,
                n_max=args.n_max,
                seed=args.seed,
                out_dir=args.out,
                radius_factor=args.radius_factor,
            )
            ks = [info["k"] for info in manifest["graphs"].values()]
            print(
                f"wrote {len(manifest['train'])} train / {len(manifest['test'])} test "
                f"graphs to {args.out} (mean K = {sum(ks) / len(ks):.1f})"
            )
        elif args.command == "train":
            overrides: dict = {
                "seed": args.seed,
                "out_dir": args.out,
                "dataset_dir": args.data,
            }
            train_section = {"epochs": args.epochs, "eval_every": args.eval_every}
            if any(v is not None for v in train_section.values()):
                overrides["train"] = train_section
            if args.no_eval:
                overrides["eval_during_training"] = False
            cfg = load_run_config(args.config, overrides)
            result = cmd_train(cfg)
            print(json.dumps(result, indent=2))
        elif args.command == "eval":
            result = cmd_eval(
                checkpoint=args.checkpoint,
                dataset_dir=args.data,
                deltas=args.deltas,
                out_dir=args.out,
                split=args.split,
                exec_steps=args.steps,
                eta_dual=args.eta_dual,
                resilience=args.resilience,
                dual_signal=args.dual_signal,
                norm_stats=args.norm_stats,
                write_traces=not args.no_traces,
            )
            print(json.dumps(result, indent=2))
        elif args.command == "baseline":
            result = cmd_baseline(
                kind=args.kind,
                collision_avoidance=args.ca,
                dataset_dir=args.data,
                deltas=args.deltas,
                steps=args.steps,
                seed=args.seed,
                out_dir=args.out,
                split=args.split,
            )
            print(json.dumps(result, indent=2))
        elif args.command == "report":
            result = cmd_report(args.inputs, args.out, window=args.window)
            print(json.dumps(result, indent=2))
    except (ValueError, FileNotFoundError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
