"""Command-line entry point.

Subcommands: generate, train, eval, sweep-blocks, gradcheck. Every run writes
its fully resolved configuration next to its outputs so it can be replayed
exactly. Exit codes: 0 success, 1 validation/usage error, 2 runtime failure.
The SAFRLM_SEED environment variable, when set, overrides the config seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .data import SyntheticSpec, generate_synthetic, load_jsonl, save_jsonl
from .errors import ValidationError
from .gradcheck import gradcheck
from .model import SentimentModel
from .protocol import load_splits, multi_seed, sweep_blocks, sweep_to_csv
from .train import evaluate, train


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 (not 2) on usage errors, per the CLI contract."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="safrlm",
                     description="text-audio sentiment fusion: data, training, "
                                 "evaluation, sweeps, gradient checks")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("generate", help="write a synthetic dataset as JSON lines")
    p.add_argument("--spec", required=True, help="JSON file with the synthetic spec")
    p.add_argument("--out", required=True, help="output .jsonl path")
    p.add_argument("--role", default="train", choices=["train", "validation", "test"])

    p = sub.add_parser("train", help="train a model and write checkpoint + history")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=None, help="overrides config output_dir")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (dotted path, JSON value)")

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset file")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="dataset .jsonl to score")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")

    p = sub.add_parser("sweep-blocks", help="sweep total crossmodal block count")
    p.add_argument("--config", required=True)
    p.add_argument("--n", required=True,
                   help="comma-separated even block counts, e.g. 2,4,6")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")

    p = sub.add_parser("gradcheck", help="finite-difference check of all gradients")
    p.add_argument("--config", required=True)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")

    return parser


def _load_run_config(args) -> RunConfig:
    config = load_config(args.config, overrides=args.set)
    env_seed = os.environ.get("SAFRLM_SEED")
    if env_seed is not None:
        try:
            config = config.replace(seed=int(env_seed))
        except ValueError:
            raise ValidationError(f"SAFRLM_SEED={env_seed!r} is not an integer") from None
    if args.out_dir is not None:
        config = config.replace(output_dir=args.out_dir)
    return config


def _prepare_out_dir(config: RunConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "resolved_config.json", config.to_dict())
    return out


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _cmd_generate(args) -> int:
    try:
        fh = open(args.spec, "r", encoding="utf-8")
    except FileNotFoundError:
        raise ValidationError(f"spec file not found: {args.spec}") from None
    with fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"spec file is not valid JSON: {exc.msg}") from None
    spec = SyntheticSpec.from_dict(raw)
    split = generate_synthetic(spec, role=args.role)
    save_jsonl(split, args.out)
    print(f"wrote {len(split)} records to {args.out}")
    return 0


def _cmd_train(args) -> int:
    config = _load_run_config(args)
    out = _prepare_out_dir(config)
    train_split, val_split, _ = load_splits(config)
    result = train(train_split, val_split, config, log=print)
    _write_json(out / "history.json", result.history.to_dict())
    np.savez(out / "checkpoint.npz", **result.best_state)
    print(f"best epoch {result.history.best_epoch + 1} "
          f"(val MAE {result.history.best_val_mae:.4f}); outputs in {out}")
    return 0


def _cmd_eval(args) -> int:
    config = _load_run_config(args)
    out = _prepare_out_dir(config)
    split = load_jsonl(args.data, role="test")
    model = SentimentModel(config)
    try:
        model.load_checkpoint(args.checkpoint)
    except FileNotFoundError:
        raise ValidationError(f"checkpoint not found: {args.checkpoint}") from None
    except ValueError as exc:
        raise ValidationError(f"checkpoint does not match the config: {exc}") from None
    report = evaluate(model, split, config.train.batch_size,
                      binarize=config.metrics.binarize)
    print(report.format_line())
    _write_json(out / "metrics.json", report.to_dict())
    return 0


def _cmd_sweep(args) -> int:
    config = _load_run_config(args)
    out = _prepare_out_dir(config)
    try:
        n_values = [int(v) for v in args.n.split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"--n must be comma-separated integers, got {args.n!r}") from None
    rows = sweep_blocks(config, n_values, log=print)
    csv_text = sweep_to_csv(rows)
    (out / "sweep.csv").write_text(csv_text, encoding="utf-8")
    _write_json(out / "sweep.json",
                [{"n": r.n_blocks, **r.averaged.to_dict()} for r in rows])
    print(csv_text, end="")
    return 0


def _cmd_gradcheck(args) -> int:
    config = _load_run_config(args)
    out = _prepare_out_dir(config)
    report = gradcheck(config, tolerance=args.tolerance)
    for line in report.format_lines():
        print(line)
    _write_json(out / "gradcheck.json", report.to_dict())
    return 0 if report.passed else 2


_COMMANDS = {
    "generate": _cmd_generate,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "sweep-blocks": _cmd_sweep,
    "gradcheck": _cmd_gradcheck,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
