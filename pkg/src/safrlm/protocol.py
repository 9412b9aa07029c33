"""Evaluation protocol: multi-seed averaging and the block-count sweep.

The reporting convention trains once per seed (default: five seeds) and
averages each test metric arithmetically. The sweep varies the total number
of crossmodal blocks n over even values, using n/2 blocks per adjustment
stage, and tabulates the averaged metrics per n.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .data import DatasetSplit, generate_synthetic, load_jsonl
from .errors import ValidationError
from .metrics import MetricsReport, average_reports
from .train import evaluate, train


@dataclass
class SeedRun:
    seed: int
    report: MetricsReport
    train_loss: list[float]


@dataclass
class MultiSeedResult:
    runs: list[SeedRun]
    averaged: MetricsReport

    def to_dict(self) -> dict:
        return {
            "runs": [{"seed": r.seed, "report": r.report.to_dict(),
                      "train_loss": r.train_loss} for r in self.runs],
            "averaged": self.averaged.to_dict(),
        }


def load_splits(config: RunConfig) -> tuple[DatasetSplit, DatasetSplit, DatasetSplit]:
    """Materialize (train, val, test) from the data section."""
    dc = config.data
    if dc.source == "jsonl":
        splits = (load_jsonl(dc.train_path, role="train"),
                  load_jsonl(dc.val_path, role="validation"),
                  load_jsonl(dc.test_path, role="test"))
    else:
        splits = (generate_synthetic(dc.split_spec("train"), role="train"),
                  generate_synthetic(dc.split_spec("val"), role="validation"),
                  generate_synthetic(dc.split_spec("test"), role="test"))
    for split in splits:
        d_text, d_audio = split.feature_dims
        if d_text != dc.d_text or d_audio != dc.d_audio:
            raise ValidationError(
                f"{split.role} split dims ({d_text}, {d_audio}) conflict with "
                f"configured data dims ({dc.d_text}, {dc.d_audio})"
            )
    return splits


def multi_seed(config: RunConfig, seeds: list[int] | None = None,
               dtype=np.float32, log=None) -> MultiSeedResult:
    """Train/evaluate once per seed on fixed splits; average the test metrics."""
    if seeds is None:
        seeds = list(config.eval.seeds)
    if not seeds:
        raise ValidationError("multi_seed needs at least one seed")
    train_split, val_split, test_split = load_splits(config)
    runs = []
    for seed in seeds:
        cfg = config.replace(seed=int(seed))
        try:
            result = train(train_split, val_split, cfg, dtype=dtype)
        except Exception as exc:
            raise RuntimeError(f"training failed for seed {seed}: {exc}") from exc
        # evaluate the best-validation-MAE checkpoint
        result.model.load_state_dict(result.best_state)
        report = evaluate(result.model, test_split, cfg.train.batch_size,
                          binarize=cfg.metrics.binarize)
        runs.append(SeedRun(seed=int(seed), report=report,
                            train_loss=result.history.train_loss))
        if log is not None:
            log(f"seed {seed}: {report.format_line()}")
    return MultiSeedResult(runs=runs, averaged=average_reports([r.report for r in runs]))


@dataclass
class SweepRow:
    n_blocks: int
    averaged: MetricsReport


def sweep_blocks(config: RunConfig, n_values: list[int],
                 dtype=np.float32, log=None) -> list[SweepRow]:
    """Run multi_seed per total block count n (even), with n/2 blocks per stage."""
    if not n_values:
        raise ValidationError("sweep needs at least one n value")
    for n in n_values:
        if n < 2 or n % 2 != 0:
            raise ValidationError(f"block count n={n} must be even and >= 2")
    rows = []
    for n in n_values:
        cfg = config.replace(**{"xadjust.blocks_per_stage": n // 2})
        result = multi_seed(cfg, dtype=dtype)
        rows.append(SweepRow(n_blocks=n, averaged=result.averaged))
        if log is not None:
            log(f"n={n}: {result.averaged.format_line()}")
    return rows


def sweep_to_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    buf.write("n,acc7,acc2,f1,mae,corr\n")
    for row in rows:
        r = row.averaged
        corr = "" if r.corr is None else f"{r.corr:.6f}"
        buf.write(f"{row.n_blocks},{r.acc7:.4f},{r.acc2:.4f},{r.f1:.4f},"
                  f"{r.mae:.6f},{corr}\n")
    return buf.getvalue()
