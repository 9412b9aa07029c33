"""Sentiment regression metrics.

Acc7 buckets predictions and labels into the seven integer classes -3..+3 by
rounding half away from zero and clipping. Acc2 and F1 binarize by sign
(value >= 0 is positive by default; 'exclude_zero' drops zero labels first)
with F1 computed on the positive class. Pearson correlation is reported as
undefined (None) when either vector has zero variance instead of emitting NaN.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass
class MetricsReport:
    acc7: float          # percent
    acc2: float          # percent
    f1: float            # percent
    mae: float
    corr: float | None   # None when undefined (zero variance)

    def to_dict(self) -> dict:
        return {"acc7": self.acc7, "acc2": self.acc2, "f1": self.f1,
                "mae": self.mae, "corr": self.corr}

    @classmethod
    def from_dict(cls, raw: dict) -> "MetricsReport":
        return cls(**raw)

    def format_line(self) -> str:
        corr = "undefined" if self.corr is None else f"{self.corr:.4f}"
        return (f"acc7={self.acc7:.2f}% acc2={self.acc2:.2f}% f1={self.f1:.2f}% "
                f"mae={self.mae:.4f} corr={corr}")


def round_half_away(x: np.ndarray) -> np.ndarray:
    """Round halves away from zero (platform-independent, unlike banker's)."""
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


def seven_class(x: np.ndarray) -> np.ndarray:
    return np.clip(round_half_away(x), -3.0, 3.0)


def compute_metrics(preds: np.ndarray, labels: np.ndarray,
                    binarize: str = "geq_zero") -> MetricsReport:
    preds = np.asarray(preds, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if preds.ndim != 1 or preds.shape != labels.shape or preds.size == 0:
        raise ValidationError(
            f"metrics need equal non-empty 1D vectors, got {preds.shape} vs {labels.shape}"
        )
    if binarize not in ("geq_zero", "exclude_zero"):
        raise ValidationError(f"unknown binarize mode {binarize!r}")

    acc7 = float(np.mean(seven_class(preds) == seven_class(labels))) * 100.0

    if binarize == "exclude_zero":
        mask = labels != 0.0
    else:
        mask = np.ones_like(labels, dtype=bool)
    if mask.any():
        pos_p = preds[mask] >= 0.0
        pos_l = labels[mask] >= 0.0
        acc2 = float(np.mean(pos_p == pos_l)) * 100.0
        tp = float(np.sum(pos_p & pos_l))
        fp = float(np.sum(pos_p & ~pos_l))
        fn = float(np.sum(~pos_p & pos_l))
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 100.0 * 2.0 * precision * recall / (precision + recall) \
            if precision + recall > 0 else 0.0
    else:
        acc2 = 0.0
        f1 = 0.0

    mae = float(np.mean(np.abs(preds - labels)))

    pc = preds - preds.mean()
    lc = labels - labels.mean()
    denom = np.sqrt(np.sum(pc * pc) * np.sum(lc * lc))
    corr = float(np.sum(pc * lc) / denom) if denom > 0 else None

    return MetricsReport(acc7=acc7, acc2=acc2, f1=f1, mae=mae, corr=corr)


def average_reports(reports: list[MetricsReport]) -> MetricsReport:
    """Arithmetic mean per metric; correlation averages over defined values."""
    if not reports:
        raise ValidationError("cannot average zero reports")
    corrs = [r.corr for r in reports if r.corr is not None]
    return MetricsReport(
        acc7=float(np.mean([r.acc7 for r in reports])),
        acc2=float(np.mean([r.acc2 for r in reports])),
        f1=float(np.mean([r.f1 for r in reports])),
        mae=float(np.mean([r.mae for r in reports])),
        corr=float(np.mean(corrs)) if corrs else None,
    )
