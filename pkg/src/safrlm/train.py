"""Training loop with Adam, per-epoch validation, and best-MAE checkpointing.

All randomness derives from the single run seed: model initialization,
dropout, and the per-epoch shuffle order each get their own child stream, so
a repeated run with the same configuration reproduces the loss history bit
for bit (single-threaded).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .data import DatasetSplit, make_batches
from .errors import TrainingDivergedError
from .metrics import MetricsReport, compute_metrics
from .model import SentimentModel
from .nn import Param


class Adam:
    """Adam with the standard moment coefficients and bias correction."""

    def __init__(self, params: list[Param], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = [np.zeros_like(p.value) for p in params]
        self._v = [np.zeros_like(p.value) for p in params]

    def step(self) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self._m, self._v):
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.value -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


@dataclass
class RunHistory:
    train_loss: list[float] = field(default_factory=list)
    val_reports: list[MetricsReport] = field(default_factory=list)
    best_epoch: int = -1  # 0-based index into the lists
    best_val_mae: float = math.inf

    def to_dict(self) -> dict:
        return {
            "train_loss": self.train_loss,
            "val_reports": [r.to_dict() for r in self.val_reports],
            "best_epoch": self.best_epoch,
            "best_val_mae": self.best_val_mae,
        }


@dataclass
class TrainResult:
    model: SentimentModel            # holds the final-epoch parameters
    history: RunHistory
    best_state: dict[str, np.ndarray]  # parameters of the best-val-MAE epoch


def predict_split(model: SentimentModel, split: DatasetSplit,
                  batch_size: int) -> np.ndarray:
    """Global sentiment predictions in split order (no shuffling)."""
    preds = []
    for batch in make_batches(split, batch_size):
        out = model.forward(batch.text, batch.audio, train=False)
        preds.append(np.asarray(out.combined, dtype=np.float64))
    return np.concatenate(preds)


def evaluate(model: SentimentModel, split: DatasetSplit, batch_size: int,
             binarize: str = "geq_zero") -> MetricsReport:
    preds = predict_split(model, split, batch_size)
    return compute_metrics(preds, split.labels(), binarize=binarize)


def train(train_split: DatasetSplit, val_split: DatasetSplit,
          config: RunConfig, dtype=np.float32,
          log=None) -> TrainResult:
    """Minimize the joint loss with Adam; keep the best validation-MAE state."""
    tc = config.train
    init_rng = np.random.default_rng([config.seed, 0])
    dropout_rng = np.random.default_rng([config.seed, 1])
    shuffle_rng = np.random.default_rng([config.seed, 2])
    epoch_seeds = shuffle_rng.integers(0, 2 ** 62, size=tc.epochs)

    model = SentimentModel(config, dtype=dtype, rng=init_rng)
    optimizer = Adam(model.param_list(), lr=tc.learning_rate)
    history = RunHistory()
    best_state = model.state_dict()

    for epoch in range(tc.epochs):
        batches = make_batches(train_split, tc.batch_size,
                               shuffle_seed=int(epoch_seeds[epoch]))
        losses = []
        for batch in batches:
            model.zero_grad()
            loss = model.loss_and_backward(batch.text, batch.audio, batch.labels,
                                           train=True, rng=dropout_rng)
            if not math.isfinite(loss):
                raise TrainingDivergedError(epoch, loss)
            optimizer.step()
            losses.append(loss)
        epoch_loss = float(np.mean(losses))
        history.train_loss.append(epoch_loss)

        report = evaluate(model, val_split, tc.batch_size,
                          binarize=config.metrics.binarize)
        history.val_reports.append(report)
        if report.mae < history.best_val_mae:
            history.best_val_mae = report.mae
            history.best_epoch = epoch
            best_state = model.state_dict()
        if log is not None:
            log(f"epoch {epoch + 1}/{tc.epochs} "
                f"train_loss={epoch_loss:.4f} val_{report.format_line()}")

    return TrainResult(model=model, history=history, best_state=best_state)
