"""Finite-difference verification of the hand-written backward passes.

The model is rebuilt in double precision on a tiny configuration and every
parameter entry is perturbed both ways (central differences, step 1e-5). The
error measure per entry is

    |analytic - numeric| / max(|analytic|, |numeric|, 1e-3)

i.e. a relative error with an absolute floor so that near-zero gradients are
judged on an absolute scale instead of amplifying finite-difference noise.
Labels sit ~1.5 away from the model's predictions, keeping every absolute-
error term far from its kink. Dropout is off (evaluation-mode gradients).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .data import generate_synthetic, make_batches
from .errors import ConfigError, ValidationError
from .heads import joint_loss, joint_loss_grads
from .model import SentimentModel
from .protocol import load_splits

MAX_CHECKED_PARAMS = 20000


@dataclass
class GroupResult:
    name: str
    max_rel_err: float
    n_entries: int


@dataclass
class GradCheckReport:
    groups: list[GroupResult]
    tolerance: float
    step: float

    @property
    def max_rel_err(self) -> float:
        return max(g.max_rel_err for g in self.groups)

    @property
    def passed(self) -> bool:
        return all(g.max_rel_err < self.tolerance for g in self.groups)

    def to_dict(self) -> dict:
        return {
            "tolerance": self.tolerance,
            "step": self.step,
            "passed": self.passed,
            "max_rel_err": self.max_rel_err,
            "groups": [{"name": g.name, "max_rel_err": g.max_rel_err,
                        "n_entries": g.n_entries} for g in self.groups],
        }

    def format_lines(self) -> list[str]:
        width = max(len(g.name) for g in self.groups)
        lines = [f"{g.name:<{width}}  entries={g.n_entries:<6d} "
                 f"max_rel_err={g.max_rel_err:.3e}  "
                 f"{'ok' if g.max_rel_err < self.tolerance else 'FAIL'}"
                 for g in self.groups]
        lines.append(f"overall: max_rel_err={self.max_rel_err:.3e} "
                     f"tolerance={self.tolerance:.1e} -> "
                     f"{'PASS' if self.passed else 'FAIL'}")
        return lines


def _check_batch(config: RunConfig, batch_size: int = 2):
    if config.data.source == "synthetic":
        spec = config.data.split_spec("train")
        split = generate_synthetic(spec)
    else:
        split, _, _ = load_splits(config)
    return make_batches(split, batch_size)[0]


def gradcheck(config: RunConfig, tolerance: float = 1e-4,
              step: float = 1e-5, log=None) -> GradCheckReport:
    """Compare analytic gradients of the joint loss against central differences.

    Requires a tiny configuration; the exhaustive sweep is quadratic-ish in
    model size and refuses to run above MAX_CHECKED_PARAMS parameters.
    """
    if tolerance < 0:
        raise ValidationError("tolerance must be >= 0")
    model = SentimentModel(config, dtype=np.float64,
                           rng=np.random.default_rng([config.seed, 0]))
    n_params = model.n_params()
    if n_params > MAX_CHECKED_PARAMS:
        raise ConfigError(
            f"model has {n_params} parameters; gradcheck needs a tiny config "
            f"(<= {MAX_CHECKED_PARAMS}), e.g. conv.out_channels=8, "
            "xadjust.blocks_per_stage=1, heads.self_blocks=1"
        )

    batch = _check_batch(config)
    text, audio = batch.text, batch.audio
    weights = config.heads.loss_weights

    # place labels well away from every prediction so no |.| kink is crossed
    preds = model.forward(text, audio, train=False)
    labels = np.where(preds.combined >= 0.0,
                      preds.combined - 1.5, preds.combined + 1.5)
    margin = min(
        float(np.min(np.abs(preds.local_a - labels))),
        float(np.min(np.abs(preds.local_b - labels))),
        float(np.min(np.abs(preds.combined - labels))),
    )
    if margin <= 1e-2:
        raise RuntimeError(f"kink margin {margin} too small for a subgradient check")

    def loss_at() -> float:
        out = model.forward(text, audio, train=False)
        return joint_loss(out, labels, weights)

    model.zero_grad()
    out = model.forward(text, audio, train=False)
    model.backward(*joint_loss_grads(out, labels, weights))

    groups = []
    for param in model.params():
        values = param.value.reshape(-1)
        analytic = param.grad.reshape(-1)
        worst = 0.0
        for i in range(values.size):
            orig = values[i]
            values[i] = orig + step
            upper = loss_at()
            values[i] = orig - step
            lower = loss_at()
            values[i] = orig
            numeric = (upper - lower) / (2.0 * step)
            a = analytic[i]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-3)
            if rel > worst:
                worst = rel
        groups.append(GroupResult(name=param.name, max_rel_err=worst,
                                  n_entries=values.size))
        if log is not None:
            log(f"{param.name}: max_rel_err={worst:.3e}")
    return GradCheckReport(groups=groups, tolerance=tolerance, step=step)
