"""Prediction heads over the two adjusted fusion streams.

Each stream feeds a local classifier (mean pooled over time) and a
self-attention transformer; the final time steps of the two transformer
outputs are concatenated for the global classifier. The global value is the
model's sentiment output; the locals only shape training through the joint
objective, an unweighted sum of three L1 terms averaged over the batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .nn import Affine, Dropout, Gelu
from .xadjust import AdjustStage, EntryEmbedding


@dataclass
class Predictions:
    """Per-sample scalar outputs of the three classifiers."""

    local_a: np.ndarray   # (B,) from the text-anchored stream
    local_b: np.ndarray   # (B,) from the audio-anchored stream
    combined: np.ndarray  # (B,) the model's sentiment output


class SelfAttentionTransformer:
    """Blocks attending over the stream's own entry embedding."""

    def __init__(self, d, n_blocks, n_heads, ff_width, dropout, scale_mode,
                 rng, dtype, name):
        self.embed = EntryEmbedding(d, dtype, f"{name}.embed")
        self.stage = AdjustStage(d, n_blocks, n_heads, ff_width, dropout,
                                 scale_mode, rng, dtype, f"{name}.stage")

    def params(self):
        yield from self.embed.params()
        yield from self.stage.params()

    def forward(self, x, train=False, rng=None):
        e = self.embed.forward(x)
        return self.stage.forward(e, e, train, rng)

    def backward(self, dout):
        dtarget, dsource = self.stage.backward(dout)
        return self.embed.backward(dtarget + dsource)

    def attention_maps(self):
        return self.stage.attention_maps()


class Classifier:
    """Two-layer MLP to a scalar: affine -> smooth rectifier -> dropout -> affine."""

    def __init__(self, d_in, hidden, dropout, rng, dtype, name):
        self.fc1 = Affine(d_in, hidden, rng, dtype, f"{name}.fc1")
        self.act = Gelu()
        self.drop = Dropout(dropout)
        self.fc2 = Affine(hidden, 1, rng, dtype, f"{name}.fc2")

    def params(self):
        yield from self.fc1.params()
        yield from self.fc2.params()

    def forward(self, x, train=False, rng=None):
        h = self.drop.forward(self.act.forward(self.fc1.forward(x)), train, rng)
        return self.fc2.forward(h)[:, 0]

    def backward(self, dy):
        dh = self.drop.backward(self.fc2.backward(dy[:, None]))
        return self.fc1.backward(self.act.backward(dh))


class PredictionHeads:
    """Local classifiers, per-stream self-attention, and the global classifier."""

    def __init__(self, d, self_blocks, n_heads, ff_width, hidden, dropout,
                 scale_mode, rng, dtype, name="heads"):
        self.transformer_a = SelfAttentionTransformer(
            d, self_blocks, n_heads, ff_width, dropout, scale_mode, rng, dtype,
            f"{name}.self_a")
        self.transformer_b = SelfAttentionTransformer(
            d, self_blocks, n_heads, ff_width, dropout, scale_mode, rng, dtype,
            f"{name}.self_b")
        self.classifier_a = Classifier(d, hidden, dropout, rng, dtype, f"{name}.cls_a")
        self.classifier_b = Classifier(d, hidden, dropout, rng, dtype, f"{name}.cls_b")
        self.classifier_global = Classifier(2 * d, hidden, dropout, rng, dtype,
                                            f"{name}.cls_global")
        self._cache = None

    def params(self):
        yield from self.transformer_a.params()
        yield from self.transformer_b.params()
        yield from self.classifier_a.params()
        yield from self.classifier_b.params()
        yield from self.classifier_global.params()

    def forward(self, adjusted_a, adjusted_b, train=False, rng=None) -> Predictions:
        if adjusted_a.shape != adjusted_b.shape:
            raise ValidationError(
                f"stream shapes differ: {adjusted_a.shape} vs {adjusted_b.shape}"
            )
        b, l, d = adjusted_a.shape
        local_a = self.classifier_a.forward(adjusted_a.mean(axis=1), train, rng)
        local_b = self.classifier_b.forward(adjusted_b.mean(axis=1), train, rng)
        seq_a = self.transformer_a.forward(adjusted_a, train, rng)
        seq_b = self.transformer_b.forward(adjusted_b, train, rng)
        summary = np.concatenate((seq_a[:, -1, :], seq_b[:, -1, :]), axis=-1)
        combined = self.classifier_global.forward(summary, train, rng)
        self._cache = (b, l, d)
        return Predictions(local_a=local_a, local_b=local_b, combined=combined)

    def backward(self, d_local_a, d_local_b, d_combined):
        b, l, d = self._cache
        dsummary = self.classifier_global.backward(d_combined)
        dseq_a = np.zeros((b, l, d), dtype=dsummary.dtype)
        dseq_b = np.zeros((b, l, d), dtype=dsummary.dtype)
        dseq_a[:, -1, :] = dsummary[:, :d]
        dseq_b[:, -1, :] = dsummary[:, d:]
        d_adj_a = self.transformer_a.backward(dseq_a)
        d_adj_b = self.transformer_b.backward(dseq_b)
        dpool_a = self.classifier_a.backward(d_local_a)
        dpool_b = self.classifier_b.backward(d_local_b)
        d_adj_a += dpool_a[:, None, :] / l
        d_adj_b += dpool_b[:, None, :] / l
        return d_adj_a, d_adj_b

    def attention_maps(self):
        return self.transformer_a.attention_maps() + self.transformer_b.attention_maps()


def joint_loss(preds: Predictions, labels: np.ndarray,
               weights: tuple[float, float, float] = (1.0, 1.0, 1.0)) -> float:
    """Batch-mean of the three absolute-error terms (optionally weighted)."""
    w_a, w_b, w_g = weights
    per_sample = (
        w_a * np.abs(preds.local_a - labels)
        + w_b * np.abs(preds.local_b - labels)
        + w_g * np.abs(preds.combined - labels)
    )
    return float(np.mean(per_sample))


def joint_loss_grads(preds: Predictions, labels: np.ndarray,
                     weights: tuple[float, float, float] = (1.0, 1.0, 1.0)):
    """Gradients of joint_loss w.r.t. each prediction vector."""
    b = labels.shape[0]
    w_a, w_b, w_g = weights
    return (
        w_a * np.sign(preds.local_a - labels) / b,
        w_b * np.sign(preds.local_b - labels) / b,
        w_g * np.sign(preds.combined - labels) / b,
    )
