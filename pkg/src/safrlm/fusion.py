"""Fusion initialization: collaboration attention and weighted stream mixing.

The collaboration attention lets each modality attend over the other:
score matrices are plain inner products between the aligned sequences, pushed
through tanh and a row softmax; the soft readout of the other modality then
gates the modality elementwise. Two fusion streams come out of the mixer:

    stream A: w_text * text        + w_gated_audio * gated_audio + bias_a
    stream B: w_gated_text * gated_text + w_audio  * audio       + bias_b

Weights are learnable scalars, biases are learnable feature-width vectors
broadcast over time; both start as an unweighted sum (w=1, b=0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .nn import Param, softmax, softmax_backward


@dataclass
class CollabAttnResult:
    """Everything the collaboration attention computes, kept for inspection."""

    scores_ta: np.ndarray    # (B, l, l) text positions scoring audio positions
    scores_at: np.ndarray    # exact transpose of scores_ta
    weights_ta: np.ndarray   # row-stochastic attention over audio positions
    weights_at: np.ndarray   # row-stochastic attention over text positions
    read_audio: np.ndarray   # (B, l, d) audio readout per text position
    read_text: np.ndarray    # (B, l, d) text readout per audio position
    gated_text: np.ndarray   # read_audio ⊙ text
    gated_audio: np.ndarray  # read_text ⊙ audio


class CollaborationAttention:
    """Parameter-free bidirectional attention with elementwise gating."""

    def __init__(self):
        self._cache = None

    def forward(self, text: np.ndarray, audio: np.ndarray) -> CollabAttnResult:
        if text.shape != audio.shape:
            raise ValidationError(
                f"aligned sequences must share a shape, got {text.shape} vs {audio.shape}"
            )
        scores_ta = text @ audio.transpose(0, 2, 1)
        scores_at = scores_ta.transpose(0, 2, 1)
        tanh_ta = np.tanh(scores_ta)
        tanh_at = tanh_ta.transpose(0, 2, 1)
        weights_ta = softmax(tanh_ta, axis=-1)
        weights_at = softmax(tanh_at, axis=-1)
        read_audio = weights_ta @ audio
        read_text = weights_at @ text
        gated_text = read_audio * text
        gated_audio = read_text * audio
        result = CollabAttnResult(
            scores_ta=scores_ta, scores_at=scores_at,
            weights_ta=weights_ta, weights_at=weights_at,
            read_audio=read_audio, read_text=read_text,
            gated_text=gated_text, gated_audio=gated_audio,
        )
        self._cache = (text, audio, tanh_ta, tanh_at, result)
        return result

    def backward(self, d_gated_text: np.ndarray, d_gated_audio: np.ndarray):
        """Gradients w.r.t. the aligned text and audio inputs."""
        text, audio, tanh_ta, tanh_at, res = self._cache

        d_read_audio = d_gated_text * text
        d_text = d_gated_text * res.read_audio
        d_read_text = d_gated_audio * audio
        d_audio = d_gated_audio * res.read_text

        d_weights_ta = d_read_audio @ audio.transpose(0, 2, 1)
        d_audio += res.weights_ta.transpose(0, 2, 1) @ d_read_audio
        d_weights_at = d_read_text @ text.transpose(0, 2, 1)
        d_text += res.weights_at.transpose(0, 2, 1) @ d_read_text

        d_tanh_ta = softmax_backward(res.weights_ta, d_weights_ta)
        d_tanh_at = softmax_backward(res.weights_at, d_weights_at)
        d_scores_ta = d_tanh_ta * (1.0 - tanh_ta * tanh_ta)
        d_scores_at = d_tanh_at * (1.0 - tanh_at * tanh_at)
        # the reverse score matrix is the transpose of the forward one
        d_scores = d_scores_ta + d_scores_at.transpose(0, 2, 1)

        d_text += d_scores @ audio
        d_audio += d_scores.transpose(0, 2, 1) @ text
        return d_text, d_audio


class FusionMixer:
    """Weighted sum of a raw stream and a gated stream per fusion direction."""

    def __init__(self, d: int, dtype, name: str = "fusion"):
        self.w_text = Param(f"{name}.w_text", np.ones((), dtype=dtype))
        self.w_gated_audio = Param(f"{name}.w_gated_audio", np.ones((), dtype=dtype))
        self.w_gated_text = Param(f"{name}.w_gated_text", np.ones((), dtype=dtype))
        self.w_audio = Param(f"{name}.w_audio", np.ones((), dtype=dtype))
        self.bias_a = Param(f"{name}.bias_a", np.zeros(d, dtype=dtype))
        self.bias_b = Param(f"{name}.bias_b", np.zeros(d, dtype=dtype))
        self._cache = None

    def params(self):
        yield self.w_text
        yield self.w_gated_audio
        yield self.w_gated_text
        yield self.w_audio
        yield self.bias_a
        yield self.bias_b

    def forward(self, text, audio, gated_text, gated_audio):
        shapes = {text.shape, audio.shape, gated_text.shape, gated_audio.shape}
        if len(shapes) != 1:
            raise ValidationError(f"fusion inputs must share a shape, got {shapes}")
        stream_a = self.w_text.value * text + self.w_gated_audio.value * gated_audio \
            + self.bias_a.value
        stream_b = self.w_gated_text.value * gated_text + self.w_audio.value * audio \
            + self.bias_b.value
        self._cache = (text, audio, gated_text, gated_audio)
        return stream_a, stream_b

    def backward(self, d_stream_a, d_stream_b):
        text, audio, gated_text, gated_audio = self._cache
        self.w_text.grad += np.sum(d_stream_a * text)
        self.w_gated_audio.grad += np.sum(d_stream_a * gated_audio)
        self.bias_a.grad += d_stream_a.sum(axis=(0, 1))
        self.w_gated_text.grad += np.sum(d_stream_b * gated_text)
        self.w_audio.grad += np.sum(d_stream_b * audio)
        self.bias_b.grad += d_stream_b.sum(axis=(0, 1))
        d_text = self.w_text.value * d_stream_a
        d_gated_audio = self.w_gated_audio.value * d_stream_a
        d_gated_text = self.w_gated_text.value * d_stream_b
        d_audio = self.w_audio.value * d_stream_b
        return d_text, d_audio, d_gated_text, d_gated_audio
