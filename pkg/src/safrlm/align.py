"""Crossmodal alignment: strided temporal convolution plus Bi-GRU encoding.

Text and audio sequences arrive with different lengths and feature widths.
A 1D valid-window convolution per modality maps both to a common feature
width d and, with suitable kernel/stride choices, a common length l. A
bidirectional GRU (hidden size d/2 per direction, outputs concatenated)
then encodes temporal context at the same shape.

All forward methods take batched arrays (B, L, features).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import kernels
from .errors import AlignmentMismatchError, ConfigError, SequenceTooShortError
from .nn import Param, uniform_init


def conv_out_length(length: int, kernel: int, stride: int) -> int:
    """Output length of a valid (unpadded) strided convolution."""
    if kernel < 1 or stride < 1:
        raise ConfigError(f"kernel ({kernel}) and stride ({stride}) must be >= 1")
    if length < kernel:
        raise SequenceTooShortError(
            f"sequence length {length} shorter than kernel {kernel}"
        )
    return (length - kernel) // stride + 1


class TemporalConv:
    """Learned affine map over flattened sliding windows, no padding.

    Window t covers input rows [t*stride, t*stride + kernel); its rows are
    flattened time-major, so the weight row index is offset*d_in + channel.
    """

    def __init__(self, d_in: int, d_out: int, kernel: int, stride: int,
                 rng: np.random.Generator, dtype, name: str):
        if kernel < 1 or stride < 1:
            raise ConfigError(f"{name}: kernel and stride must be >= 1")
        self.d_in = d_in
        self.d_out = d_out
        self.kernel = kernel
        self.stride = stride
        fan_in = kernel * d_in
        self.w = Param(f"{name}.w", uniform_init(rng, (fan_in, d_out), fan_in, dtype))
        self.b = Param(f"{name}.b", uniform_init(rng, (d_out,), fan_in, dtype))
        self._windows = None
        self._in_length = None

    def params(self):
        yield self.w
        yield self.b

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, length, d_in = x.shape
        out_len = conv_out_length(length, self.kernel, self.stride)
        # (B, L-k+1, d_in, k) -> stride, reorder window axis before channel
        wins = sliding_window_view(x, self.kernel, axis=1)[:, ::self.stride]
        wins = np.ascontiguousarray(wins.transpose(0, 1, 3, 2)).reshape(b, out_len, -1)
        self._windows = wins
        self._in_length = length
        return wins @ self.w.value + self.b.value

    def backward(self, dout: np.ndarray) -> np.ndarray:
        wins = self._windows
        b, out_len, _ = dout.shape
        flat_w = self.kernel * self.d_in
        self.w.grad += wins.reshape(-1, flat_w).T @ dout.reshape(-1, self.d_out)
        self.b.grad += dout.reshape(-1, self.d_out).sum(axis=0)
        dwins = (dout @ self.w.value.T).reshape(b, out_len, self.kernel, self.d_in)
        dx = np.zeros((b, self._in_length, self.d_in), dtype=dout.dtype)
        for t in range(out_len):
            start = t * self.stride
            dx[:, start:start + self.kernel] += dwins[:, t]
        return dx


class BiGRU:
    """Bidirectional GRU, per-direction hidden size d_out/2, outputs concatenated.

    The input-side projections and all weight gradients run as single large
    matmuls; only the per-step hidden chain goes through the kernel backend
    (numba-jitted by default, pure numpy fallback).
    """

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, dtype, name: str):
        if d_out % 2 != 0:
            raise ConfigError(f"{name}: output width {d_out} must be even to split directions")
        self.d_in = d_in
        self.d_out = d_out
        self.h_dim = d_out // 2
        self._p = {}
        for direction in ("fwd", "bwd"):
            self._p[direction] = {
                "wi": Param(f"{name}.{direction}.wi",
                            uniform_init(rng, (d_in, 3 * self.h_dim), d_in, dtype)),
                "bi": Param(f"{name}.{direction}.bi",
                            uniform_init(rng, (3 * self.h_dim,), d_in, dtype)),
                "wh": Param(f"{name}.{direction}.wh",
                            uniform_init(rng, (self.h_dim, 3 * self.h_dim), self.h_dim, dtype)),
                "bh": Param(f"{name}.{direction}.bh",
                            uniform_init(rng, (3 * self.h_dim,), self.h_dim, dtype)),
            }
        self._cache = None

    def params(self):
        for direction in ("fwd", "bwd"):
            yield from self._p[direction].values()

    def _run_direction(self, x: np.ndarray, direction: str):
        p = self._p[direction]
        b, length, _ = x.shape
        xg = x @ p["wi"].value + p["bi"].value
        # time-major (L, B, 3H), pinned to the parameter dtype for the kernel
        xg = np.ascontiguousarray(xg.transpose(1, 0, 2), dtype=p["wi"].value.dtype)
        seqs = kernels.gru_recurrence_forward(xg, p["wh"].value, p["bh"].value)
        return x, seqs

    def forward(self, x: np.ndarray) -> np.ndarray:
        x_f, seqs_f = self._run_direction(x, "fwd")
        x_b, seqs_b = self._run_direction(np.ascontiguousarray(x[:, ::-1]), "bwd")
        self._cache = (x_f, seqs_f, x_b, seqs_b)
        h_f = seqs_f[0].transpose(1, 0, 2)
        h_b = seqs_b[0][::-1].transpose(1, 0, 2)
        return np.concatenate((h_f, h_b), axis=-1)

    def _backward_direction(self, dh_out_tm: np.ndarray, x: np.ndarray, seqs, direction: str):
        p = self._p[direction]
        h_seq, r_seq, z_seq, n_seq, hnp_seq = seqs
        dxg = kernels.gru_recurrence_backward(
            dh_out_tm, h_seq, r_seq, z_seq, n_seq, hnp_seq, p["wh"].value)
        # hidden-side gate grads: candidate column picks up the reset gate
        dhg = dxg.copy()
        dhg[:, :, 2 * self.h_dim:] *= r_seq
        h_prev = np.concatenate((np.zeros_like(h_seq[:1]), h_seq[:-1]), axis=0)
        three_h = 3 * self.h_dim
        p["wh"].grad += h_prev.reshape(-1, self.h_dim).T @ dhg.reshape(-1, three_h)
        p["bh"].grad += dhg.reshape(-1, three_h).sum(axis=0)
        dxg_bm = dxg.transpose(1, 0, 2)  # back to (B, L, 3H)
        p["wi"].grad += x.reshape(-1, self.d_in).T @ dxg_bm.reshape(-1, three_h)
        p["bi"].grad += dxg_bm.reshape(-1, three_h).sum(axis=0)
        return dxg_bm @ p["wi"].value.T

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x_f, seqs_f, x_b, seqs_b = self._cache
        h = self.h_dim
        dh_f = np.ascontiguousarray(dout[..., :h].transpose(1, 0, 2))
        dh_b = np.ascontiguousarray(dout[:, ::-1, h:].transpose(1, 0, 2))
        dx_f = self._backward_direction(dh_f, x_f, seqs_f, "fwd")
        dx_b = self._backward_direction(dh_b, x_b, seqs_b, "bwd")
        return dx_f + dx_b[:, ::-1]


class CrossmodalAligner:
    """Conv + (stacked) Bi-GRU per modality; enforces equal output lengths."""

    def __init__(self, d_text: int, d_audio: int, d: int,
                 kernel_text: int, stride_text: int,
                 kernel_audio: int, stride_audio: int,
                 gru_depth: int, rng: np.random.Generator, dtype, name: str = "align"):
        if gru_depth < 1:
            raise ConfigError("align.gru_depth must be >= 1")
        self.conv_text = TemporalConv(d_text, d, kernel_text, stride_text,
                                      rng, dtype, f"{name}.conv_text")
        self.conv_audio = TemporalConv(d_audio, d, kernel_audio, stride_audio,
                                       rng, dtype, f"{name}.conv_audio")
        self.grus_text = [BiGRU(d, d, rng, dtype, f"{name}.bigru_text{i}")
                          for i in range(gru_depth)]
        self.grus_audio = [BiGRU(d, d, rng, dtype, f"{name}.bigru_audio{i}")
                           for i in range(gru_depth)]

    def params(self):
        yield from self.conv_text.params()
        yield from self.conv_audio.params()
        for g in self.grus_text:
            yield from g.params()
        for g in self.grus_audio:
            yield from g.params()

    def forward(self, text: np.ndarray, audio: np.ndarray):
        ct = self.conv_text.forward(text)
        ca = self.conv_audio.forward(audio)
        if ct.shape[1] != ca.shape[1]:
            raise AlignmentMismatchError(ct.shape[1], ca.shape[1])
        xt, xa = ct, ca
        for g in self.grus_text:
            xt = g.forward(xt)
        for g in self.grus_audio:
            xa = g.forward(xa)
        return xt, xa

    def backward(self, dxt: np.ndarray, dxa: np.ndarray):
        for g in reversed(self.grus_text):
            dxt = g.backward(dxt)
        for g in reversed(self.grus_audio):
            dxa = g.backward(dxa)
        return self.conv_text.backward(dxt), self.conv_audio.backward(dxa)
