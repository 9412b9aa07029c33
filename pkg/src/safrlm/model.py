"""Full model: align, fuse, adjust both streams, predict.

Stream A anchors on raw text plus gated audio and is adjusted first by the
text embedding, then by the gated-audio embedding. Stream B mirrors it with
gated text plus raw audio (keys: gated text, then audio). The two streams
share no parameters.
"""

from __future__ import annotations

import numpy as np

from .align import CrossmodalAligner
from .config import RunConfig
from .fusion import CollaborationAttention, FusionMixer
from .heads import PredictionHeads, Predictions, joint_loss, joint_loss_grads
from .xadjust import AdjustStack


class SentimentModel:
    """Text-audio sentiment regressor with hand-written forward/backward."""

    def __init__(self, config: RunConfig, dtype=np.float32,
                 rng: np.random.Generator | None = None):
        if rng is None:
            rng = np.random.default_rng(config.seed)
        self.config = config
        self.dtype = np.dtype(dtype)
        d = config.d
        xc = config.xadjust
        hc = config.heads
        self.aligner = CrossmodalAligner(
            config.data.d_text, config.data.d_audio, d,
            config.conv.kernel_text, config.conv.stride_text,
            config.conv.kernel_audio, config.conv.stride_audio,
            config.align.gru_depth, rng, self.dtype, name="align",
        )
        self.collab = CollaborationAttention()
        self.mixer = FusionMixer(d, self.dtype, name="fusion")
        self.adjust_a = AdjustStack(d, xc.blocks_per_stage, xc.heads, xc.ff_width,
                                    xc.dropout, xc.scale_mode, rng, self.dtype,
                                    name="adjust_a")
        self.adjust_b = AdjustStack(d, xc.blocks_per_stage, xc.heads, xc.ff_width,
                                    xc.dropout, xc.scale_mode, rng, self.dtype,
                                    name="adjust_b")
        self.heads = PredictionHeads(d, hc.self_blocks, xc.heads, xc.ff_width,
                                     hc.hidden, hc.dropout, xc.scale_mode, rng,
                                     self.dtype, name="heads")
        self.last_collab = None

    def params(self):
        yield from self.aligner.params()
        yield from self.mixer.params()
        yield from self.adjust_a.params()
        yield from self.adjust_b.params()
        yield from self.heads.params()

    def param_list(self):
        return list(self.params())

    def n_params(self) -> int:
        return sum(p.value.size for p in self.params())

    def zero_grad(self) -> None:
        for p in self.params():
            p.zero_grad()

    def forward(self, text: np.ndarray, audio: np.ndarray,
                train: bool = False, rng: np.random.Generator | None = None) -> Predictions:
        text = np.ascontiguousarray(text, dtype=self.dtype)
        audio = np.ascontiguousarray(audio, dtype=self.dtype)
        xt, xa = self.aligner.forward(text, audio)
        res = self.collab.forward(xt, xa)
        self.last_collab = res
        stream_a, stream_b = self.mixer.forward(xt, xa, res.gated_text, res.gated_audio)
        adj_a = self.adjust_a.forward(stream_a, xt, res.gated_audio, train, rng)
        adj_b = self.adjust_b.forward(stream_b, res.gated_text, xa, train, rng)
        return self.heads.forward(adj_a, adj_b, train, rng)

    def backward(self, d_local_a: np.ndarray, d_local_b: np.ndarray,
                 d_combined: np.ndarray) -> None:
        d_adj_a, d_adj_b = self.heads.backward(
            d_local_a.astype(self.dtype), d_local_b.astype(self.dtype),
            d_combined.astype(self.dtype))
        d_stream_a, dxt_src, d_gaudio_src = self.adjust_a.backward(d_adj_a)
        d_stream_b, d_gtext_src, dxa_src = self.adjust_b.backward(d_adj_b)
        dxt_mix, dxa_mix, d_gtext_mix, d_gaudio_mix = self.mixer.backward(
            d_stream_a, d_stream_b)
        dxt_col, dxa_col = self.collab.backward(
            d_gtext_src + d_gtext_mix, d_gaudio_src + d_gaudio_mix)
        self.aligner.backward(dxt_src + dxt_mix + dxt_col,
                              dxa_src + dxa_mix + dxa_col)

    def loss_and_backward(self, text, audio, labels,
                          train: bool = True,
                          rng: np.random.Generator | None = None) -> float:
        """One forward/backward: returns the joint loss, accumulates grads."""
        preds = self.forward(text, audio, train=train, rng=rng)
        labels = np.asarray(labels, dtype=self.dtype)
        weights = self.config.heads.loss_weights
        loss = joint_loss(preds, labels, weights)
        grads = joint_loss_grads(preds, labels, weights)
        self.backward(*grads)
        return loss

    def attention_maps(self):
        """All attention tensors (B, h, l_q, l_s) from the latest forward."""
        return (self.adjust_a.attention_maps() + self.adjust_b.attention_maps()
                + self.heads.attention_maps())

    # -- checkpointing ------------------------------------------------------

    def state_dict(self) -> dict[str, np.ndarray]:
        return {p.name: p.value.copy() for p in self.params()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = {p.name: p for p in self.params()}
        missing = set(own) - set(state)
        extra = set(state) - set(own)
        if missing or extra:
            raise ValueError(f"checkpoint mismatch: missing={sorted(missing)[:3]} "
                             f"extra={sorted(extra)[:3]}")
        for name, param in own.items():
            value = np.asarray(state[name], dtype=self.dtype)
            if value.shape != param.value.shape:
                raise ValueError(f"checkpoint shape mismatch for {name}: "
                                 f"{value.shape} vs {param.value.shape}")
            param.value = value

    def save_checkpoint(self, path) -> None:
        np.savez(path, **self.state_dict())

    def load_checkpoint(self, path) -> None:
        with np.load(path) as npz:
            self.load_state_dict({k: npz[k] for k in npz.files})
