"""Self-adjusting core: sinusoidal positions, entry embedding, crossmodal blocks.

A fusion stream is adjusted in two stages of N crossmodal blocks each. All
three entry sequences (the fusion stream and its two unimodal sources) get a
sinusoidal position signal added and are layer-normalized once. Within a
stage, keys and values come from a single normalization of the source
embedding and stay fixed while the target sequence evolves block by block:

    q_1   = LN(E_fusion)            first block queries the embedded fusion
    q_i   = LN(out_{i-1})           later blocks query the previous output
    k = v = LN(E_source)            shared by every block of the stage
    mid   = LN(MHA(q, k, v) + target)
    out   = FF(LN(mid)) + mid

The feed-forward sublayer is width d -> ff_width -> d with dropout on its
hidden activations only; attention probabilities are never dropped.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, ValidationError
from .nn import Affine, Dropout, Gelu, LayerNorm, softmax, softmax_backward

_PE_CACHE: dict = {}


def positional_encoding(length: int, d: int, dtype=np.float64) -> np.ndarray:
    """Sinusoidal position table, shape (length, d), entries in [-1, 1].

    Column 2i holds sin(pos / 10000^(2i/d)), column 2i+1 the matching cos.
    """
    if length < 1:
        raise ValidationError("positional encoding needs length >= 1")
    if d < 2:
        raise ValidationError("positional encoding needs width >= 2")
    key = (length, d, np.dtype(dtype).str)
    cached = _PE_CACHE.get(key)
    if cached is not None:
        return cached
    pos = np.arange(length, dtype=np.float64)[:, None]
    even = np.arange(0, d, 2, dtype=np.float64)
    denom = np.power(10000.0, even / d)
    pe = np.empty((length, d), dtype=np.float64)
    pe[:, 0::2] = np.sin(pos / denom)
    pe[:, 1::2] = np.cos(pos / denom[: d // 2])
    pe = pe.astype(dtype)
    pe.flags.writeable = False
    _PE_CACHE[key] = pe
    return pe


class EntryEmbedding:
    """Add the position table, then layer-normalize."""

    def __init__(self, d: int, dtype, name: str):
        self.d = d
        self.dtype = dtype
        self.ln = LayerNorm(d, dtype, f"{name}.ln")

    def params(self):
        yield from self.ln.params()

    def forward(self, x: np.ndarray) -> np.ndarray:
        pe = positional_encoding(x.shape[1], self.d, self.dtype)
        return self.ln.forward(x + pe)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return self.ln.backward(dout)


class MultiHeadAttention:
    """Scaled dot-product attention with h heads of width d/h.

    scale_mode picks the softmax temperature: 'per_head' divides scores by
    sqrt(d/h), 'full_dim' by sqrt(d). The last computed attention tensor
    (B, h, l_q, l_s) stays readable on ``last_attention`` for invariant checks.
    """

    def __init__(self, d: int, n_heads: int, scale_mode: str,
                 rng: np.random.Generator, dtype, name: str):
        if d % n_heads != 0:
            raise ConfigError(f"{name}: width {d} not divisible by {n_heads} heads")
        if scale_mode not in ("per_head", "full_dim"):
            raise ConfigError(f"{name}: unknown scale_mode {scale_mode!r}")
        self.d = d
        self.n_heads = n_heads
        self.d_head = d // n_heads
        self.scale = float(1.0 / np.sqrt(self.d_head if scale_mode == "per_head" else d))
        self.proj_q = Affine(d, d, rng, dtype, f"{name}.q")
        self.proj_k = Affine(d, d, rng, dtype, f"{name}.k")
        self.proj_v = Affine(d, d, rng, dtype, f"{name}.v")
        self.proj_out = Affine(d, d, rng, dtype, f"{name}.out")
        self.last_attention: np.ndarray | None = None
        self._cache = None

    def params(self):
        for p in (self.proj_q, self.proj_k, self.proj_v, self.proj_out):
            yield from p.params()

    def _split(self, x: np.ndarray) -> np.ndarray:
        b, l, _ = x.shape
        return x.reshape(b, l, self.n_heads, self.d_head).transpose(0, 2, 1, 3)

    def _merge(self, x: np.ndarray) -> np.ndarray:
        b, _, l, _ = x.shape
        return x.transpose(0, 2, 1, 3).reshape(b, l, self.d)

    def forward(self, query_in: np.ndarray, source_in: np.ndarray) -> np.ndarray:
        if query_in.shape[-1] != self.d or source_in.shape[-1] != self.d:
            raise ValidationError(
                f"attention width mismatch: {query_in.shape[-1]} / {source_in.shape[-1]} vs {self.d}"
            )
        q = self._split(self.proj_q.forward(query_in))
        k = self._split(self.proj_k.forward(source_in))
        v = self._split(self.proj_v.forward(source_in))
        scores = (q @ k.transpose(0, 1, 3, 2)) * self.scale
        att = softmax(scores, axis=-1)
        ctx = att @ v
        self.last_attention = att
        self._cache = (q, k, v, att)
        return self.proj_out.forward(self._merge(ctx))

    def backward(self, dout: np.ndarray):
        q, k, v, att = self._cache
        dctx = self._split(self.proj_out.backward(dout))
        datt = dctx @ v.transpose(0, 1, 3, 2)
        dv = att.transpose(0, 1, 3, 2) @ dctx
        dscores = softmax_backward(att, datt) * self.scale
        dq = dscores @ k
        dk = dscores.transpose(0, 1, 3, 2) @ q
        dquery = self.proj_q.backward(self._merge(dq))
        dsource = self.proj_k.backward(self._merge(dk)) + self.proj_v.backward(self._merge(dv))
        return dquery, dsource


class FeedForward:
    """d -> width -> d with a smooth rectifier and hidden-activation dropout."""

    def __init__(self, d: int, width: int, dropout: float,
                 rng: np.random.Generator, dtype, name: str):
        self.inner = Affine(d, width, rng, dtype, f"{name}.inner")
        self.act = Gelu()
        self.drop = Dropout(dropout)
        self.outer = Affine(width, d, rng, dtype, f"{name}.outer")

    def params(self):
        yield from self.inner.params()
        yield from self.outer.params()

    def forward(self, x, train, rng):
        h = self.drop.forward(self.act.forward(self.inner.forward(x)), train, rng)
        return self.outer.forward(h)

    def backward(self, dout):
        dh = self.drop.backward(self.outer.backward(dout))
        return self.inner.backward(self.act.backward(dh))


class CrossmodalBlock:
    """One adjustment block: crossmodal attention then feed-forward, both residual."""

    def __init__(self, d: int, n_heads: int, ff_width: int, dropout: float,
                 scale_mode: str, rng: np.random.Generator, dtype, name: str):
        self.ln_query = LayerNorm(d, dtype, f"{name}.ln_query")
        self.mha = MultiHeadAttention(d, n_heads, scale_mode, rng, dtype, f"{name}.mha")
        self.ln_mid = LayerNorm(d, dtype, f"{name}.ln_mid")
        self.ln_ff = LayerNorm(d, dtype, f"{name}.ln_ff")
        self.ff = FeedForward(d, ff_width, dropout, rng, dtype, f"{name}.ff")

    def params(self):
        yield from self.ln_query.params()
        yield from self.mha.params()
        yield from self.ln_mid.params()
        yield from self.ln_ff.params()
        yield from self.ff.params()

    def forward(self, target: np.ndarray, source_kv: np.ndarray, train=False, rng=None):
        qn = self.ln_query.forward(target)
        mh = self.mha.forward(qn, source_kv)
        mid = self.ln_mid.forward(mh + target)
        return self.ff.forward(self.ln_ff.forward(mid), train, rng) + mid

    def backward(self, dout: np.ndarray):
        dmid = self.ln_ff.backward(self.ff.backward(dout)) + dout
        dsum = self.ln_mid.backward(dmid)
        dquery_n, dsource = self.mha.backward(dsum)
        dtarget = dsum + self.ln_query.backward(dquery_n)
        return dtarget, dsource


class AdjustStage:
    """N blocks sharing one normalized key/value view of a source embedding."""

    def __init__(self, d: int, n_blocks: int, n_heads: int, ff_width: int,
                 dropout: float, scale_mode: str, rng: np.random.Generator,
                 dtype, name: str):
        if n_blocks < 1:
            raise ConfigError(f"{name}: needs at least one block")
        self.ln_source = LayerNorm(d, dtype, f"{name}.ln_source")
        self.blocks = [
            CrossmodalBlock(d, n_heads, ff_width, dropout, scale_mode, rng, dtype,
                            f"{name}.block{i}")
            for i in range(n_blocks)
        ]

    def params(self):
        yield from self.ln_source.params()
        for blk in self.blocks:
            yield from blk.params()

    def forward(self, target: np.ndarray, source_embed: np.ndarray, train=False, rng=None):
        kv = self.ln_source.forward(source_embed)
        out = target
        for blk in self.blocks:
            out = blk.forward(out, kv, train, rng)
        return out

    def backward(self, dout: np.ndarray):
        dkv_total = None
        for blk in reversed(self.blocks):
            dout, dkv = blk.backward(dout)
            dkv_total = dkv if dkv_total is None else dkv_total + dkv
        dsource = self.ln_source.backward(dkv_total)
        return dout, dsource

    def attention_maps(self):
        return [blk.mha.last_attention for blk in self.blocks]


class AdjustStack:
    """Two-stage adjustment of one fusion stream by its two unimodal sources."""

    def __init__(self, d: int, blocks_per_stage: int, n_heads: int, ff_width: int,
                 dropout: float, scale_mode: str, rng: np.random.Generator,
                 dtype, name: str):
        self.embed_fusion = EntryEmbedding(d, dtype, f"{name}.embed_fusion")
        self.embed_src1 = EntryEmbedding(d, dtype, f"{name}.embed_src1")
        self.embed_src2 = EntryEmbedding(d, dtype, f"{name}.embed_src2")
        self.stage1 = AdjustStage(d, blocks_per_stage, n_heads, ff_width, dropout,
                                  scale_mode, rng, dtype, f"{name}.stage1")
        self.stage2 = AdjustStage(d, blocks_per_stage, n_heads, ff_width, dropout,
                                  scale_mode, rng, dtype, f"{name}.stage2")

    def params(self):
        yield from self.embed_fusion.params()
        yield from self.embed_src1.params()
        yield from self.embed_src2.params()
        yield from self.stage1.params()
        yield from self.stage2.params()

    def forward(self, fusion_seq, src1, src2, train=False, rng=None):
        if not (fusion_seq.shape == src1.shape == src2.shape):
            raise ValidationError(
                f"adjust inputs must share a shape, got {fusion_seq.shape}, "
                f"{src1.shape}, {src2.shape}"
            )
        e_fusion = self.embed_fusion.forward(fusion_seq)
        e_src1 = self.embed_src1.forward(src1)
        e_src2 = self.embed_src2.forward(src2)
        mid = self.stage1.forward(e_fusion, e_src1, train, rng)
        return self.stage2.forward(mid, e_src2, train, rng)

    def backward(self, dout: np.ndarray):
        dmid, de_src2 = self.stage2.backward(dout)
        de_fusion, de_src1 = self.stage1.backward(dmid)
        return (
            self.embed_fusion.backward(de_fusion),
            self.embed_src1.backward(de_src1),
            self.embed_src2.backward(de_src2),
        )

    def attention_maps(self):
        return self.stage1.attention_maps() + self.stage2.attention_maps()
