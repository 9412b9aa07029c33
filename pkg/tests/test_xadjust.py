"""Positional encoding, entry embedding, crossmodal blocks, adjustment stacks."""

import numpy as np
import pytest

import oracles
from safrlm.errors import ConfigError, ValidationError
from safrlm.nn import LayerNorm
from safrlm.xadjust import (
    AdjustStack,
    CrossmodalBlock,
    EntryEmbedding,
    MultiHeadAttention,
    positional_encoding,
)

# LN(position table) for l=4, d=6 with unit gain / zero offset; regression
# fixture frozen from the loop-based oracle.
EMBED_ZERO_FIXTURE = np.array([
    [-0.99998000, 0.99998000, -0.99998000, 0.99998000, -0.99998000, 0.99998000],
    [0.64831796, -0.07502983, -1.26128764, 1.02648659, -1.36755490, 1.02906782],
    [0.85323620, -1.51109831, -0.60341730, 1.00735126, -0.76108722, 1.01501537],
    [-0.10882584, -1.78750366, -0.11227177, 1.15146822, -0.30866917, 1.16580222],
])


def make_block(d=8, heads=2, ff=16, seed=0, scale="per_head", dropout=0.0):
    rng = np.random.default_rng(seed)
    return CrossmodalBlock(d, heads, ff, dropout, scale, rng, np.float64, "blk")


class TestPositionalEncoding:
    def test_row_zero_alternates(self):
        pe = positional_encoding(3, 8)
        np.testing.assert_array_equal(pe[0], [0, 1, 0, 1, 0, 1, 0, 1])

    def test_sin_of_one(self):
        assert abs(positional_encoding(2, 4)[1, 0] - np.sin(1.0)) < 1e-12
        assert abs(positional_encoding(2, 4)[1, 0] - 0.841471) < 1e-6

    def test_shape_and_bounds(self):
        pe = positional_encoding(4, 6)
        assert pe.shape == (4, 6)
        assert np.all(np.abs(pe) <= 1.0)

    def test_matches_formula_oracle(self):
        for l, d in [(1, 2), (5, 6), (7, 4), (3, 10)]:
            np.testing.assert_allclose(positional_encoding(l, d),
                                       oracles.positional_encoding(l, d),
                                       atol=1e-12)

    def test_invalid_args(self):
        with pytest.raises(ValidationError):
            positional_encoding(0, 4)
        with pytest.raises(ValidationError):
            positional_encoding(3, 1)


class TestEntryEmbedding:
    def test_rows_normalized(self):
        rng = np.random.default_rng(0)
        emb = EntryEmbedding(12, np.float64, "e")
        out = emb.forward(rng.standard_normal((3, 6, 12)))
        np.testing.assert_allclose(out.mean(axis=-1), 0.0, atol=1e-6)
        np.testing.assert_allclose(out.var(axis=-1), 1.0, atol=1e-4)

    def test_zero_input_regression_fixture(self):
        emb = EntryEmbedding(6, np.float64, "e")
        out = emb.forward(np.zeros((1, 4, 6)))
        np.testing.assert_allclose(out[0], EMBED_ZERO_FIXTURE, atol=1e-7)

    def test_pure_function(self):
        rng = np.random.default_rng(1)
        emb = EntryEmbedding(8, np.float64, "e")
        x = rng.standard_normal((2, 5, 8))
        np.testing.assert_array_equal(emb.forward(x), emb.forward(x))

    def test_matches_oracle(self):
        rng = np.random.default_rng(2)
        emb = EntryEmbedding(6, np.float64, "e")
        emb.ln.gain.value = rng.standard_normal(6)
        emb.ln.offset.value = rng.standard_normal(6)
        x = rng.standard_normal((1, 5, 6))
        expected = oracles.embed(x[0], emb.ln.gain.value, emb.ln.offset.value)
        np.testing.assert_allclose(emb.forward(x)[0], expected, atol=1e-10)


class TestMultiHeadAttention:
    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(3)
        mha = MultiHeadAttention(8, 4, "per_head", rng, np.float64, "m")
        mha.forward(rng.standard_normal((2, 5, 8)), rng.standard_normal((2, 7, 8)))
        att = mha.last_attention
        assert att.shape == (2, 4, 5, 7)
        np.testing.assert_allclose(att.sum(axis=-1), 1.0, atol=1e-6)
        assert np.all(att > 0)

    def test_singleton_source_point_mass(self):
        rng = np.random.default_rng(4)
        mha = MultiHeadAttention(6, 2, "per_head", rng, np.float64, "m")
        source = rng.standard_normal((1, 1, 6))
        out = mha.forward(rng.standard_normal((1, 4, 6)), source)
        np.testing.assert_allclose(mha.last_attention, 1.0, atol=1e-12)
        # every output row equals the projected single source row
        v = mha.proj_v.forward(source)
        expected = mha.proj_out.forward(v)[0, 0]
        for t in range(4):
            np.testing.assert_allclose(out[0, t], expected, atol=1e-10)

    def test_identical_keys_give_uniform_attention(self):
        rng = np.random.default_rng(5)
        mha = MultiHeadAttention(6, 3, "per_head", rng, np.float64, "m")
        source = np.repeat(rng.standard_normal((1, 1, 6)), 5, axis=1)
        source += 0.0  # all rows identical
        query = rng.standard_normal((1, 4, 6))
        out = mha.forward(query, source)
        np.testing.assert_allclose(mha.last_attention, 0.2, atol=1e-12)
        v_mean = mha.proj_v.forward(source).mean(axis=1)
        expected = mha.proj_out.forward(v_mean[:, None, :])[0, 0]
        for t in range(4):
            np.testing.assert_allclose(out[0, t], expected, atol=1e-10)

    def test_scale_modes_differ(self):
        rng = np.random.default_rng(6)
        q = rng.standard_normal((1, 3, 8))
        s = rng.standard_normal((1, 3, 8))
        out = {}
        for mode in ("per_head", "full_dim"):
            mha = MultiHeadAttention(8, 2, mode, np.random.default_rng(7),
                                     np.float64, "m")
            out[mode] = mha.forward(q, s)
        assert np.abs(out["per_head"] - out["full_dim"]).max() > 1e-8

    def test_indivisible_heads_rejected(self):
        with pytest.raises(ConfigError):
            MultiHeadAttention(6, 4, "per_head", np.random.default_rng(0),
                               np.float64, "m")


class TestCrossmodalBlock:
    def test_shape_contract(self):
        rng = np.random.default_rng(8)
        blk = make_block()
        for l, ls in [(1, 1), (3, 5), (6, 2)]:
            out = blk.forward(rng.standard_normal((2, l, 8)),
                              rng.standard_normal((2, ls, 8)))
            assert out.shape == (2, l, 8)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(9)
        for trial in range(25):
            heads = int(rng.choice([1, 2, 4]))
            blk = make_block(d=8, heads=heads, ff=6, seed=200 + trial)
            l = int(rng.integers(1, 5))
            ls = int(rng.integers(1, 5))
            target = rng.standard_normal((1, l, 8))
            kv = rng.standard_normal((1, ls, 8))
            out = blk.forward(target, kv)
            expected = oracles.crossmodal_block(
                target[0], kv[0], oracles.block_params(blk), heads, blk.mha.scale)
            np.testing.assert_allclose(out[0], expected, atol=1e-10)

    def test_gradients_through_embed_and_block(self):
        # analytic vs central differences for a scalar loss over one block
        rng = np.random.default_rng(10)
        emb = EntryEmbedding(6, np.float64, "e")
        blk = make_block(d=6, heads=2, ff=5, seed=11)
        src_ln = LayerNorm(6, np.float64, "src")
        x = rng.standard_normal((2, 3, 6))
        src = rng.standard_normal((2, 4, 6))
        weight = rng.standard_normal((2, 3, 6))

        def loss_value():
            return float(np.sum(weight * blk.forward(emb.forward(x),
                                                     src_ln.forward(src))))

        params = list(emb.params()) + list(blk.params()) + list(src_ln.params())
        for p in params:
            p.zero_grad()
        blk.forward(emb.forward(x), src_ln.forward(src))
        dtarget, dkv = blk.backward(weight)
        emb.backward(dtarget)
        src_ln.backward(dkv)

        h = 1e-5
        rng_pick = np.random.default_rng(12)
        for p in params:
            flat = p.value.reshape(-1)
            grad = p.grad.reshape(-1)
            for i in rng_pick.choice(flat.size, size=min(4, flat.size), replace=False):
                orig = flat[i]
                flat[i] = orig + h
                up = loss_value()
                flat[i] = orig - h
                lo = loss_value()
                flat[i] = orig
                fd = (up - lo) / (2 * h)
                assert abs(grad[i] - fd) / max(abs(grad[i]), abs(fd), 1e-3) < 1e-4


class TestAdjustStack:
    def make_stack(self, d=6, n=1, heads=2, ff=5, seed=0):
        rng = np.random.default_rng(seed)
        return AdjustStack(d, n, heads, ff, 0.0, "per_head", rng, np.float64, "adj")

    def test_shape_preserved(self):
        rng = np.random.default_rng(13)
        for n, l in [(1, 2), (2, 5), (3, 1)]:
            stack = self.make_stack(n=n, seed=n)
            args = [rng.standard_normal((2, l, 6)) for _ in range(3)]
            assert stack.forward(*args).shape == (2, l, 6)

    def test_composition_oracle(self):
        # N=1, h=1: embed all three inputs, one block per stage, loop oracles
        stack = self.make_stack(d=2, n=1, heads=1, ff=3, seed=14)
        rng = np.random.default_rng(15)
        fusion, s1, s2 = [rng.standard_normal((1, 2, 2)) for _ in range(3)]
        out = stack.forward(fusion, s1, s2)

        def embed_of(emb, x):
            return oracles.embed(x[0], emb.ln.gain.value, emb.ln.offset.value)

        e_f = embed_of(stack.embed_fusion, fusion)
        e_1 = embed_of(stack.embed_src1, s1)
        e_2 = embed_of(stack.embed_src2, s2)
        kv1 = oracles.layer_norm(e_1, stack.stage1.ln_source.gain.value,
                                 stack.stage1.ln_source.offset.value)
        blk1 = stack.stage1.blocks[0]
        mid = oracles.crossmodal_block(e_f, kv1, oracles.block_params(blk1),
                                       1, blk1.mha.scale)
        kv2 = oracles.layer_norm(e_2, stack.stage2.ln_source.gain.value,
                                 stack.stage2.ln_source.offset.value)
        blk2 = stack.stage2.blocks[0]
        expected = oracles.crossmodal_block(mid, kv2, oracles.block_params(blk2),
                                            1, blk2.mha.scale)
        np.testing.assert_allclose(out[0], expected, atol=1e-10)

    def test_eval_determinism(self):
        rng = np.random.default_rng(16)
        stack = self.make_stack(n=2, seed=17)
        args = [rng.standard_normal((2, 4, 6)) for _ in range(3)]
        a = stack.forward(*args, train=False)
        b = stack.forward(*args, train=False)
        np.testing.assert_array_equal(a, b)

    def test_swapping_sources_changes_output(self):
        rng = np.random.default_rng(18)
        stack = self.make_stack(n=1, seed=19)
        fusion, s1, s2 = [rng.standard_normal((1, 4, 6)) for _ in range(3)]
        a = stack.forward(fusion, s1, s2)
        b = stack.forward(fusion, s2, s1)
        assert np.abs(a - b).max() > 1e-6

    def test_dropout_train_vs_eval(self):
        stack = self.make_stack()
        for blk in stack.stage1.blocks + stack.stage2.blocks:
            blk.ff.drop.rate = 0.5
        rng = np.random.default_rng(20)
        args = [rng.standard_normal((1, 3, 6)) for _ in range(3)]
        eval_out = stack.forward(*args, train=False)
        train_out = stack.forward(*args, train=True, rng=np.random.default_rng(21))
        assert np.abs(eval_out - train_out).max() > 1e-9

    def test_shape_mismatch_rejected(self):
        stack = self.make_stack()
        with pytest.raises(ValidationError):
            stack.forward(np.zeros((1, 3, 6)), np.zeros((1, 4, 6)),
                          np.zeros((1, 3, 6)))
