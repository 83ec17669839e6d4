"""Tensor-product representations: codebooks, encode/unbind/decode, flattening."""
from __future__ import annotations

import numpy as np
import pytest

from structlang.semantics import MISS, Miss, Structure, evaluate
from structlang.syntax import Alphabet, parse_text
from structlang.generate import GenConfig, generate_dataset, rng_substream, sample_expr
from structlang.tpr import (
    AmbiguousDecode,
    DimTooSmall,
    IllConditioned,
    TprRep,
    UnknownToken,
    flatten_rep,
    load_codebook,
    make_codebook,
    save_codebook,
    tpr_decode,
    tpr_encode,
    tpr_unbind,
    zero_rep,
)

SYMS = ["aa", "bb", "cc", "dd"]
ROLES = ["A", "B", "C"]


def cb_one_hot():
    return make_codebook(SYMS, ROLES, 4, 3, scheme="one_hot")


def cb_gauss(seed=7, sdim=16, rdim=16):
    return make_codebook(SYMS, ROLES, sdim, rdim, scheme="gaussian", seed=seed)


def cb_orth(seed=3):
    return make_codebook(SYMS, ROLES, 6, 5, scheme="orthogonal", seed=seed)


class TestCodebook:
    def test_one_hot_vectors(self):
        cb = cb_one_hot()
        np.testing.assert_array_equal(cb.symbol_vecs["aa"], [1, 0, 0, 0])
        np.testing.assert_array_equal(cb.symbol_vecs["dd"], [0, 0, 0, 1])
        np.testing.assert_array_equal(cb.role_vecs["B"], [0, 1, 0])
        # identity roles unbind with themselves
        np.testing.assert_allclose(cb.unbind_vecs["B"], cb.role_vecs["B"], atol=1e-12)

    def test_orthogonal_rows_orthonormal(self):
        cb = cb_orth()
        mat = np.stack([cb.role_vecs[r] for r in ROLES])
        np.testing.assert_allclose(mat @ mat.T, np.eye(3), atol=1e-12)

    @pytest.mark.parametrize("scheme", ["one_hot", "gaussian", "orthogonal"])
    def test_biorthogonality(self, scheme):
        cb = make_codebook(SYMS, ROLES, 8, 8, scheme=scheme, seed=5)
        for j, rj in enumerate(ROLES):
            for k, rk in enumerate(ROLES):
                dot = float(cb.role_vecs[rj] @ cb.unbind_vecs[rk])
                assert abs(dot - (1.0 if j == k else 0.0)) <= 1e-9

    def test_gaussian_deterministic(self):
        a, b = cb_gauss(seed=9), cb_gauss(seed=9)
        for s in SYMS:
            np.testing.assert_array_equal(a.symbol_vecs[s], b.symbol_vecs[s])
        for r in ROLES:
            np.testing.assert_array_equal(a.unbind_vecs[r], b.unbind_vecs[r])

    def test_gaussian_condition_bound(self):
        cb = cb_gauss()
        assert cb.role_cond < 1e6 and cb.symbol_cond < 1e6

    def test_dim_too_small(self):
        with pytest.raises(DimTooSmall):
            make_codebook(SYMS, ROLES, 3, 3, scheme="one_hot")
        with pytest.raises(DimTooSmall):
            make_codebook(SYMS, ROLES, 4, 2, scheme="orthogonal")

    def test_overcomplete_gaussian_roles_rejected(self):
        # more roles than role dims cannot be biorthogonalized
        with pytest.raises(IllConditioned):
            make_codebook(SYMS, ROLES, 8, 2, scheme="gaussian", seed=0)

    def test_save_load_round_trip(self, tmp_path):
        cb = cb_gauss(seed=31)
        path = tmp_path / "cb.json"
        save_codebook(cb, path)
        back = load_codebook(path)
        assert back.scheme == cb.scheme and back.seed == cb.seed
        for r in ROLES:
            np.testing.assert_array_equal(back.unbind_vecs[r], cb.unbind_vecs[r])
        assert back.role_cond == cb.role_cond


class TestRepAlgebra:
    def test_zero_rep(self):
        cb = cb_one_hot()
        z = zero_rep(cb, max_depth=2)
        assert z.norm() == 0.0
        assert z.components[2].shape == (4, 3, 3)

    def test_add_and_allclose(self):
        cb = cb_one_hot()
        a = tpr_encode(Structure({("A",): "aa"}), cb)
        b = tpr_encode(Structure({("B",): "bb"}), cb)
        both = tpr_encode(Structure({("A",): "aa", ("B",): "bb"}), cb)
        assert (a + b).allclose(both)
        assert not a.allclose(b)

    def test_add_mismatched_depths(self):
        cb = cb_one_hot()
        a = tpr_encode(Structure({(): "aa"}), cb)
        b = tpr_encode(Structure({("A", "B"): "bb"}), cb)
        s = a + b
        assert sorted(s.components) == [0, 2]


class TestEncode:
    def test_bare_symbol_is_symbol_vector(self):
        cb = cb_one_hot()
        rep = tpr_encode(Structure({(): "cc"}), cb)
        np.testing.assert_array_equal(rep.components[0], cb.symbol_vecs["cc"])

    def test_one_hot_single_binding_single_entry(self):
        cb = cb_one_hot()
        rep = tpr_encode(Structure({("B",): "aa"}), cb)
        tensor = rep.components[1]
        assert tensor.shape == (4, 3)
        assert tensor[0, 1] == 1.0 and tensor.sum() == 1.0

    def test_axis_order_symbol_then_roles_innermost_first(self):
        # aa bound by A then B: depth-2 tensor sym x A x B
        cb = cb_one_hot()
        rep = tpr_encode(Structure({("A", "B"): "aa"}), cb)
        tensor = rep.components[2]
        assert tensor.shape == (4, 3, 3)
        assert tensor[0, 0, 1] == 1.0 and tensor.sum() == 1.0

    def test_depth_grouping(self):
        cb = cb_one_hot()
        rep = tpr_encode(Structure({("A",): "aa", ("A", "B"): "bb"}), cb)
        assert sorted(rep.components) == [1, 2]

    def test_linearity_over_bindings(self):
        cb = cb_gauss()
        s = Structure({("A",): "aa", ("B", "C"): "bb", (): "cc"})
        parts = [tpr_encode(Structure({p: y}), cb) for p, y in s.bindings.items()]
        total = parts[0] + parts[1] + parts[2]
        assert total.allclose(tpr_encode(s, cb), atol=1e-12)

    def test_unknown_tokens(self):
        cb = cb_one_hot()
        with pytest.raises(UnknownToken):
            tpr_encode(Structure({(): "zz"}), cb)
        with pytest.raises(UnknownToken):
            tpr_encode(Structure({("Z",): "aa"}), cb)


class TestUnbind:
    @pytest.mark.parametrize("make", [cb_one_hot, cb_gauss, cb_orth])
    def test_recovers_symbol_vector(self, make):
        cb = make()
        rep = tpr_encode(Structure({("A",): "aa"}), cb)
        out = tpr_unbind(rep, "A", cb)
        np.testing.assert_allclose(out.components[0], cb.symbol_vecs["aa"], atol=1e-9)

    @pytest.mark.parametrize("make", [cb_one_hot, cb_gauss, cb_orth])
    def test_wrong_role_is_zero(self, make):
        cb = make()
        rep = tpr_encode(Structure({("A",): "aa"}), cb)
        out = tpr_unbind(rep, "B", cb)
        assert out.norm() <= 1e-9

    def test_peels_outermost_axis(self):
        cb = cb_gauss()
        rep = tpr_encode(Structure({("A", "B", "C"): "dd"}), cb)
        # stored innermost-first: peel C, then B, then A
        out = tpr_unbind(tpr_unbind(tpr_unbind(rep, "C", cb), "B", cb), "A", cb)
        np.testing.assert_allclose(out.components[0], cb.symbol_vecs["dd"], atol=1e-9)

    def test_depth_zero_discarded(self):
        cb = cb_one_hot()
        rep = tpr_encode(Structure({(): "aa"}), cb)
        assert tpr_unbind(rep, "A", cb).components == {}

    def test_matches_evaluator_on_sum(self):
        cb = cb_gauss()
        text = "aa:A + bb:A:B + cc:B:B"
        s = evaluate(parse_text(text))
        peeled = tpr_unbind(tpr_encode(s, cb), "B", cb)
        want = evaluate(parse_text(text + " ? B"))
        assert isinstance(want, Structure)
        assert peeled.allclose(tpr_encode(want, cb), atol=1e-9)


class TestDecode:
    @pytest.mark.parametrize("make", [cb_one_hot, cb_gauss, cb_orth])
    def test_round_trip_examples(self, make):
        cb = make()
        for text in ["aa", "aa:A", "aa:A:B", "aa:A + bb:B", "aa:A + bb:A:B:C"]:
            s = evaluate(parse_text(text))
            assert tpr_decode(tpr_encode(s, cb), cb) == s

    def test_zero_rep_is_miss(self):
        cb = cb_one_hot()
        assert tpr_decode(zero_rep(cb, 1), cb) is MISS

    def test_unbind_miss(self):
        cb = cb_gauss()
        rep = tpr_encode(Structure({("A",): "aa"}), cb)
        assert tpr_decode(tpr_unbind(rep, "B", cb), cb) is MISS

    def test_superposed_symbols_ambiguous(self):
        cb = cb_one_hot()
        rep = TprRep({0: cb.symbol_vecs["aa"] + cb.symbol_vecs["bb"]})
        with pytest.raises(AmbiguousDecode):
            tpr_decode(rep, cb)

    def test_max_depth_truncates(self):
        cb = cb_one_hot()
        s = Structure({("A", "B", "C"): "aa"})
        assert tpr_decode(tpr_encode(s, cb), cb, max_depth=2) is MISS

    def test_query_pipeline_matches_evaluator(self):
        relaxed = Alphabet(symbol_pattern=r"[a-z]{1,2}")
        cb = make_codebook(
            ["a", "b", "c"], ["L", "R"], 12, 12, scheme="gaussian", seed=2
        )
        held = evaluate(parse_text("a:L + b:L:R + c:R:R", relaxed))
        rep = tpr_unbind(tpr_encode(held, cb), "R", cb)
        want = evaluate(parse_text("a:L + b:L:R + c:R:R ? R", relaxed))
        assert tpr_decode(rep, cb) == want

    def test_random_sweep_against_evaluator(self):
        cfg = GenConfig(seed=0)
        cb = make_codebook(
            list(cfg.symbol_vocab[:40]), list(cfg.role_vocab[:8]), 48, 12,
            scheme="gaussian", seed=77,
        )
        vocab_cfg = GenConfig(
            seed=0, symbol_vocab=tuple(cb.symbols), role_vocab=tuple(cb.roles),
            max_bindings_per_sum=3, max_nesting_depth=3,
        )
        for i in range(60):
            rng = rng_substream(123, "tpr-sweep", i)
            expr = sample_expr(vocab_cfg, rng, "binding")
            value = evaluate(expr)
            assert isinstance(value, Structure)
            assert tpr_decode(tpr_encode(value, cb), cb) == value


class TestFlatten:
    def test_layout_and_length(self):
        cb = cb_one_hot()
        rep = tpr_encode(Structure({(): "aa", ("B",): "bb"}), cb)
        flat = flatten_rep(rep, cb, max_depth=2)
        assert flat.shape == (4 + 4 * 3 + 4 * 3 * 3,)
        np.testing.assert_array_equal(flat[:4], [1, 0, 0, 0])
        # depth 1 block is row-major: symbol index 1, role index 1
        assert flat[4 + 1 * 3 + 1] == 1.0
        assert flat[4 + 12 :].sum() == 0.0

    def test_missing_depths_zero_filled(self):
        cb = cb_one_hot()
        rep = tpr_encode(Structure({(): "aa"}), cb)
        flat = flatten_rep(rep, cb, max_depth=1)
        assert flat.shape == (16,)
        assert flat[4:].sum() == 0.0
