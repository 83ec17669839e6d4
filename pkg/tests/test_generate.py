"""Dataset generator: determinism, category mix, dedup, oracle consistency."""
from __future__ import annotations

import collections
import filecmp

import pytest

from structlang.generate import (
    BadConfig,
    DataPair,
    GenConfig,
    GenExhausted,
    PAIR_TYPES,
    generate_dataset,
    read_jsonl,
    rng_substream,
    sample_suffix_free_paths,
    split_name,
    split_pairs,
    suffix_related,
    verify_pairs,
    write_jsonl,
)


class TestDeterminism:
    def test_same_seed_same_pairs(self):
        cfg = GenConfig(seed=11, num_pairs=500)
        assert generate_dataset(cfg) == generate_dataset(cfg)

    def test_different_seed_differs(self):
        a = generate_dataset(GenConfig(seed=1, num_pairs=200))
        b = generate_dataset(GenConfig(seed=2, num_pairs=200))
        assert a != b

    def test_byte_identical_files(self, tmp_path):
        cfg = GenConfig(seed=3, num_pairs=300)
        p1 = tmp_path / "one.jsonl"
        p2 = tmp_path / "two.jsonl"
        write_jsonl(generate_dataset(cfg), p1)
        write_jsonl(generate_dataset(cfg), p2)
        assert filecmp.cmp(p1, p2, shallow=False)

    def test_substreams_are_stable(self):
        assert rng_substream(5, 0).random() == rng_substream(5, 0).random()
        assert rng_substream(5, 0).random() != rng_substream(5, 1).random()


@pytest.fixture(scope="module")
def pairs():
    return generate_dataset(GenConfig(seed=42, num_pairs=5_000))


class TestCorpusShape:
    def test_exact_count(self, pairs):
        assert len(pairs) == 5_000

    def test_no_duplicate_inputs(self, pairs):
        inputs = [p.input for p in pairs]
        assert len(set(inputs)) == len(inputs)

    def test_type_counts_match_mix(self, pairs):
        # equal weights here; allocation is exact up to rounding
        counts = collections.Counter(p.type for p in pairs)
        assert set(counts) == set(PAIR_TYPES)
        for t in PAIR_TYPES:
            assert abs(counts[t] - 1000) <= 1

    def test_oracle_consistency(self, pairs):
        assert verify_pairs(pairs) == []

    def test_category_shapes(self, pairs):
        for p in pairs:
            if p.type == "binding":
                assert "?" not in p.input
                assert p.target != "$"
            elif p.type == "unbind":
                assert "?" in p.input
                assert p.target != "$"
            elif p.type == "unbind_miss":
                assert "?" in p.input
                assert p.target == "$"
            elif p.type == "bind_unbind_rebind":
                assert "?" in p.input and p.input.startswith("(")
            else:
                assert p.input.count("?") >= 1

    def test_one_pair_per_category_at_five(self):
        pairs = generate_dataset(GenConfig(seed=0, num_pairs=5))
        assert sorted(p.type for p in pairs) == sorted(PAIR_TYPES)


class TestMissFraction:
    def test_zero_keeps_composite_queries_hitting(self):
        cfg = GenConfig(
            seed=9,
            num_pairs=600,
            query_miss_fraction=0.0,
            type_mix={"bind_unbind_rebind": 1.0, "nested_unbind": 1.0},
        )
        assert all(p.target != "$" for p in generate_dataset(cfg))

    def test_one_makes_composite_queries_miss(self):
        cfg = GenConfig(
            seed=9,
            num_pairs=600,
            query_miss_fraction=1.0,
            type_mix={"bind_unbind_rebind": 1.0, "nested_unbind": 1.0},
        )
        assert all(p.target == "$" for p in generate_dataset(cfg))

    def test_unbind_categories_pin_hit_and_miss(self):
        cfg = GenConfig(
            seed=10,
            num_pairs=400,
            query_miss_fraction=0.5,
            type_mix={"unbind": 1.0, "unbind_miss": 1.0},
        )
        for p in generate_dataset(cfg):
            assert (p.target == "$") == (p.type == "unbind_miss")


class TestPathSampling:
    def test_suffix_related(self):
        assert suffix_related(("A",), ("B", "A"))
        assert suffix_related(("B", "A"), ("A",))
        assert suffix_related(("A",), ("A",))
        assert not suffix_related(("A",), ("A", "B"))
        assert not suffix_related(("A", "B"), ("C", "D"))

    def test_sampled_sets_are_suffix_free(self):
        roles = tuple("ABCD")
        for trial in range(200):
            rng = rng_substream(77, trial)
            paths = sample_suffix_free_paths(rng, roles, 4, 3)
            assert paths is not None
            for i, p in enumerate(paths):
                for q in paths[i + 1 :]:
                    assert not suffix_related(p, q)

    def test_infeasible_sampling_returns_none(self):
        rng = rng_substream(0, 0)
        # one role, depth 1: only one path exists, three cannot
        assert sample_suffix_free_paths(rng, ("A",), 3, 1) is None


class TestErrors:
    def test_exhaustion_on_tiny_space(self):
        cfg = GenConfig(
            seed=0,
            num_pairs=10,
            max_bindings_per_sum=1,
            max_nesting_depth=1,
            type_mix={"binding": 1.0},
            symbol_vocab=("aa",),
            role_vocab=("A",),
        )
        # only "aa:A" exists; dedup starves the rest
        with pytest.raises(GenExhausted):
            generate_dataset(cfg)

    def test_bad_mix_rejected(self):
        with pytest.raises(BadConfig):
            generate_dataset(GenConfig(type_mix={"no_such_type": 1.0}))

    def test_negative_weight_rejected(self):
        with pytest.raises(BadConfig):
            generate_dataset(GenConfig(type_mix={"binding": -1.0}))

    def test_bad_fraction_rejected(self):
        with pytest.raises(BadConfig):
            generate_dataset(GenConfig(query_miss_fraction=1.5))


class TestSplits:
    def test_split_is_deterministic_per_text(self):
        assert split_name("as:U") == split_name("as:U")

    def test_partition(self):
        pairs = generate_dataset(GenConfig(seed=13, num_pairs=2_000))
        by_split = split_pairs(pairs)
        assert sum(len(v) for v in by_split.values()) == len(pairs)
        # rough 90/5/5 shape
        assert len(by_split["train"]) > 1_600
        assert len(by_split["dev"]) > 30
        assert len(by_split["test"]) > 30


class TestRoundTrip:
    def test_write_read(self, tmp_path):
        pairs = generate_dataset(GenConfig(seed=21, num_pairs=50))
        path = tmp_path / "data.jsonl"
        write_jsonl(pairs, path)
        assert read_jsonl(path) == pairs

    def test_pair_fields(self):
        p = DataPair("as:U", "as:U", "binding")
        assert (p.input, p.target, p.type) == ("as:U", "as:U", "binding")
