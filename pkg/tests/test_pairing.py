"""Candidate pair generation: exhaustive, retrieval, and the adaptive switch."""

from __future__ import annotations

from itertools import combinations

import numpy as np
import pytest

from rotatematch.core import (
    DatasetManifest,
    GlobalDescriptor,
    ImageRecord,
    PipelineConfig,
)
from rotatematch.errors import DimensionMismatch
from rotatematch.pairing import (
    adaptive_pairs,
    exhaustive_pairs,
    read_pairs,
    retrieval_pairs,
    write_pairs,
)


def descriptors_1d(positions):
    """Embed scalar positions on a line; pairwise distances equal |pi - pj|."""
    out = []
    for i, p in enumerate(positions):
        out.append(GlobalDescriptor(image_id=chr(ord("A") + i),
                                    vector=np.array([float(p), 0.0])))
    return out


class TestExhaustive:
    def test_counts(self):
        assert len(exhaustive_pairs([f"i{k}" for k in range(5)])) == 10
        assert exhaustive_pairs(["only"]) == []

    def test_canonical_order(self):
        pairs = exhaustive_pairs(["c", "a", "b"])
        assert [p.key for p in pairs] == [("a", "b"), ("a", "c"), ("b", "c")]
        assert all(not p.scored for p in pairs)


class TestRetrieval:
    def test_threshold_keeps_close_pair(self):
        config = PipelineConfig(distance_threshold=2.0, min_pairs=1)
        pairs = retrieval_pairs(descriptors_1d([0, 1, 5]), config)
        assert [(p.a, p.b, p.distance) for p in pairs] == [("A", "B", 1.0)]

    def test_floor_forces_second_pair(self):
        config = PipelineConfig(distance_threshold=2.0, min_pairs=2)
        pairs = retrieval_pairs(descriptors_1d([0, 1, 5]), config)
        assert [(p.a, p.b, p.distance) for p in pairs] == [
            ("A", "B", 1.0), ("B", "C", 4.0)]

    def test_auto_returns_full_ranking(self):
        config = PipelineConfig()  # distance_threshold="auto"
        pairs = retrieval_pairs(descriptors_1d([0, 1, 5]), config)
        assert [(p.a, p.b, p.distance) for p in pairs] == [
            ("A", "B", 1.0), ("B", "C", 4.0), ("A", "C", 5.0)]

    def test_sorted_by_distance_then_key(self, rng):
        descriptors = [GlobalDescriptor(image_id=f"i{k:02d}", vector=rng.normal(size=8))
                       for k in range(12)]
        pairs = retrieval_pairs(descriptors, PipelineConfig())
        keys = [(p.distance, p.key) for p in pairs]
        assert keys == sorted(keys)
        assert len({p.key for p in pairs}) == len(pairs)

    def test_scored_flag_and_symmetry(self):
        pairs = retrieval_pairs(descriptors_1d([3, 1]), PipelineConfig())
        assert pairs[0].scored
        assert pairs[0].key == ("A", "B")
        assert pairs[0].distance == 2.0

    def test_dim_mismatch(self):
        descriptors = descriptors_1d([0, 1])
        descriptors.append(GlobalDescriptor(image_id="C", vector=np.zeros(3)))
        with pytest.raises(DimensionMismatch):
            retrieval_pairs(descriptors, PipelineConfig())

    def test_fewer_than_two(self):
        assert retrieval_pairs(descriptors_1d([0]), PipelineConfig()) == []


def manifest_of(n):
    images = [ImageRecord.from_array(f"i{k:02d}", np.zeros((16, 16), dtype=np.uint8))
              for k in range(n)]
    return DatasetManifest(dataset_id="d", images=images)


class TestAdaptive:
    @pytest.mark.parametrize("n", range(2, 26))
    def test_counts_across_sizes(self, rng, n):
        config = PipelineConfig()

        def provider(manifest):
            return [GlobalDescriptor(image_id=i, vector=rng.normal(size=8))
                    for i in manifest.ids()]

        pairs = adaptive_pairs(manifest_of(n), provider, config)
        full = n * (n - 1) // 2
        if n < config.exhaustive_threshold:
            assert len(pairs) == full
            assert all(not p.scored for p in pairs)
        else:
            assert len(pairs) >= min(config.min_pairs, full)
            assert all(p.scored for p in pairs)
            keys = [(p.distance, p.key) for p in pairs]
            assert keys == sorted(keys)
        assert len({p.key for p in pairs}) == len(pairs)

    def test_n2_single_pair(self):
        pairs = adaptive_pairs(manifest_of(2), lambda m: [], PipelineConfig())
        assert len(pairs) == 1

    def test_n19_exhaustive_not_scored(self):
        pairs = adaptive_pairs(manifest_of(19), lambda m: [], PipelineConfig())
        assert len(pairs) == 171
        assert all(not p.scored for p in pairs)

    def test_provider_unused_below_threshold(self):
        def provider(manifest):  # pragma: no cover - must not run
            raise AssertionError("provider called for a small dataset")

        assert len(adaptive_pairs(manifest_of(5), provider, PipelineConfig())) == 10


class TestPairsFile:
    def test_jsonl_round_trip(self, tmp_path):
        pairs = retrieval_pairs(descriptors_1d([0, 1, 5]), PipelineConfig())
        path = tmp_path / "pairs.jsonl"
        write_pairs(pairs, path)
        assert len(path.read_text().strip().splitlines()) == 3
        loaded = read_pairs(path)
        assert [(p.key, p.distance, p.scored) for p in loaded] == [
            (p.key, p.distance, p.scored) for p in pairs]
