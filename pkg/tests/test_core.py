"""Domain types, manifest handling, and pipeline configuration."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rotatematch.core import (
    ALL_ORIENTATIONS,
    CandidatePair,
    Clustering,
    DatasetManifest,
    ImageRecord,
    Orientation,
    PipelineConfig,
    load_manifest,
    parse_rotations,
    save_manifest,
    validate_manifest,
)

ids = st.text(alphabet="abcdefgh", min_size=1, max_size=4)


class TestOrientation:
    def test_degrees(self):
        assert [o.degrees for o in ALL_ORIENTATIONS] == [0, 90, 180, 270]

    def test_compose_wraps(self):
        assert Orientation.R270.compose(Orientation.R180) is Orientation.R90
        assert Orientation.R90.compose(Orientation.R270) is Orientation.R0

    @given(st.sampled_from(ALL_ORIENTATIONS), st.sampled_from(ALL_ORIENTATIONS))
    def test_compose_closed_and_commutative(self, a, b):
        assert a.compose(b) is b.compose(a)
        assert a.compose(b) in ALL_ORIENTATIONS

    def test_parse_rotations(self):
        assert parse_rotations("0,90,270") == (
            Orientation.R0, Orientation.R90, Orientation.R270)
        assert parse_rotations([180]) == (Orientation.R180,)
        with pytest.raises(ValueError):
            parse_rotations("0,45")


class TestImageRecord:
    def test_from_array_sets_size(self):
        rec = ImageRecord.from_array("a", np.zeros((3, 5), dtype=np.uint8))
        assert (rec.width, rec.height) == (5, 3)
        assert rec.load().shape == (3, 5)

    def test_grayscale_luma_oracle(self, tmp_path):
        # brute-force integer Rec.601 luma over every pixel
        rng = np.random.default_rng(0)
        rgb = rng.integers(0, 256, size=(7, 9, 3), dtype=np.uint8)
        from PIL import Image

        path = tmp_path / "c.png"
        Image.fromarray(rgb, mode="RGB").save(path)
        loaded = ImageRecord(id="c", path=str(path)).load()
        expected = np.empty((7, 9), dtype=np.uint8)
        for y in range(7):
            for x in range(9):
                r, g, b = (int(v) for v in rgb[y, x])
                expected[y, x] = (299 * r + 587 * g + 114 * b + 500) // 1000
        assert np.array_equal(loaded, expected)

    def test_load_is_idempotent(self):
        rec = ImageRecord.from_array("a", np.arange(12, dtype=np.uint8).reshape(3, 4))
        assert rec.load() is rec.load()


class TestManifest:
    def _write(self, tmp_path, image_ids):
        records = []
        for image_id in image_ids:
            arr = np.full((20, 20), 7, dtype=np.uint8)
            rec = ImageRecord.from_array(image_id, arr)
            from PIL import Image

            p = tmp_path / f"{image_id}.png"
            Image.fromarray(arr, mode="L").save(p)
            rec.path = str(p)
            records.append(rec)
        manifest = DatasetManifest(dataset_id="d", images=records)
        save_manifest(manifest, tmp_path / "manifest.json")
        return manifest

    def test_round_trip_relative_paths(self, tmp_path):
        self._write(tmp_path, ["a", "b"])
        loaded = load_manifest(tmp_path / "manifest.json")
        assert loaded.dataset_id == "d"
        assert loaded.ids() == ["a", "b"]
        assert validate_manifest(loaded) == []
        assert loaded["b"].load().shape == (20, 20)
        with pytest.raises(KeyError):
            loaded["zz"]

    def test_duplicate_id_violation(self, tmp_path):
        manifest = self._write(tmp_path, ["a"])
        manifest.images.append(manifest.images[0])
        assert validate_manifest(manifest) == ["duplicate id: a"]

    def test_missing_file_violation(self, tmp_path):
        manifest = self._write(tmp_path, ["a"])
        manifest.images[0]._pixels = None
        manifest.images[0].path = str(tmp_path / "gone.png")
        assert validate_manifest(manifest) == [f"missing file: {tmp_path / 'gone.png'}"]


class TestCandidatePair:
    def test_canonical_order(self):
        assert CandidatePair(a="b", b="a").key == ("a", "b")
        assert CandidatePair(a="a", b="b").key == ("a", "b")

    def test_self_pair_rejected(self):
        with pytest.raises(ValueError):
            CandidatePair(a="x", b="x")

    @given(ids, ids)
    def test_swapped_inputs_agree(self, a, b):
        if a == b:
            with pytest.raises(ValueError):
                CandidatePair(a=a, b=b)
        else:
            p, q = CandidatePair(a=a, b=b), CandidatePair(a=b, b=a)
            assert p.key == q.key
            assert p.a < p.b


class TestClustering:
    def test_universe(self):
        c = Clustering(clusters=[{"a", "b"}, {"c"}], outliers={"d"})
        assert c.universe() == {"a", "b", "c", "d"}


class TestPipelineConfig:
    def test_defaults(self):
        config = PipelineConfig()
        assert config.exhaustive_threshold == 20
        assert config.min_pairs == 20
        assert config.threshold_is_auto
        assert config.match_gate == 25
        assert config.rotations == ALL_ORIENTATIONS
        assert config.ratio_test == 0.9
        assert config.backend == "builtin"

    def test_rotation_order_normalized(self):
        config = PipelineConfig(rotations=(Orientation.R270, Orientation.R0))
        assert config.rotations == (Orientation.R0, Orientation.R270)

    @pytest.mark.parametrize("kwargs", [
        {"exhaustive_threshold": 1},
        {"min_pairs": 0},
        {"match_gate": 0},
        {"ratio_test": 0.0},
        {"ratio_test": 1.5},
        {"rotations": (Orientation.R90,)},
        {"backend": "neural"},
    ])
    def test_invalid_values_rejected(self, kwargs):
        with pytest.raises(ValueError):
            PipelineConfig(**kwargs)

    def test_from_file(self, tmp_path):
        p = tmp_path / "cfg"
        p.write_text(
            "# comment\n"
            "match_gate = 30\n"
            "rotations = 0,180\n"
            "distance_threshold = 1.5\n"
            "\n")
        config = PipelineConfig.from_file(p)
        assert config.match_gate == 30
        assert config.rotations == (Orientation.R0, Orientation.R180)
        assert config.distance_threshold == 1.5
        assert not config.threshold_is_auto

    def test_from_mapping_rejects_unknown_key(self):
        with pytest.raises(ValueError):
            PipelineConfig.from_mapping({"bogus": "1"})

    def test_override_skips_none(self):
        config = PipelineConfig().override(match_gate=None, min_pairs=5)
        assert config.match_gate == 25
        assert config.min_pairs == 5
