"""Deterministic synthetic dataset generation."""

from __future__ import annotations

import numpy as np
import pytest

from rotatematch.core import load_manifest, validate_manifest
from rotatematch.synthetic import SynthConfig, generate_dataset


class TestSynthConfig:
    def test_defaults(self):
        config = SynthConfig()
        assert (config.scenes, config.views_per_scene, config.outliers) == (3, 8, 4)
        assert config.base_size == 256
        assert config.crop_fraction == 0.85
        assert config.brightness_jitter == 10

    @pytest.mark.parametrize("kwargs", [
        {"scenes": 0},
        {"views_per_scene": 1},
        {"outliers": -1},
        {"crop_fraction": 0.5},
        {"crop_fraction": 1.01},
    ])
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            SynthConfig(**kwargs)


class TestGenerateDataset:
    def test_counts_and_ground_truth(self, synth_dataset):
        out, manifest, gt = synth_dataset
        assert len(manifest.images) == 28
        assert [len(c) for c in gt.clusters] == [8, 8, 8]
        assert len(gt.outliers) == 4
        assert gt.universe() == set(manifest.ids())
        assert sorted(p.name for p in (out / "images").iterdir())[:2] == [
            "outlier00.png", "outlier01.png"]

    def test_manifest_and_gt_files_valid(self, synth_dataset):
        out, _, gt = synth_dataset
        manifest = load_manifest(out / "manifest.json")
        assert validate_manifest(manifest) == []
        from rotatematch.scene_graph import read_clustering

        loaded = read_clustering(out / "gt.json")
        assert loaded.clusters == gt.clusters
        assert loaded.outliers == gt.outliers

    def test_view_dimensions(self, synth_dataset):
        _, manifest, _ = synth_dataset
        side = round(0.85 * 256)
        for im in manifest.images:
            assert im.load().shape == (side, side)

    def test_same_seed_byte_identical(self, tmp_path):
        config = SynthConfig(seed=7, scenes=1, views_per_scene=2, outliers=1,
                             base_size=64)
        generate_dataset(config, tmp_path / "a")
        generate_dataset(config, tmp_path / "b")
        for rel in sorted(p.relative_to(tmp_path / "a")
                          for p in (tmp_path / "a").rglob("*") if p.is_file()):
            assert (tmp_path / "a" / rel).read_bytes() == \
                (tmp_path / "b" / rel).read_bytes(), rel

    def test_different_seed_changes_pixels_not_counts(self, tmp_path):
        config_a = SynthConfig(seed=1, scenes=1, views_per_scene=2, base_size=64,
                               outliers=0)
        config_b = SynthConfig(seed=2, scenes=1, views_per_scene=2, base_size=64,
                               outliers=0)
        manifest_a, gt_a = generate_dataset(config_a, tmp_path / "a")
        manifest_b, gt_b = generate_dataset(config_b, tmp_path / "b")
        assert manifest_a.ids() == manifest_b.ids()
        assert [len(c) for c in gt_a.clusters] == [len(c) for c in gt_b.clusters]
        assert any(not np.array_equal(x.load(), y.load())
                   for x, y in zip(manifest_a.images, manifest_b.images))

    def test_full_crop_views_are_exact_rotations(self, tmp_path):
        """With crop_fraction=1 two views of a scene differ only by a
        90-degree pixel permutation plus a constant brightness shift."""
        config = SynthConfig(seed=3, scenes=1, views_per_scene=2, outliers=0,
                             crop_fraction=1.0)
        manifest, _ = generate_dataset(config, tmp_path / "ds")
        a = manifest.images[0].load().astype(np.int64)
        b = manifest.images[1].load().astype(np.int64)
        deltas = []
        for k in range(4):
            rotated = np.rot90(a, k=k)
            if rotated.shape == b.shape:
                diff = b - rotated
                if diff.max() == diff.min():
                    deltas.append(int(diff.max()))
        assert deltas, "no pure rotation+shift relation found"
        assert all(abs(d) <= 2 * config.brightness_jitter for d in deltas)

    def test_texture_values_never_clip(self, tmp_path):
        """The brightness budget keeps every view strictly inside [0, 255] so
        repeated structure stays byte-identical between views."""
        config = SynthConfig(seed=5, scenes=2, views_per_scene=3, outliers=1)
        manifest, _ = generate_dataset(config, tmp_path / "ds")
        for im in manifest.images:
            pixels = im.load()
            assert pixels.min() > 0
            assert pixels.max() < 255
