"""Shared fixtures: a small synthetic dataset generated once per session."""

from __future__ import annotations

import numpy as np
import pytest

from rotatematch import (
    PipelineConfig,
    SynthConfig,
    adaptive_pairs,
    builtin_global_descriptor,
    extract_features,
    generate_dataset,
    match_all,
)
from rotatematch.scene_graph import read_clustering

E2E_SEED = 0


def builtin_provider(manifest):
    return [builtin_global_descriptor(im) for im in manifest.images]


@pytest.fixture(scope="session")
def synth_dataset(tmp_path_factory):
    """Seed-fixed default dataset (3 scenes x 8 views, 4 outliers)."""
    out = tmp_path_factory.mktemp("synth") / "ds"
    manifest, gt = generate_dataset(SynthConfig(seed=E2E_SEED), out)
    return out, manifest, gt


@pytest.fixture(scope="session")
def synth_features(synth_dataset):
    """Feature sets for the session dataset under the default config."""
    _, manifest, _ = synth_dataset
    config = PipelineConfig()
    return {im.id: extract_features(im, config) for im in manifest.images}


@pytest.fixture(scope="session")
def synth_match_results(synth_dataset, synth_features):
    """Full default-config match results for every candidate pair."""
    _, manifest, _ = synth_dataset
    config = PipelineConfig()
    pairs = adaptive_pairs(manifest, builtin_provider, config)
    return pairs, match_all(pairs, synth_features, config)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def gt_clustering(synth_dataset):
    out, _, _ = synth_dataset
    return read_clustering(out / "gt.json")
