"""Why rotation augmentation matters: match the same rotated-view dataset
once with all four orientations and once with the upright orientation only,
and compare per-pair match totals and the final clustering score.

Run:  python3 demos/02_rotation_ablation.py
"""

from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np

from rotatematch import (
    Orientation,
    PipelineConfig,
    SynthConfig,
    adaptive_pairs,
    build_clusters,
    builtin_global_descriptor,
    evaluate_dataset,
    extract_features,
    generate_dataset,
    match_all,
)

workdir = Path(tempfile.mkdtemp(prefix="ablation_"))

# Seed 0 gives every scene at least one view rotated by 90 or 270 degrees,
# which is exactly where upright-only matching falls apart.
manifest, gt = generate_dataset(SynthConfig(seed=0), workdir / "dataset")
ids = [im.id for im in manifest.images]
descriptors = [builtin_global_descriptor(im) for im in manifest.images]


def run(rotations: tuple[Orientation, ...]):
    config = PipelineConfig(rotations=rotations)
    pairs = adaptive_pairs(manifest, lambda m: descriptors, config)
    features = {im.id: extract_features(im, config) for im in manifest.images}
    results = match_all(pairs, features, config)
    clustering = build_clusters(ids, results)
    report = evaluate_dataset(gt, clustering)
    totals = np.array([r.total for r in results])
    return totals, sum(r.kept for r in results), report


for label, rotations in [
    ("all four rotations", tuple(Orientation)),
    ("upright only      ", (Orientation.R0,)),
]:
    totals, kept, report = run(rotations)
    print(f"{label}: mean pair total {totals.mean():6.2f}, "
          f"{kept} pairs kept, "
          f"maa={report.maa:.4f} cl={report.cl:.4f} score={report.score:.4f}")

print("\nA 90/270-degree view shares almost no upright Harris corners with")
print("its siblings, so upright-only totals fall under the match gate and")
print("the scene splinters; detecting on all four rotations restores them.")
