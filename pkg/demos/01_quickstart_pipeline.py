"""Quickstart: generate a small synthetic dataset and run the full pipeline
as a library — pairing, rotation-augmented extraction, matching, clustering,
and evaluation — printing what each stage produced along the way.

Run:  python3 demos/01_quickstart_pipeline.py
"""

from __future__ import annotations

import tempfile
from collections import Counter
from pathlib import Path

from rotatematch import (
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

workdir = Path(tempfile.mkdtemp(prefix="quickstart_"))
print(f"working in {workdir}\n")

# --- 1. A dataset we know the answer to: 2 scenes x 4 views + 2 outliers ---
manifest, gt = generate_dataset(
    SynthConfig(seed=7, scenes=2, views_per_scene=4, outliers=2),
    workdir / "dataset")
print(f"dataset '{manifest.dataset_id}': {len(manifest.images)} images")
for cluster in gt.clusters:
    print(f"  gt cluster: {sorted(cluster)}")
print(f"  gt outliers: {sorted(gt.outliers)}\n")

config = PipelineConfig()

# --- 2. Candidate pairs. Below the exhaustive threshold every pair is kept,
# so retrieval never filters anything here; with hundreds of images it would.
descriptors = [builtin_global_descriptor(im) for im in manifest.images]
pairs = adaptive_pairs(manifest, lambda m: descriptors, config)
print(f"candidate pairs: {len(pairs)} "
      f"(exhaustive below {config.exhaustive_threshold} images)\n")

# --- 3. Local features from all four orientations of each image ---
features = {im.id: extract_features(im, config) for im in manifest.images}
counts = Counter()
for fs in features.values():
    for kp in fs.keypoints:
        counts[kp.source_orientation.degrees] += 1
print("keypoints by source orientation:",
      {d: counts[d] for d in (0, 90, 180, 270)}, "\n")

# --- 4. Two-stage matching; the count gate decides which pairs survive ---
results = match_all(pairs, features, config)
kept = [r for r in results if r.kept]
print(f"matched pairs: {len(kept)} kept of {len(results)} "
      f"(gate: total >= {config.match_gate})")
for r in sorted(kept, key=lambda r: -r.total)[:5]:
    print(f"  {r.pair.a} -- {r.pair.b}: total {r.total}")
print()

# --- 5. Clusters = connected components of the kept-pair graph ---
clustering = build_clusters([im.id for im in manifest.images], results)
for cluster in clustering.clusters:
    print(f"predicted cluster: {sorted(cluster)}")
print(f"predicted outliers: {sorted(clustering.outliers)}\n")

# --- 6. Score against the generated ground truth ---
report = evaluate_dataset(gt, clustering)
print(f"maa={report.maa:.4f} cl={report.cl:.4f} score={report.score:.4f}")
