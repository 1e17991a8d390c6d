"""Two-stage rotation-aware matching with the correspondence-count gate."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .core import (
    CandidatePair,
    FeatureSet,
    Orientation,
    PairMatchResult,
    PipelineConfig,
)
from .errors import DimensionMismatch, MissingFeatures


def mutual_nn_match(desc_a: np.ndarray, desc_b: np.ndarray,
                    ratio: float) -> list[tuple[int, int]]:
    """Mutual nearest neighbors under Euclidean distance with Lowe's ratio
    test on the A->B direction (skipped when B has a single descriptor).
    Ties resolve to the lowest index."""
    if desc_a.shape[0] == 0 or desc_b.shape[0] == 0:
        return []
    if desc_a.shape[1] != desc_b.shape[1]:
        raise DimensionMismatch(
            f"descriptor dims differ: {desc_a.shape[1]} vs {desc_b.shape[1]}")
    a = np.ascontiguousarray(desc_a, dtype=np.float64)
    b = np.ascontiguousarray(desc_b, dtype=np.float64)
    # squared distances via the expansion; exact enough and O(n*m*d) in BLAS
    d2 = (np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :]
          - 2.0 * (a @ b.T))
    np.maximum(d2, 0.0, out=d2)

    nn12 = np.argmin(d2, axis=1)
    nn21 = np.argmin(d2, axis=0)
    idx = np.arange(a.shape[0])
    mutual = nn21[nn12] == idx

    if b.shape[0] > 1:
        best = d2[idx, nn12]
        masked = d2.copy()
        masked[idx, nn12] = np.inf
        second = np.min(masked, axis=1)
        ratio_ok = best <= (ratio * ratio) * second
    else:
        ratio_ok = np.ones(a.shape[0], dtype=bool)

    keep = mutual & ratio_ok
    return [(int(i), int(nn12[i])) for i in np.nonzero(keep)[0]]


def match_pair_two_stage(fa: FeatureSet, fb: FeatureSet,
                         config: PipelineConfig,
                         pair: CandidatePair | None = None) -> PairMatchResult:
    """Stage 1: all of A's features vs B's per-orientation subsets.
    Stage 2: all of B's features vs A's per-orientation subsets.
    The gate total is the raw sum of all per-orientation counts (stage
    overlaps double-count); the correspondence list is deduplicated."""
    if pair is None:
        pair = CandidatePair(a=fa.image_id, b=fb.image_id)
    stage1_counts: dict[Orientation, int] = {}
    stage2_counts: dict[Orientation, int] = {}
    seen: set[tuple[int, int]] = set()
    correspondences: list[tuple[float, float, float, float]] = []

    def record(ia: int, ib: int) -> None:
        if (ia, ib) in seen:
            return
        seen.add((ia, ib))
        ka = fa.keypoints[ia]
        kb = fb.keypoints[ib]
        correspondences.append((ka.x, ka.y, kb.x, kb.y))

    for orientation in config.rotations:
        sub_b = fb.orientation_indices(orientation)
        matches = mutual_nn_match(fa.descriptors, fb.descriptors[sub_b],
                                  config.ratio_test)
        stage1_counts[orientation] = len(matches)
        for ia, j in matches:
            record(ia, int(sub_b[j]))

    for orientation in config.rotations:
        sub_a = fa.orientation_indices(orientation)
        matches = mutual_nn_match(fb.descriptors, fa.descriptors[sub_a],
                                  config.ratio_test)
        stage2_counts[orientation] = len(matches)
        for ib, j in matches:
            record(int(sub_a[j]), ib)

    total = sum(stage1_counts.values()) + sum(stage2_counts.values())
    return PairMatchResult(
        pair=pair,
        stage1_counts=stage1_counts,
        stage2_counts=stage2_counts,
        total=total,
        kept=total >= config.match_gate,
        correspondences=correspondences,
    )


def match_all(pairs: Sequence[CandidatePair],
              features: Mapping[str, FeatureSet],
              config: PipelineConfig) -> list[PairMatchResult]:
    """Match every candidate pair; results follow input order and dropped
    pairs are reported with kept=False."""
    for p in pairs:
        for image_id in (p.a, p.b):
            if image_id not in features:
                raise MissingFeatures(f"no features for image {image_id}")
    return [match_pair_two_stage(features[p.a], features[p.b], config, pair=p)
            for p in pairs]


def write_matches(results: Sequence[PairMatchResult], path: str | Path) -> None:
    """Write match results as JSON Lines in output order."""
    with open(path, "w", encoding="utf-8") as f:
        for r in results:
            doc = {
                "a": r.pair.a,
                "b": r.pair.b,
                "stage1": {str(o.degrees): n for o, n in r.stage1_counts.items()},
                "stage2": {str(o.degrees): n for o, n in r.stage2_counts.items()},
                "total": r.total,
                "kept": r.kept,
                "correspondences": [list(c) for c in r.correspondences],
            }
            f.write(json.dumps(doc) + "\n")


def read_matches(path: str | Path) -> list[PairMatchResult]:
    results = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            results.append(PairMatchResult(
                pair=CandidatePair(a=doc["a"], b=doc["b"]),
                stage1_counts={Orientation(int(k)): v for k, v in doc["stage1"].items()},
                stage2_counts={Orientation(int(k)): v for k, v in doc["stage2"].items()},
                total=doc["total"],
                kept=doc["kept"],
                correspondences=[tuple(c) for c in doc["correspondences"]],
            ))
    return results
