"""Candidate pair generation: exhaustive below the dataset-size threshold,
global-descriptor retrieval with a minimum-pair floor above it."""

from __future__ import annotations

import json
from itertools import combinations
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .core import CandidatePair, DatasetManifest, GlobalDescriptor, PipelineConfig
from .errors import DimensionMismatch

DescriptorProvider = Callable[[DatasetManifest], Sequence[GlobalDescriptor]]


def exhaustive_pairs(ids: Sequence[str]) -> list[CandidatePair]:
    """All C(N,2) canonical pairs in lexicographic order, unscored."""
    ordered = sorted(ids)
    return [CandidatePair(a=a, b=b) for a, b in combinations(ordered, 2)]


def retrieval_pairs(descriptors: Sequence[GlobalDescriptor],
                    config: PipelineConfig) -> list[CandidatePair]:
    """Rank all pairs by Euclidean descriptor distance; apply the distance
    threshold (if configured) and the minimum-pair floor; sort ascending by
    distance with ties broken by canonical pair order."""
    if len(descriptors) < 2:
        return []
    dim = descriptors[0].dim
    for d in descriptors:
        if d.dim != dim:
            raise DimensionMismatch(
                f"descriptor for {d.image_id} has dim {d.dim}, expected {dim}")

    matrix = np.stack([d.vector for d in descriptors])
    ids = [d.image_id for d in descriptors]
    diffs = matrix[:, None, :] - matrix[None, :, :]
    dist = np.sqrt(np.sum(diffs * diffs, axis=-1))

    all_pairs = []
    for i, j in combinations(range(len(ids)), 2):
        all_pairs.append(CandidatePair(a=ids[i], b=ids[j],
                                       distance=float(dist[i, j]), scored=True))
    all_pairs.sort(key=lambda p: (p.distance, p.key))

    if config.threshold_is_auto:
        # no threshold pruning: the full ranking is the candidate list
        return all_pairs

    tau = float(config.distance_threshold)
    kept = [p for p in all_pairs if p.distance <= tau]
    floor = min(config.min_pairs, len(all_pairs))
    if len(kept) < floor:
        kept = all_pairs[:floor]
    return kept


def adaptive_pairs(manifest: DatasetManifest,
                   descriptor_provider: DescriptorProvider,
                   config: PipelineConfig) -> list[CandidatePair]:
    """Dataset-adaptive strategy: exhaustive for small datasets, descriptor
    retrieval (descriptors obtained from the provider) for large ones."""
    ids = manifest.ids()
    if len(ids) < config.exhaustive_threshold:
        return exhaustive_pairs(ids)
    descriptors = descriptor_provider(manifest)
    return retrieval_pairs(descriptors, config)


def write_pairs(pairs: Sequence[CandidatePair], path: str | Path) -> None:
    """Write pairs as JSON Lines in output order."""
    with open(path, "w", encoding="utf-8") as f:
        for p in pairs:
            f.write(json.dumps({"a": p.a, "b": p.b, "distance": p.distance,
                                "scored": p.scored}) + "\n")


def read_pairs(path: str | Path) -> list[CandidatePair]:
    pairs = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            pairs.append(CandidatePair(a=doc["a"], b=doc["b"],
                                       distance=doc["distance"], scored=doc["scored"]))
    return pairs
