"""Match-graph clustering: connected components over kept pairs."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from .core import Clustering, PairMatchResult
from .errors import UnknownId


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}
        self.rank = {x: 0 for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return
        if self.rank[rx] < self.rank[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        if self.rank[rx] == self.rank[ry]:
            self.rank[rx] += 1


def build_clusters(all_ids: Sequence[str],
                   results: Sequence[PairMatchResult]) -> Clustering:
    """Connected components of the kept-pair graph. Components with at least
    two images become clusters (size descending, then smallest member id);
    isolated images are outliers."""
    universe = set(all_ids)
    uf = _UnionFind(all_ids)
    for r in results:
        for image_id in (r.pair.a, r.pair.b):
            if image_id not in universe:
                raise UnknownId(f"match result references unknown image {image_id}")
        if r.kept:
            uf.union(r.pair.a, r.pair.b)

    components: dict[str, set[str]] = {}
    for image_id in all_ids:
        components.setdefault(uf.find(image_id), set()).add(image_id)

    clusters = [c for c in components.values() if len(c) >= 2]
    clusters.sort(key=lambda c: (-len(c), min(c)))
    outliers = {image_id for c in components.values() if len(c) == 1
                for image_id in c}
    return Clustering(clusters=clusters, outliers=outliers)


def write_clustering(clustering: Clustering, path: str | Path) -> None:
    """Write the clusters file (ids sorted within each set). Ground-truth
    files use the identical schema."""
    doc = {
        "clusters": [sorted(c) for c in clustering.clusters],
        "outliers": sorted(clustering.outliers),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def read_clustering(path: str | Path) -> Clustering:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    return Clustering(clusters=[set(c) for c in doc["clusters"]],
                      outliers=set(doc["outliers"]))
