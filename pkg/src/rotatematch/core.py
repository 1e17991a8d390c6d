"""Shared domain types, pipeline configuration, and manifest handling."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from PIL import Image


class Orientation(Enum):
    """Clockwise rotation applied to an image before feature extraction."""

    R0 = 0
    R90 = 90
    R180 = 180
    R270 = 270

    def compose(self, other: "Orientation") -> "Orientation":
        return Orientation((self.value + other.value) % 360)

    @property
    def degrees(self) -> int:
        return self.value


ALL_ORIENTATIONS = (Orientation.R0, Orientation.R90, Orientation.R180, Orientation.R270)


def _to_grayscale(arr: np.ndarray) -> np.ndarray:
    """Convert an HxWx3 (or HxWx4) uint8 array to 8-bit luma (Rec.601, rounded)."""
    if arr.ndim == 2:
        return arr.astype(np.uint8)
    rgb = arr[..., :3].astype(np.int64)
    luma = (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000
    return luma.astype(np.uint8)


@dataclass
class ImageRecord:
    """One input image: identity, location, and a lazily loaded grayscale buffer."""

    id: str
    path: str
    width: int = 0
    height: int = 0
    _pixels: np.ndarray | None = field(default=None, repr=False, compare=False)

    def load(self) -> np.ndarray:
        """Return the HxW uint8 grayscale pixel array, loading it on first use."""
        if self._pixels is None:
            with Image.open(self.path) as im:
                arr = np.asarray(im)
            pixels = _to_grayscale(arr)
            self._pixels = pixels
            self.height, self.width = pixels.shape
        return self._pixels

    @classmethod
    def from_array(cls, image_id: str, pixels: np.ndarray, path: str = "") -> "ImageRecord":
        pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
        h, w = pixels.shape
        return cls(id=image_id, path=path, width=w, height=h, _pixels=pixels)


@dataclass
class DatasetManifest:
    """An ordered collection of images forming one dataset."""

    dataset_id: str
    images: list[ImageRecord]

    def ids(self) -> list[str]:
        return [im.id for im in self.images]

    def __getitem__(self, image_id: str) -> ImageRecord:
        for im in self.images:
            if im.id == image_id:
                return im
        raise KeyError(image_id)


def load_manifest(path: str | Path) -> DatasetManifest:
    """Read a manifest JSON file. Image paths are resolved relative to the file."""
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    base = path.parent
    images = [
        ImageRecord(id=entry["id"], path=str(base / entry["path"]))
        for entry in doc["images"]
    ]
    return DatasetManifest(dataset_id=doc["dataset_id"], images=images)


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    base = Path(path).parent
    doc = {
        "dataset_id": manifest.dataset_id,
        "images": [
            {"id": im.id, "path": os.path.relpath(im.path, base)}
            for im in manifest.images
        ],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def validate_manifest(manifest: DatasetManifest) -> list[str]:
    """Check manifest invariants. Violations are returned, not raised."""
    violations = []
    seen: set[str] = set()
    for im in manifest.images:
        if im.id in seen:
            violations.append(f"duplicate id: {im.id}")
        seen.add(im.id)
        if im._pixels is None and not os.path.isfile(im.path):
            violations.append(f"missing file: {im.path}")
    return violations


@dataclass(frozen=True)
class GlobalDescriptor:
    """Unit-norm vector summarizing one whole image, used for pair retrieval."""

    image_id: str
    vector: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vector", np.asarray(self.vector, dtype=np.float64))

    @property
    def dim(self) -> int:
        return self.vector.shape[0]


@dataclass(frozen=True)
class Keypoint:
    """A detected corner in ORIGINAL-frame coordinates with its source rotation."""

    x: float
    y: float
    score: float
    source_orientation: Orientation = Orientation.R0


@dataclass
class FeatureSet:
    """All keypoints of one image plus their row-aligned descriptor matrix."""

    image_id: str
    keypoints: list[Keypoint]
    descriptors: np.ndarray  # shape (len(keypoints), descriptor_dim)

    @property
    def descriptor_dim(self) -> int:
        return self.descriptors.shape[1]

    def __len__(self) -> int:
        return len(self.keypoints)

    def orientation_indices(self, orientation: Orientation) -> np.ndarray:
        """Row indices of keypoints detected under the given orientation."""
        return np.array(
            [i for i, kp in enumerate(self.keypoints) if kp.source_orientation is orientation],
            dtype=np.int64,
        )


@dataclass(frozen=True)
class CandidatePair:
    """Canonical unordered image pair; always stored with a < b lexicographically."""

    a: str
    b: str
    distance: float = 0.0
    scored: bool = False

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError(f"self-pair: {self.a}")
        if self.a > self.b:
            lo, hi = self.b, self.a
            object.__setattr__(self, "a", lo)
            object.__setattr__(self, "b", hi)

    @property
    def key(self) -> tuple[str, str]:
        return (self.a, self.b)


@dataclass
class PairMatchResult:
    """Outcome of two-stage matching for one candidate pair."""

    pair: CandidatePair
    stage1_counts: dict[Orientation, int]
    stage2_counts: dict[Orientation, int]
    total: int
    kept: bool
    correspondences: list[tuple[float, float, float, float]]


@dataclass
class Clustering:
    """A partition of image ids into scene clusters plus discarded outliers."""

    clusters: list[set[str]]
    outliers: set[str]

    def universe(self) -> set[str]:
        ids: set[str] = set(self.outliers)
        for c in self.clusters:
            ids |= c
        return ids


@dataclass
class EvalReport:
    """Clustering metrics for one dataset (or an aggregate over datasets)."""

    maa: float
    cl: float
    score: float
    per_cluster_accuracy: list[float] = field(default_factory=list)
    alignment: dict[int, int | None] = field(default_factory=dict)


_AUTO = "auto"


@dataclass(frozen=True)
class PipelineConfig:
    """Tunable knobs of the whole pipeline with their defaults."""

    exhaustive_threshold: int = 20
    min_pairs: int = 20
    distance_threshold: float | str = _AUTO
    match_gate: int = 25
    rotations: tuple[Orientation, ...] = ALL_ORIENTATIONS
    max_keypoints_per_orientation: int = 512
    ratio_test: float = 0.9
    backend: str = "builtin"

    def __post_init__(self):
        if self.exhaustive_threshold < 2:
            raise ValueError("exhaustive_threshold must be >= 2")
        if self.min_pairs < 1:
            raise ValueError("min_pairs must be >= 1")
        if self.match_gate < 1:
            raise ValueError("match_gate must be >= 1")
        if not 0 < self.ratio_test <= 1:
            raise ValueError("ratio_test must be in (0, 1]")
        if Orientation.R0 not in self.rotations:
            raise ValueError("rotations must include R0")
        if self.backend not in ("builtin", "external"):
            raise ValueError(f"unknown backend: {self.backend}")
        # normalize rotation order so downstream iteration is canonical
        ordered = tuple(o for o in ALL_ORIENTATIONS if o in set(self.rotations))
        object.__setattr__(self, "rotations", ordered)
        if self.distance_threshold != _AUTO:
            object.__setattr__(self, "distance_threshold", float(self.distance_threshold))

    @property
    def threshold_is_auto(self) -> bool:
        return self.distance_threshold == _AUTO

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str]) -> "PipelineConfig":
        """Build a config from flat string key/value pairs (config files, CLI)."""
        kwargs: dict = {}
        for key, raw in mapping.items():
            if key in ("exhaustive_threshold", "min_pairs", "match_gate",
                       "max_keypoints_per_orientation"):
                kwargs[key] = int(raw)
            elif key == "ratio_test":
                kwargs[key] = float(raw)
            elif key == "distance_threshold":
                kwargs[key] = raw if raw == _AUTO else float(raw)
            elif key == "rotations":
                kwargs[key] = parse_rotations(raw)
            elif key == "backend":
                kwargs[key] = raw
            else:
                raise ValueError(f"unknown config key: {key}")
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        """Read a flat `key = value` config file; blank lines and # comments allowed."""
        mapping: dict[str, str] = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, _, value = line.partition("=")
                mapping[key.strip()] = value.strip()
        return cls.from_mapping(mapping)

    def override(self, **kwargs) -> "PipelineConfig":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


def parse_rotations(raw: str | Iterable[int]) -> tuple[Orientation, ...]:
    """Parse '0,90,270'-style rotation lists into Orientation tuples."""
    if isinstance(raw, str):
        parts: Sequence = [p.strip() for p in raw.split(",") if p.strip()]
    else:
        parts = list(raw)
    return tuple(Orientation(int(p)) for p in parts)
