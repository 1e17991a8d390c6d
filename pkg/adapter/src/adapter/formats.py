"""Binary writers for the RMDF (global descriptor) and RMKP (keypoint) formats.

Both files are little-endian:

RMDF: magic "RMDF", u32 version=1, u32 count, u32 dim, then per descriptor a
u16 id length + UTF-8 id, then the count x dim float32 matrix row-major.

RMKP: magic "RMKP", u32 version=1, u32 image_count, u32 dim, then per image a
u16 id length + UTF-8 id, u32 keypoint count, keypoint records
(f32 x, f32 y, f32 score, u16 orientation degrees), then the
keypoint_count x dim float32 descriptor matrix row-major.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

RMDF_MAGIC = b"RMDF"
RMKP_MAGIC = b"RMKP"
VERSION = 1


@dataclass
class LocalFeatures:
    """Keypoints of one image: (x, y, score, orientation_degrees) rows plus a
    row-aligned descriptor matrix, all in the original image frame."""

    image_id: str
    keypoints: list[tuple[float, float, float, int]] = field(default_factory=list)
    descriptors: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))


def write_rmdf(ids: list[str], matrix: np.ndarray, path: str | Path) -> None:
    if matrix.ndim != 2 or matrix.shape[0] != len(ids):
        raise ValueError(f"matrix shape {matrix.shape} does not fit {len(ids)} ids")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("non-finite descriptor value")
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms < 1e-12):
        raise ValueError("zero-norm descriptor row")
    normalized = matrix / norms[:, None]
    with open(path, "wb") as f:
        f.write(RMDF_MAGIC)
        f.write(struct.pack("<III", VERSION, len(ids), matrix.shape[1]))
        for image_id in ids:
            raw = image_id.encode("utf-8")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
        f.write(normalized.astype("<f4").tobytes())


def write_rmkp(feature_sets: list[LocalFeatures], dim: int, path: str | Path) -> None:
    with open(path, "wb") as f:
        f.write(RMKP_MAGIC)
        f.write(struct.pack("<III", VERSION, len(feature_sets), dim))
        for fs in feature_sets:
            if fs.descriptors.shape[0] != len(fs.keypoints):
                raise ValueError(
                    f"{fs.image_id}: {len(fs.keypoints)} keypoints but "
                    f"{fs.descriptors.shape[0]} descriptor rows")
            if len(fs.keypoints) and fs.descriptors.shape[1] != dim:
                raise ValueError(
                    f"{fs.image_id}: descriptor dim {fs.descriptors.shape[1]} != {dim}")
            raw = fs.image_id.encode("utf-8")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
            f.write(struct.pack("<I", len(fs.keypoints)))
            for (x, y, score, degrees) in fs.keypoints:
                f.write(struct.pack("<fffH", x, y, score, degrees))
            f.write(fs.descriptors.astype("<f4").tobytes())
