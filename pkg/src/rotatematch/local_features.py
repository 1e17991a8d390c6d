"""Rotation-augmented local feature extraction.

The detector runs on each configured 90-degree rotation of the image; all
keypoint coordinates are mapped back to the original frame and tagged with
the orientation they were detected under.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import ndimage

from .core import FeatureSet, ImageRecord, Keypoint, Orientation, PipelineConfig
from .errors import (
    BadMagic,
    CoordOutOfBounds,
    NonFiniteValue,
    OutOfBounds,
    TruncatedFile,
    VersionUnsupported,
)

HARRIS_K = 0.06
RESPONSE_FLOOR = 1e-6
BORDER_MARGIN = 8
PATCH_SIDE = 8
PATCH_STRIDE = 2
PATCH_DIM = PATCH_SIDE * PATCH_SIDE

_MAGIC = b"RMKP"
_VERSION = 1


@dataclass
class RotatedView:
    """An image after an exact 90-degree-multiple clockwise rotation."""

    orientation: Orientation
    width: int
    height: int
    pixels: np.ndarray


def rotate_image(image: ImageRecord, orientation: Orientation) -> RotatedView:
    """Rotate clockwise by pixel permutation (exact, no interpolation)."""
    pixels = image.load()
    if orientation is Orientation.R0:
        rotated = pixels
    elif orientation is Orientation.R90:
        rotated = np.rot90(pixels, k=-1)
    elif orientation is Orientation.R180:
        rotated = np.rot90(pixels, k=2)
    else:
        rotated = np.rot90(pixels, k=1)
    rotated = np.ascontiguousarray(rotated)
    h, w = rotated.shape
    return RotatedView(orientation=orientation, width=w, height=h, pixels=rotated)


def rotate_point(x: float, y: float, orientation: Orientation,
                 original_w: int, original_h: int) -> tuple[float, float]:
    """Map an original-frame point into the rotated frame (pixel centers at
    integer coordinates)."""
    w, h = original_w, original_h
    if orientation is Orientation.R0:
        return (x, y)
    if orientation is Orientation.R90:
        return (h - 1 - y, x)
    if orientation is Orientation.R180:
        return (w - 1 - x, h - 1 - y)
    return (y, w - 1 - x)


def unrotate_point(xr: float, yr: float, orientation: Orientation,
                   original_w: int, original_h: int) -> tuple[float, float]:
    """Inverse of the rotation coordinate map: rotated frame -> original frame."""
    w, h = original_w, original_h
    if orientation is Orientation.R0:
        x, y = xr, yr
    elif orientation is Orientation.R90:
        x, y = yr, h - 1 - xr
    elif orientation is Orientation.R180:
        x, y = w - 1 - xr, h - 1 - yr
    else:
        x, y = w - 1 - yr, xr
    if not (0 <= x <= w - 1 and 0 <= y <= h - 1):
        raise OutOfBounds(
            f"unrotated point ({x}, {y}) outside {w}x{h} frame (orientation {orientation.name})")
    return (x, y)


def _harris_response(pixels: np.ndarray) -> np.ndarray:
    img = pixels.astype(np.float64) / 255.0
    kx = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
    ky = kx.T
    ix = ndimage.correlate(img, kx, mode="nearest")
    iy = ndimage.correlate(img, ky, mode="nearest")
    box = np.ones((3, 3))
    sxx = ndimage.correlate(ix * ix, box, mode="nearest")
    syy = ndimage.correlate(iy * iy, box, mode="nearest")
    sxy = ndimage.correlate(ix * iy, box, mode="nearest")
    det = sxx * syy - sxy * sxy
    trace = sxx + syy
    return det - HARRIS_K * trace * trace


def _bilinear_patch(img: np.ndarray, x: float, y: float) -> np.ndarray:
    offsets = (np.arange(PATCH_SIDE) - (PATCH_SIDE - 1) / 2.0) * PATCH_STRIDE
    xs = x + offsets
    ys = y + offsets
    gy, gx = np.meshgrid(ys, xs, indexing="ij")
    x0 = np.floor(gx).astype(int)
    y0 = np.floor(gy).astype(int)
    fx = gx - x0
    fy = gy - y0
    h, w = img.shape
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    v = (img[y0, x0] * (1 - fy) * (1 - fx) + img[y0, x1] * (1 - fy) * fx
         + img[y1, x0] * fy * (1 - fx) + img[y1, x1] * fy * fx)
    return v.ravel()


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    out = np.where(norms > 1e-12, matrix / np.where(norms == 0, 1, norms),
                   1.0 / np.sqrt(matrix.shape[1]))
    return out


def builtin_detect(view: RotatedView,
                   max_keypoints: int) -> tuple[list[tuple[float, float, float]], np.ndarray]:
    """Harris corners (k=0.06, 3x3 box structure tensor) with 3x3 non-maximum
    suppression, a relative response floor, and 8x8 stride-2 patch descriptors.

    Returns rotated-frame (x, y, score) triples plus the row-aligned
    descriptor matrix (dim 64). Images smaller than 16x16 yield no output.
    """
    if view.width < 16 or view.height < 16:
        return [], np.zeros((0, PATCH_DIM))
    response = _harris_response(view.pixels)
    rmax = response.max()
    if rmax <= 0:
        return [], np.zeros((0, PATCH_DIM))
    local_max = ndimage.maximum_filter(response, size=3, mode="constant", cval=-np.inf)
    mask = (response >= local_max) & (response > RESPONSE_FLOOR * rmax)
    ys, xs = np.nonzero(mask)
    scores = response[ys, xs]
    # top-k by score, ties by scan order (y, x)
    order = np.lexsort((xs, ys, -scores))[:max_keypoints]
    img = view.pixels.astype(np.float64) / 255.0
    points = []
    rows = []
    for idx in order:
        x, y = int(xs[idx]), int(ys[idx])
        if (x < BORDER_MARGIN or x > view.width - 1 - BORDER_MARGIN
                or y < BORDER_MARGIN or y > view.height - 1 - BORDER_MARGIN):
            continue
        patch = _bilinear_patch(img, float(x), float(y))
        patch = patch - patch.mean()
        points.append((float(x), float(y), float(scores[idx])))
        rows.append(patch)
    if not rows:
        return [], np.zeros((0, PATCH_DIM))
    descriptors = _normalize_rows(np.stack(rows))
    return points, descriptors


def extract_features(image: ImageRecord, config: PipelineConfig) -> FeatureSet:
    """Detect under every configured orientation, map coordinates back to the
    original frame, and concatenate without cross-orientation deduplication."""
    pixels = image.load()
    h, w = pixels.shape
    keypoints: list[Keypoint] = []
    blocks: list[np.ndarray] = []
    for orientation in config.rotations:
        view = rotate_image(image, orientation)
        points, descriptors = builtin_detect(view, config.max_keypoints_per_orientation)
        for (xr, yr, score) in points:
            x, y = unrotate_point(xr, yr, orientation, w, h)
            keypoints.append(Keypoint(x=x, y=y, score=score, source_orientation=orientation))
        if len(points):
            blocks.append(descriptors)
    if blocks:
        matrix = np.concatenate(blocks, axis=0)
    else:
        matrix = np.zeros((0, PATCH_DIM))
    return FeatureSet(image_id=image.id, keypoints=keypoints, descriptors=matrix)


def write_features(feature_sets: Sequence[FeatureSet], path: str | Path,
                   descriptor_dim: int | None = None) -> None:
    """Write feature sets in RMKP format (little-endian)."""
    if descriptor_dim is None:
        dims = {fs.descriptor_dim for fs in feature_sets}
        if len(dims) > 1:
            raise ValueError(f"mixed descriptor dims: {sorted(dims)}")
        descriptor_dim = dims.pop() if dims else PATCH_DIM
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<III", _VERSION, len(feature_sets), descriptor_dim))
        for fs in feature_sets:
            raw = fs.image_id.encode("utf-8")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
            f.write(struct.pack("<I", len(fs.keypoints)))
            for kp in fs.keypoints:
                f.write(struct.pack("<fffH", kp.x, kp.y, kp.score,
                                    kp.source_orientation.degrees))
            f.write(fs.descriptors.astype("<f4").tobytes())


def load_external_features(path: str | Path,
                           image_sizes: dict[str, tuple[int, int]] | None = None
                           ) -> list[FeatureSet]:
    """Read an RMKP file. Coordinates must already be in the original frame;
    when `image_sizes` maps id -> (width, height), bounds are enforced."""
    from .global_desc import _Reader  # shared binary cursor

    path = str(path)
    with open(path, "rb") as f:
        r = _Reader(f.read(), path)
    if r.take(4) != _MAGIC:
        raise BadMagic(f"{path}: not an RMKP file")
    version, image_count, dim = r.unpack("<III")
    if version != _VERSION:
        raise VersionUnsupported(f"{path}: RMKP version {version}")
    out = []
    for _ in range(image_count):
        (id_len,) = r.unpack("<H")
        image_id = r.take(id_len).decode("utf-8")
        (kp_count,) = r.unpack("<I")
        keypoints = []
        for k in range(kp_count):
            x, y, score, degrees = r.unpack("<fffH")
            if not (np.isfinite(x) and np.isfinite(y) and np.isfinite(score)):
                raise NonFiniteValue(f"{path}: non-finite keypoint {k} of image {image_id}")
            if image_sizes is not None and image_id in image_sizes:
                w, h = image_sizes[image_id]
                if not (0 <= x < w and 0 <= y < h):
                    raise CoordOutOfBounds(
                        f"{path}: keypoint {k} of image {image_id} at ({x}, {y}) "
                        f"outside {w}x{h}")
            keypoints.append(Keypoint(x=x, y=y, score=score,
                                      source_orientation=Orientation(degrees)))
        matrix_bytes = kp_count * dim * 4
        if r.remaining < matrix_bytes:
            raise TruncatedFile(
                f"{path}: image {image_id} matrix needs {matrix_bytes} bytes, "
                f"{r.remaining} left")
        matrix = np.frombuffer(r.take(matrix_bytes), dtype="<f4").reshape(kp_count, dim)
        matrix = matrix.astype(np.float64)
        if matrix.size and not np.all(np.isfinite(matrix)):
            raise NonFiniteValue(f"{path}: non-finite descriptor in image {image_id}")
        if matrix.size:
            matrix = _normalize_rows(matrix)
        out.append(FeatureSet(image_id=image_id, keypoints=keypoints, descriptors=matrix))
    return out
