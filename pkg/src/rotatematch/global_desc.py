"""Global image descriptors: built-in thumbnail backend and RMDF file ingestion."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import GlobalDescriptor, ImageRecord
from .errors import (
    BadMagic,
    DimensionMismatch,
    NonFiniteValue,
    TruncatedFile,
    VersionUnsupported,
    ZeroAreaImage,
)

THUMB_SIDE = 8
BUILTIN_DIM = THUMB_SIDE * THUMB_SIDE

_MAGIC = b"RMDF"
_VERSION = 1


def _area_average_grid(pixels: np.ndarray, side: int) -> np.ndarray:
    """Downsample to side x side by exact area averaging over each cell's
    source rectangle (pixels are unit squares)."""
    h, w = pixels.shape
    # integral image; I(v, u) is bilinear between grid points because the
    # image is piecewise constant, so interpolation at fractional coords is exact
    integral = np.zeros((h + 1, w + 1), dtype=np.float64)
    integral[1:, 1:] = np.cumsum(np.cumsum(pixels.astype(np.float64), axis=0), axis=1)

    ys = np.linspace(0.0, h, side + 1)
    xs = np.linspace(0.0, w, side + 1)

    def eval_integral(v: np.ndarray, u: np.ndarray) -> np.ndarray:
        vi = np.clip(np.floor(v).astype(int), 0, h - 1)
        ui = np.clip(np.floor(u).astype(int), 0, w - 1)
        fv = v - vi
        fu = u - ui
        c00 = integral[vi, ui]
        c01 = integral[vi, ui + 1]
        c10 = integral[vi + 1, ui]
        c11 = integral[vi + 1, ui + 1]
        return (c00 * (1 - fv) * (1 - fu) + c01 * (1 - fv) * fu
                + c10 * fv * (1 - fu) + c11 * fv * fu)

    vv, uu = np.meshgrid(ys, xs, indexing="ij")
    corner = eval_integral(vv, uu)
    sums = corner[1:, 1:] - corner[:-1, 1:] - corner[1:, :-1] + corner[:-1, :-1]
    areas = np.outer(np.diff(ys), np.diff(xs))
    return sums / areas


def builtin_global_descriptor(image: ImageRecord) -> GlobalDescriptor:
    """Deterministic stand-in for a neural global descriptor: an 8x8
    area-averaged thumbnail, mean-centered and L2-normalized (dim 64)."""
    pixels = image.load()
    h, w = pixels.shape
    if h == 0 or w == 0:
        raise ZeroAreaImage(f"image {image.id} has zero area ({w}x{h})")
    cells = _area_average_grid(pixels, THUMB_SIDE).ravel()
    centered = cells - cells.mean()
    norm = np.linalg.norm(centered)
    if norm < 1e-12:
        # constant image: fall back to the uniform unit vector
        vec = np.full(BUILTIN_DIM, 1.0 / THUMB_SIDE)
    else:
        vec = centered / norm
    return GlobalDescriptor(image_id=image.id, vector=vec)


def write_descriptors(descriptors: list[GlobalDescriptor], path: str | Path) -> None:
    """Write descriptors in RMDF format (little-endian)."""
    if not descriptors:
        raise ValueError("descriptor list is empty")
    dim = descriptors[0].dim
    for d in descriptors:
        if d.dim != dim:
            raise DimensionMismatch(f"descriptor for {d.image_id} has dim {d.dim}, expected {dim}")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<III", _VERSION, len(descriptors), dim))
        for d in descriptors:
            raw = d.image_id.encode("utf-8")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
        matrix = np.stack([d.vector for d in descriptors]).astype("<f4")
        f.write(matrix.tobytes())


class _Reader:
    """Cursor over a byte buffer that raises TruncatedFile on short reads."""

    def __init__(self, data: bytes, path: str):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFile(f"{self.path}: expected {n} more bytes at offset {self.pos}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    @property
    def remaining(self) -> int:
        return len(self.data) - self.pos


def load_external_descriptors(path: str | Path) -> list[GlobalDescriptor]:
    """Read an RMDF file, validating structure and re-normalizing each vector."""
    path = str(path)
    with open(path, "rb") as f:
        r = _Reader(f.read(), path)
    if r.take(4) != _MAGIC:
        raise BadMagic(f"{path}: not an RMDF file")
    version, count, dim = r.unpack("<III")
    if version != _VERSION:
        raise VersionUnsupported(f"{path}: RMDF version {version}")
    ids = []
    for _ in range(count):
        (id_len,) = r.unpack("<H")
        ids.append(r.take(id_len).decode("utf-8"))
    matrix_bytes = count * dim * 4
    if r.remaining < matrix_bytes:
        raise TruncatedFile(f"{path}: matrix needs {matrix_bytes} bytes, {r.remaining} left")
    if r.remaining > matrix_bytes:
        raise DimensionMismatch(
            f"{path}: {r.remaining} matrix bytes disagree with header ({count} x {dim})")
    matrix = np.frombuffer(r.take(matrix_bytes), dtype="<f4").reshape(count, dim)
    matrix = matrix.astype(np.float64)
    out = []
    for image_id, row in zip(ids, matrix):
        if not np.all(np.isfinite(row)):
            raise NonFiniteValue(f"{path}: non-finite descriptor for image {image_id}")
        norm = np.linalg.norm(row)
        if norm < 1e-12:
            raise NonFiniteValue(f"{path}: zero-norm descriptor for image {image_id}")
        out.append(GlobalDescriptor(image_id=image_id, vector=row / norm))
    return out
