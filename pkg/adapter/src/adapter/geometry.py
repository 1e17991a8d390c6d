"""Exact coordinate maps for 90-degree-multiple clockwise rotations.

Pixel centers sit at integer coordinates; rotating a WxH image by 90 or 270
degrees swaps the frame to HxW. These formulas are the shared geometry
contract with the consuming pipeline and are deliberately re-stated here
rather than imported.
"""

from __future__ import annotations

import numpy as np

ROTATIONS = (0, 90, 180, 270)


def rotate_pixels(pixels: np.ndarray, degrees: int) -> np.ndarray:
    """Clockwise rotation by pixel permutation."""
    if degrees == 0:
        return pixels
    if degrees == 90:
        return np.ascontiguousarray(np.rot90(pixels, k=-1))
    if degrees == 180:
        return np.ascontiguousarray(np.rot90(pixels, k=2))
    if degrees == 270:
        return np.ascontiguousarray(np.rot90(pixels, k=1))
    raise ValueError(f"unsupported rotation: {degrees}")


def unrotate_point(xr: float, yr: float, degrees: int,
                   original_w: int, original_h: int) -> tuple[float, float]:
    """Map a point in the rotated frame back into the original frame."""
    w, h = original_w, original_h
    if degrees == 0:
        return (xr, yr)
    if degrees == 90:
        return (yr, h - 1 - xr)
    if degrees == 180:
        return (w - 1 - xr, h - 1 - yr)
    if degrees == 270:
        return (w - 1 - yr, xr)
    raise ValueError(f"unsupported rotation: {degrees}")


def parse_rotations(raw: str) -> tuple[int, ...]:
    out = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        value = int(part)
        if value not in ROTATIONS:
            raise ValueError(f"unsupported rotation: {value}")
        out.append(value)
    if not out:
        raise ValueError("empty rotation list")
    return tuple(dict.fromkeys(out))
