"""Deterministic multi-scene synthetic datasets with ground-truth clusters.

Each scene is a seeded procedural texture; views are overlapping crops with a
random 90-degree orientation and a small brightness shift. Outliers are
single views of independent textures.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .core import (
    ALL_ORIENTATIONS,
    Clustering,
    DatasetManifest,
    ImageRecord,
    save_manifest,
)
from .local_features import rotate_image
from .scene_graph import write_clustering


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    scenes: int = 3
    views_per_scene: int = 8
    outliers: int = 4
    base_size: int = 256
    crop_fraction: float = 0.85
    brightness_jitter: int = 10

    def __post_init__(self):
        if self.scenes < 1 or self.views_per_scene < 2 or self.outliers < 0:
            raise ValueError("need scenes >= 1, views_per_scene >= 2, outliers >= 0")
        if not 0.5 < self.crop_fraction <= 1.0:
            raise ValueError("crop_fraction must be in (0.5, 1]")


_NOISE_AMPLITUDE = 2
_NOISE_MARGIN = 12
_SUPERSAMPLE = 4
_GRID = 4


def _value_noise(rng: np.random.Generator, size: int) -> np.ndarray:
    """Sum of bilinearly upsampled random grids at several scales, in [0, 1]."""
    out = np.zeros((size, size))
    weight = 1.0
    total = 0.0
    res = 4
    while res <= 32:
        grid = rng.random((res + 1, res + 1))
        coords = np.linspace(0, res, size)
        i0 = np.minimum(coords.astype(int), res - 1)
        f = coords - i0
        rows = (grid[i0, :] * (1 - f)[:, None] + grid[i0 + 1, :] * f[:, None])
        layer = (rows[:, i0] * (1 - f)[None, :] + rows[:, i0 + 1] * f[None, :])
        out += weight * layer
        total += weight
        weight *= 0.5
        res *= 2
    out /= total
    lo, hi = out.min(), out.max()
    return (out - lo) / (hi - lo) if hi > lo else out


def _base_texture(rng: np.random.Generator, size: int) -> np.ndarray:
    """Value-noise octaves plus 6-12 high-contrast rectangles, each decorated
    with the same scene-specific constellation of small discs at its corners,
    as an 8-bit grayscale image.

    The corner constellations make every rectangle corner a strong, richly
    textured interest point that repeats exactly within a scene (so views of
    the same scene match) but is unique to the scene (views of different
    scenes see near-identical nearest and second-nearest descriptor distances
    and fail the ratio test). Three details keep that exactness, and with it
    the end-to-end clustering quality, intact:

    - the value noise is suppressed within a margin of every rectangle so the
      descriptor patch of any corner or disc detection is noise-free and
      repeated structure stays byte-identical between views;
    - brightness offsets are budgeted (base 110-125, +55 fill, +45 discs,
      +/-2 noise) so no pixel clips even after view-level brightness jitter,
      which would otherwise also break exactness;
    - rectangles sit on a jittered grid and constellation discs in distinct
      sub-cells, so shapes never overlap each other.

    In the flat areas away from the shapes the noise amplitude stays far
    enough below the shape contrast that the corner detector's relative
    response floor excludes it.
    """
    ss = _SUPERSAMPLE
    full = size * ss
    base = float(rng.integers(110, 126))
    noise = np.round(_NOISE_AMPLITUDE * (2.0 * _value_noise(rng, size) - 1.0))
    noise_allowed = np.ones((size, size), dtype=bool)
    tex = np.full((full, full), base)

    def disc(cx: int, cy: int, radius: int, value: float) -> None:
        x0, x1 = max(0, cx - radius - 1), min(full, cx + radius + 2)
        y0, y1 = max(0, cy - radius - 1), min(full, cy + radius + 2)
        if x0 >= x1 or y0 >= y1:
            return
        yy, xx = np.mgrid[y0:y1, x0:x1]
        mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= radius * radius
        tex[y0:y1, x0:x1][mask] += value

    # one constellation per scene: disc offsets (supersample units) drawn from
    # distinct cells of a 3x3 layout so discs never overlap each other
    constellation = []
    for k in rng.permutation(9)[:4]:
        grid_y, grid_x = divmod(int(k), 3)
        dx = (grid_x - 1) * 18 + int(rng.integers(-4, 5))
        dy = (grid_y - 1) * 18 + int(rng.integers(-4, 5))
        constellation.append((dx, dy, int(rng.integers(5, 8)), 45.0))

    cells = [(r, c) for r in range(_GRID) for c in range(_GRID)]
    rng.shuffle(cells)
    n_shapes = int(rng.integers(6, 13))
    cell = size // _GRID
    for (row, col) in cells[:n_shapes]:
        cy = row * cell + cell // 2 + int(rng.integers(-6, 7))
        cx = col * cell + cell // 2 + int(rng.integers(-6, 7))
        half_w = int(rng.integers(12, 22))
        half_h = int(rng.integers(8, half_w + 1))
        x0, x1 = (cx - half_w) * ss, (cx + half_w) * ss
        y0, y1 = (cy - half_h) * ss, (cy + half_h) * ss
        tex[max(0, y0):y1, max(0, x0):x1] += 55.0
        for (corner_x, corner_y) in ((x0, y0), (x1, y0), (x0, y1), (x1, y1)):
            for (dx, dy, radius, value) in constellation:
                disc(corner_x + dx, corner_y + dy, radius, value)
        margin = _NOISE_MARGIN
        noise_allowed[max(0, cy - half_h - margin):cy + half_h + margin,
                      max(0, cx - half_w - margin):cx + half_w + margin] = False

    tex = tex.reshape(size, ss, size, ss).mean(axis=(1, 3))
    tex = tex + noise * noise_allowed
    return np.clip(np.round(tex), 0, 255).astype(np.uint8)


def _make_view(rng: np.random.Generator, texture: np.ndarray,
               config: SynthConfig, image_id: str) -> ImageRecord:
    size = texture.shape[0]
    side = int(round(config.crop_fraction * size))
    max_off = size - side
    x0 = int(rng.integers(0, max_off + 1))
    y0 = int(rng.integers(0, max_off + 1))
    orientation = ALL_ORIENTATIONS[int(rng.integers(0, 4))]
    shift = int(rng.integers(-config.brightness_jitter, config.brightness_jitter + 1))
    crop = texture[y0:y0 + side, x0:x0 + side].astype(np.int64) + shift
    crop = np.clip(crop, 0, 255).astype(np.uint8)
    record = ImageRecord.from_array(image_id, crop)
    view = rotate_image(record, orientation)
    return ImageRecord.from_array(image_id, view.pixels)


def generate_dataset(config: SynthConfig, out_dir: str | Path,
                     dataset_id: str | None = None
                     ) -> tuple[DatasetManifest, Clustering]:
    """Generate images, manifest.json, and gt.json under out_dir."""
    out_dir = Path(out_dir)
    images_dir = out_dir / "images"
    images_dir.mkdir(parents=True, exist_ok=True)
    if dataset_id is None:
        dataset_id = f"synth-{config.seed}"

    rng = np.random.default_rng(config.seed)
    records: list[ImageRecord] = []
    clusters: list[set[str]] = []
    outliers: set[str] = set()

    for scene in range(config.scenes):
        texture = _base_texture(rng, config.base_size)
        member_ids = set()
        for view in range(config.views_per_scene):
            image_id = f"scene{scene:02d}_view{view:02d}"
            records.append(_make_view(rng, texture, config, image_id))
            member_ids.add(image_id)
        clusters.append(member_ids)

    for outlier in range(config.outliers):
        texture = _base_texture(rng, config.base_size)
        image_id = f"outlier{outlier:02d}"
        records.append(_make_view(rng, texture, config, image_id))
        outliers.add(image_id)

    for record in records:
        path = images_dir / f"{record.id}.png"
        Image.fromarray(record.load(), mode="L").save(path)
        record.path = str(path)

    manifest = DatasetManifest(dataset_id=dataset_id, images=records)
    ground_truth = Clustering(clusters=clusters, outliers=outliers)
    save_manifest(manifest, out_dir / "manifest.json")
    write_clustering(ground_truth, out_dir / "gt.json")
    return manifest, ground_truth
