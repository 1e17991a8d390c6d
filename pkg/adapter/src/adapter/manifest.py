"""Dataset manifest reading and grayscale image loading."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import json

import numpy as np
from PIL import Image


@dataclass
class ManifestImage:
    id: str
    path: str

    def load(self) -> np.ndarray:
        """HxW uint8 grayscale pixels (integer Rec.601 luma for color input)."""
        with Image.open(self.path) as im:
            arr = np.asarray(im)
        if arr.ndim == 2:
            return arr.astype(np.uint8)
        rgb = arr[..., :3].astype(np.int64)
        luma = (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000
        return luma.astype(np.uint8)


@dataclass
class Manifest:
    dataset_id: str
    images: list[ManifestImage]


def read_manifest(path: str | Path) -> Manifest:
    """Read a manifest JSON file; image paths resolve relative to the file."""
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    base = path.parent
    images = [ManifestImage(id=entry["id"], path=str(base / entry["path"]))
              for entry in doc["images"]]
    seen = set()
    for image in images:
        if image.id in seen:
            raise ValueError(f"duplicate image id in manifest: {image.id}")
        seen.add(image.id)
    return Manifest(dataset_id=doc["dataset_id"], images=images)
