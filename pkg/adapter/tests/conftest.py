"""Shared fixtures for the adapter test suite."""

from __future__ import annotations

import pytest

from adapter_test_utils import structured_image, write_dataset


@pytest.fixture()
def three_image_manifest(tmp_path):
    images = {f"img{k:02d}": structured_image(seed=100 + k) for k in range(3)}
    return write_dataset(tmp_path / "ds", images), images
