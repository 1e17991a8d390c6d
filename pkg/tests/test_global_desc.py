"""Built-in global descriptor and the RMDF descriptor file format."""

from __future__ import annotations

import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotatematch.core import GlobalDescriptor, ImageRecord
from rotatematch.errors import (
    BadMagic,
    DimensionMismatch,
    NonFiniteValue,
    TruncatedFile,
    VersionUnsupported,
    ZeroAreaImage,
)
from rotatematch.global_desc import (
    BUILTIN_DIM,
    THUMB_SIDE,
    builtin_global_descriptor,
    load_external_descriptors,
    write_descriptors,
)


def oracle_cell_means(pixels: np.ndarray, side: int) -> np.ndarray:
    """Brute-force area average: integrate each source pixel's overlap with
    each thumbnail cell, one pixel at a time."""
    h, w = pixels.shape
    out = np.zeros((side, side))
    for cy in range(side):
        y_lo, y_hi = cy * h / side, (cy + 1) * h / side
        for cx in range(side):
            x_lo, x_hi = cx * w / side, (cx + 1) * w / side
            total = 0.0
            for py in range(int(np.floor(y_lo)), int(np.ceil(y_hi))):
                oy = min(y_hi, py + 1) - max(y_lo, py)
                for px in range(int(np.floor(x_lo)), int(np.ceil(x_hi))):
                    ox = min(x_hi, px + 1) - max(x_lo, px)
                    total += pixels[py, px] * oy * ox
            out[cy, cx] = total / ((y_hi - y_lo) * (x_hi - x_lo))
    return out


def oracle_descriptor(pixels: np.ndarray) -> np.ndarray:
    cells = oracle_cell_means(pixels, THUMB_SIDE).ravel()
    centered = cells - cells.mean()
    norm = np.linalg.norm(centered)
    if norm < 1e-12:
        return np.full(BUILTIN_DIM, 1.0 / THUMB_SIDE)
    return centered / norm


class TestBuiltinDescriptor:
    def test_constant_image_uniform_vector(self):
        image = ImageRecord.from_array("a", np.full((30, 30), 255, dtype=np.uint8))
        vec = builtin_global_descriptor(image).vector
        assert np.allclose(vec, 0.125)
        assert vec.shape == (BUILTIN_DIM,)

    def test_copy_has_identical_descriptor(self, rng):
        pixels = rng.integers(0, 256, size=(41, 53), dtype=np.uint8)
        va = builtin_global_descriptor(ImageRecord.from_array("a", pixels)).vector
        vb = builtin_global_descriptor(ImageRecord.from_array("b", pixels.copy())).vector
        assert np.array_equal(va, vb)

    def test_half_black_half_white(self):
        pixels = np.zeros((16, 16), dtype=np.uint8)
        pixels[:, 8:] = 255
        vec = builtin_global_descriptor(ImageRecord.from_array("a", pixels)).vector
        grid = vec.reshape(THUMB_SIDE, THUMB_SIDE)
        assert np.allclose(grid[:, :4], -0.125)
        assert np.allclose(grid[:, 4:], 0.125)
        assert np.isclose(np.linalg.norm(vec), 1.0)

    @pytest.mark.parametrize("shape", [(17, 23), (8, 8), (100, 31), (9, 64)])
    def test_matches_brute_force_oracle(self, rng, shape):
        pixels = rng.integers(0, 256, size=shape, dtype=np.uint8)
        vec = builtin_global_descriptor(ImageRecord.from_array("a", pixels)).vector
        assert np.allclose(vec, oracle_descriptor(pixels), atol=1e-9)

    def test_unit_norm(self, rng):
        pixels = rng.integers(0, 256, size=(33, 47), dtype=np.uint8)
        vec = builtin_global_descriptor(ImageRecord.from_array("a", pixels)).vector
        assert np.isclose(np.linalg.norm(vec), 1.0)

    def test_zero_area_rejected(self):
        image = ImageRecord.from_array("a", np.zeros((0, 5), dtype=np.uint8))
        with pytest.raises(ZeroAreaImage):
            builtin_global_descriptor(image)


def make_descriptors(rng, n, dim):
    out = []
    for i in range(n):
        v = rng.normal(size=dim)
        out.append(GlobalDescriptor(image_id=f"img{i}", vector=v / np.linalg.norm(v)))
    return out


class TestRmdfFormat:
    def test_round_trip(self, rng, tmp_path):
        descriptors = make_descriptors(rng, 2, 768)
        path = tmp_path / "d.rmdf"
        write_descriptors(descriptors, path)
        loaded = load_external_descriptors(path)
        assert [d.image_id for d in loaded] == ["img0", "img1"]
        assert all(d.dim == 768 for d in loaded)
        for a, b in zip(descriptors, loaded):
            assert np.allclose(a.vector, b.vector, atol=1e-6)

    def test_header_layout(self, rng, tmp_path):
        path = tmp_path / "d.rmdf"
        write_descriptors(make_descriptors(rng, 3, 16), path)
        raw = path.read_bytes()
        assert raw[:4] == b"RMDF"
        version, count, dim = struct.unpack("<III", raw[4:16])
        assert (version, count, dim) == (1, 3, 16)
        (id_len,) = struct.unpack("<H", raw[16:18])
        assert raw[18:18 + id_len] == b"img0"

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "d.rmdf"
        path.write_bytes(b"XXXX" + b"\0" * 12)
        with pytest.raises(BadMagic):
            load_external_descriptors(path)

    def test_unsupported_version(self, rng, tmp_path):
        path = tmp_path / "d.rmdf"
        write_descriptors(make_descriptors(rng, 1, 4), path)
        raw = bytearray(path.read_bytes())
        raw[4:8] = struct.pack("<I", 9)
        path.write_bytes(bytes(raw))
        with pytest.raises(VersionUnsupported):
            load_external_descriptors(path)

    def test_truncated_matrix(self, rng, tmp_path):
        path = tmp_path / "d.rmdf"
        write_descriptors(make_descriptors(rng, 2, 8), path)
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(TruncatedFile):
            load_external_descriptors(path)

    def test_trailing_bytes_rejected(self, rng, tmp_path):
        path = tmp_path / "d.rmdf"
        write_descriptors(make_descriptors(rng, 2, 8), path)
        path.write_bytes(path.read_bytes() + b"\0\0\0\0")
        with pytest.raises(DimensionMismatch):
            load_external_descriptors(path)

    def test_nan_row_names_image(self, rng, tmp_path):
        descriptors = make_descriptors(rng, 2, 8)
        bad = descriptors[1].vector.copy()
        bad[3] = np.nan
        object.__setattr__(descriptors[1], "vector", bad)
        path = tmp_path / "d.rmdf"
        write_descriptors(descriptors, path)
        with pytest.raises(NonFiniteValue, match="img1"):
            load_external_descriptors(path)

    def test_zero_norm_row_rejected(self, tmp_path):
        descriptors = [GlobalDescriptor(image_id="a", vector=np.zeros(8))]
        path = tmp_path / "d.rmdf"
        write_descriptors(descriptors, path)
        with pytest.raises(NonFiniteValue):
            load_external_descriptors(path)

    def test_mixed_dims_rejected(self, rng, tmp_path):
        descriptors = make_descriptors(rng, 1, 8) + make_descriptors(rng, 1, 9)
        with pytest.raises(DimensionMismatch):
            write_descriptors(descriptors, tmp_path / "d.rmdf")

    def test_empty_list_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            write_descriptors([], tmp_path / "d.rmdf")

    def test_loaded_vectors_unit_norm(self, rng, tmp_path):
        descriptors = [GlobalDescriptor(image_id="a", vector=rng.normal(size=32) * 7)]
        path = tmp_path / "d.rmdf"
        write_descriptors(descriptors, path)
        (loaded,) = load_external_descriptors(path)
        assert np.isclose(np.linalg.norm(loaded.vector), 1.0)

    @settings(max_examples=25, deadline=None)
    @given(n=st.integers(1, 5), dim=st.integers(1, 32), seed=st.integers(0, 2**16))
    def test_round_trip_property(self, tmp_path_factory, n, dim, seed):
        rng = np.random.default_rng(seed)
        descriptors = make_descriptors(rng, n, dim)
        path = tmp_path_factory.mktemp("rmdf") / "d.rmdf"
        write_descriptors(descriptors, path)
        loaded = load_external_descriptors(path)
        assert [d.image_id for d in loaded] == [d.image_id for d in descriptors]
        for a, b in zip(descriptors, loaded):
            assert np.allclose(a.vector, b.vector, atol=1e-6)
