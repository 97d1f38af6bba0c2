"""PGM/PNG readers and writers."""

import numpy as np
import pytest

from dmstune import read_image, read_pgm, write_image, write_pgm
from dmstune.imageio import read_png, write_png


@pytest.fixture
def image():
    rng = np.random.default_rng(11)
    return rng.random((13, 17))


class TestPgm:
    def test_8bit_round_trip_within_quantization(self, tmp_path, image):
        path = tmp_path / "a.pgm"
        write_pgm(path, image, bitdepth=8)
        back = read_pgm(path)
        assert back.shape == image.shape
        assert np.max(np.abs(back - image)) <= 0.5 / 255

    def test_16bit_round_trip_within_quantization(self, tmp_path, image):
        path = tmp_path / "a.pgm"
        write_pgm(path, image, bitdepth=16)
        back = read_pgm(path)
        assert np.max(np.abs(back - image)) <= 0.5 / 65535

    def test_quantized_values_round_trip_exactly(self, tmp_path):
        levels = np.arange(256, dtype=float).reshape(16, 16) / 255.0
        path = tmp_path / "levels.pgm"
        write_pgm(path, levels, bitdepth=8)
        assert np.array_equal(read_pgm(path), levels)

    def test_write_clamps_out_of_range(self, tmp_path):
        img = np.array([[-0.5, 0.5], [1.5, 1.0]] * 8)
        path = tmp_path / "c.pgm"
        write_pgm(path, img)
        back = read_pgm(path)
        assert back.min() == 0.0 and back.max() == 1.0

    def test_header_comments_skipped(self, tmp_path):
        path = tmp_path / "c.pgm"
        raster = bytes(range(6))
        path.write_bytes(b"P5\n# a comment\n3 2\n# another\n255\n" + raster)
        back = read_pgm(path)
        assert back.shape == (2, 3)
        assert back[1, 2] == pytest.approx(5 / 255)

    def test_non_p5_rejected(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P2\n2 2\n255\n0 0 0 0\n")
        with pytest.raises(ValueError):
            read_pgm(path)

    def test_truncated_header_rejected(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P5\n2")
        with pytest.raises(ValueError):
            read_pgm(path)

    def test_bad_bitdepth_rejected(self, tmp_path, image):
        with pytest.raises(ValueError):
            write_pgm(tmp_path / "a.pgm", image, bitdepth=12)

    def test_16bit_raster_is_big_endian(self, tmp_path):
        path = tmp_path / "e.pgm"
        write_pgm(path, np.full((2, 2), 1.0), bitdepth=16)
        data = path.read_bytes()
        assert data.endswith(b"\xff\xff" * 4)


class TestPng:
    def test_round_trip_within_quantization(self, tmp_path, image):
        path = tmp_path / "a.png"
        write_png(path, image)
        back = read_png(path)
        assert np.max(np.abs(back - image)) <= 0.5 / 255

    def test_write_clamps(self, tmp_path):
        path = tmp_path / "c.png"
        write_png(path, np.array([[-1.0, 2.0]] * 8))
        back = read_png(path)
        assert back.min() == 0.0 and back.max() == 1.0


class TestDispatch:
    def test_by_extension(self, tmp_path, image):
        for name in ("x.pgm", "x.png"):
            path = tmp_path / name
            write_image(path, image)
            back = read_image(path)
            assert np.max(np.abs(back - image)) <= 0.5 / 255

    def test_unknown_extension(self, tmp_path, image):
        with pytest.raises(ValueError):
            write_image(tmp_path / "x.tif", image)
        with pytest.raises(ValueError):
            read_image(tmp_path / "x.tif")
