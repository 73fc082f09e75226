import numpy as np
import pytest

from fieldloom import BinaryRaster, DataError, read_raster, write_raster
from fieldloom.raster import read_graymap


class TestBinaryRaster:
    def test_dimensions(self):
        r = BinaryRaster([[1, 0, 1], [0, 1, 0]])
        assert r.width == 3 and r.height == 2

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            BinaryRaster([[0, 2]])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            BinaryRaster(np.zeros((0, 3)))


class TestPgmIo:
    def test_write_read_roundtrip(self, tmp_path):
        mask = BinaryRaster([[1, 0], [0, 1]])
        path = tmp_path / "m.pgm"
        write_raster(mask, path)
        back = read_raster(path)
        assert np.array_equal(back.values, mask.values)

    def test_roundtrip_random_masks(self, tmp_path):
        rng = np.random.default_rng(0)
        for trial in range(10):
            vals = (rng.random((rng.integers(1, 20), rng.integers(1, 20))) < 0.5)
            mask = BinaryRaster(vals.astype(np.uint8))
            path = tmp_path / f"m{trial}.pgm"
            write_raster(mask, path)
            assert np.array_equal(read_raster(path).values, mask.values)

    def test_p2_and_p5_equivalent(self, tmp_path):
        vals = np.array([[200, 10, 130], [0, 255, 90]], dtype=np.uint8)
        p2 = tmp_path / "a.pgm"
        p2.write_text("P2\n3 2\n255\n200 10 130\n0 255 90\n")
        p5 = tmp_path / "b.pgm"
        with open(p5, "wb") as fh:
            fh.write(b"P5\n3 2\n255\n" + vals.tobytes())
        a, b = read_raster(p2), read_raster(p5)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.values, (vals > 127).astype(np.uint8))

    def test_comments_in_header(self, tmp_path):
        path = tmp_path / "c.pgm"
        path.write_text("P2\n# a comment\n2 1\n# another\n255\n255 0\n")
        r = read_raster(path)
        assert list(r.values[0]) == [1, 0]

    def test_binarization_threshold(self, tmp_path):
        path = tmp_path / "t.pgm"
        path.write_text("P2\n3 1\n255\n127 128 255\n")
        r = read_raster(path)
        assert list(r.values[0]) == [0, 1, 1]

    def test_smaller_maxval(self, tmp_path):
        path = tmp_path / "mv.pgm"
        path.write_text("P2\n2 1\n200\n130 100\n")
        r = read_raster(path)
        assert list(r.values[0]) == [1, 0]

    def test_probability_scaling_half_up(self, tmp_path):
        field = np.array([[0.5, 0.0], [1.0, 0.2509803]])
        path = tmp_path / "p.pgm"
        write_raster(field, path)
        gray = read_graymap(path)
        assert gray[0, 0] == 128  # 0.5 -> 127.5 rounds half-up to 128
        assert gray[0, 1] == 0 and gray[1, 0] == 255
        assert gray[1, 1] == 64

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_text("P3\n2 2\n255\n0 0 0 0\n")
        with pytest.raises(DataError):
            read_raster(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "short.pgm"
        with open(path, "wb") as fh:
            fh.write(b"P5\n4 4\n255\n\x00\x01")
        with pytest.raises(DataError):
            read_raster(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            read_raster(tmp_path / "none.pgm")

    def test_float_range_validated(self, tmp_path):
        with pytest.raises(ValueError):
            write_raster(np.array([[1.5]]), tmp_path / "x.pgm")
