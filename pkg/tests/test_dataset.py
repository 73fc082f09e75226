import numpy as np
import pytest

from fieldloom import (DataError, PointSet, apply_normalizer, clean,
                       fit_normalizer, load_points, sample_background,
                       sample_pixels_from_mask, save_points)
from fieldloom.dataset import (SOURCE_BACKGROUND, SOURCE_MASK_PIXEL,
                               SOURCE_PRESENCE, load_normalizer,
                               save_normalizer)
from fieldloom.raster import BinaryRaster


def make_set(coords, labels=None):
    coords = np.asarray(coords, dtype=float)
    if labels is None:
        labels = np.ones(len(coords), dtype=np.int8)
    sources = np.where(np.asarray(labels) == 1, SOURCE_PRESENCE, SOURCE_BACKGROUND)
    return PointSet(coords, labels, sources)


class TestLoadPoints:
    def test_identity_ingestion(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("lon,lat,label\n1.0,2.0,1\n3.0,4.0,0\n5.5,6.5,1\n")
        ps = load_points(path)
        assert len(ps) == 3 and ps.dim == 2
        assert np.array_equal(ps.coords[0], [1.0, 2.0])
        assert list(ps.labels) == [1, 0, 1]
        assert ps.meta["bad_rows"] == 0

    def test_schema_selects_dimensionality(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("lon,lat,doy,label\n1,2,100,1\n")
        ps = load_points(path)
        assert ps.dim == 3
        assert ps.coords[0, 2] == 100.0

    def test_bad_row_flagged_not_dropped(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("lon,lat,label\n1,2,1\n3,abc,1\n")
        ps = load_points(path)
        assert len(ps) == 2
        assert ps.meta["bad_rows"] == 1
        assert not np.all(np.isfinite(ps.coords[1]))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_points(tmp_path / "nope.csv")

    def test_missing_column(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("x,y,label\n1,2,1\n")
        with pytest.raises(DataError, match="lon"):
            load_points(path)

    def test_empty_after_header(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("lon,lat,label\n")
        with pytest.raises(DataError):
            load_points(path)

    def test_custom_schema(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("x,y,z\n10,20,1\n")
        ps = load_points(path, schema={"lon": "x", "lat": "y", "label": "z"})
        assert ps.coords[0, 0] == 10.0

    def test_roundtrip_with_save(self, tmp_path):
        ps = make_set([[1.25, -3.5], [0.1, 0.2]], [1, 0])
        path = tmp_path / "out.csv"
        save_points(ps, path)
        back = load_points(path)
        assert np.array_equal(back.coords, ps.coords)
        assert np.array_equal(back.labels, ps.labels)


class TestClean:
    def test_dedup_keeps_first(self):
        ps = make_set([[10.0, 50.0], [10.0, 50.0], [11.0, 50.0]])
        out = clean(ps)
        assert len(out) == 2
        assert np.array_equal(out.coords[0], [10.0, 50.0])

    def test_invalid_longitude_removed(self):
        ps = make_set([[200.0, 10.0], [10.0, 10.0]])
        out = clean(ps)
        assert len(out) == 1 and out.coords[0, 0] == 10.0

    def test_invalid_latitude_and_doy(self):
        ps = make_set([[0.0, 95.0, 10.0], [0.0, 10.0, 400.0], [0.0, 10.0, 100.0]])
        out = clean(ps)
        assert len(out) == 1

    def test_nonfinite_removed(self):
        ps = make_set([[np.nan, 1.0], [2.0, 3.0]])
        assert len(clean(ps)) == 1

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        coords = rng.uniform(-170, 170, (50, 2))
        coords[:, 1] = rng.uniform(-80, 80, 50)
        coords[10] = coords[3]
        ps = make_set(coords)
        once = clean(ps)
        twice = clean(once)
        assert np.array_equal(once.coords, twice.coords)
        assert np.array_equal(once.labels, twice.labels)

    def test_already_clean_identical(self):
        ps = make_set([[1.0, 2.0], [3.0, 4.0]])
        out = clean(ps)
        assert np.array_equal(out.coords, ps.coords)

    def test_empty_after_cleaning_errors(self):
        ps = make_set([[np.inf, 0.0]])
        with pytest.raises(DataError):
            clean(ps)

    def test_pixel_sets_skip_geo_ranges(self):
        ps = PointSet([[500.5, 300.5]], [1], [SOURCE_MASK_PIXEL])
        assert len(clean(ps)) == 1


class TestSampleBackground:
    def test_containment(self):
        pres = make_set([[0.0, 40.0], [10.0, 50.0]])
        bg = sample_background(pres, 1000, seed=1)
        assert len(bg) == 1000
        assert np.all(bg.labels == 0)
        assert np.all(bg.sources == SOURCE_BACKGROUND)
        assert bg.coords[:, 0].min() >= 0.0 and bg.coords[:, 0].max() <= 10.0
        assert bg.coords[:, 1].min() >= 40.0 and bg.coords[:, 1].max() <= 50.0

    def test_deterministic(self):
        pres = make_set([[0.0, 0.0], [1.0, 1.0]])
        a = sample_background(pres, 50, seed=7)
        b = sample_background(pres, 50, seed=7)
        assert np.array_equal(a.coords, b.coords)

    def test_doy_spans_full_year(self):
        pres = make_set([[0.0, 0.0, 150.0], [1.0, 1.0, 160.0]])
        bg = sample_background(pres, 2000, seed=3)
        doy = bg.coords[:, 2]
        assert doy.min() < 30 and doy.max() > 330  # far outside presence range

    def test_uniformity_ks(self):
        # empirical CDF within 0.05 of uniform, per dimension
        pres = make_set([[0.0, 0.0], [1.0, 1.0]])
        bg = sample_background(pres, 10_000, seed=11)
        for d in range(2):
            x = np.sort(bg.coords[:, d])
            grid = (np.arange(1, x.size + 1)) / x.size
            ks = max(np.abs(grid - x).max(), np.abs(x - (grid - 1 / x.size)).max())
            assert ks < 0.05

    def test_degenerate_box_errors(self):
        pres = make_set([[5.0, 1.0], [5.0, 2.0]])
        with pytest.raises(DataError):
            sample_background(pres, 10, seed=0)
        bg = sample_background(pres, 10, seed=0, domain=[(0, 10), (0, 10)])
        assert len(bg) == 10


class TestSamplePixels:
    def test_exhaustive_sampling(self):
        mask = BinaryRaster([[1, 0], [0, 1]])
        ps = sample_pixels_from_mask(mask, 4, seed=0)
        assert len(ps) == 4
        assert sorted(ps.labels.tolist()) == [0, 0, 1, 1]
        assert np.all(ps.sources == SOURCE_MASK_PIXEL)
        # pixel-center coordinates
        assert set(map(tuple, ps.coords)) == {(0.5, 0.5), (1.5, 0.5),
                                              (0.5, 1.5), (1.5, 1.5)}

    def test_degenerate_mask(self):
        with pytest.raises(DataError):
            sample_pixels_from_mask(BinaryRaster(np.ones((3, 3))), 4, seed=0)
        with pytest.raises(DataError):
            sample_pixels_from_mask(BinaryRaster(np.zeros((3, 3))), 4, seed=0)

    def test_deterministic(self):
        mask = BinaryRaster((np.arange(36).reshape(6, 6) % 3 == 0).astype(int))
        a = sample_pixels_from_mask(mask, 10, seed=5)
        b = sample_pixels_from_mask(mask, 10, seed=5)
        assert np.array_equal(a.coords, b.coords)

    def test_without_replacement_when_possible(self):
        mask = BinaryRaster((np.arange(16).reshape(4, 4) % 2).astype(int))
        ps = sample_pixels_from_mask(mask, 16, seed=1)
        assert len(set(map(tuple, ps.coords))) == 16

    def test_label_matches_mask_value(self):
        vals = (np.arange(25).reshape(5, 5) % 4 == 0).astype(int)
        mask = BinaryRaster(vals)
        ps = sample_pixels_from_mask(mask, 25, seed=2)
        for (x, y), lab in zip(ps.coords, ps.labels):
            assert vals[int(y - 0.5), int(x - 0.5)] == lab


class TestNormalizer:
    def test_affine_endpoints_and_midpoint(self):
        ps = make_set([[2.0, 2.0], [4.0, 4.0], [6.0, 6.0]])
        spec = fit_normalizer(ps)
        out = apply_normalizer(spec, ps)
        assert np.allclose(out.coords[:, 0], [-1.0, 0.0, 1.0])

    def test_extrapolation_unclamped(self):
        spec = fit_normalizer(make_set([[2.0, 0.0], [6.0, 1.0]]))
        u = spec.apply([[8.0, 0.5]])
        assert u[0, 0] == pytest.approx(2.0)

    def test_degenerate_dimension(self):
        ps = make_set([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]])
        with pytest.warns(UserWarning):
            spec = fit_normalizer(ps)
        assert spec.degenerate[0] and not spec.degenerate[1]
        u = spec.apply(ps.coords)
        assert np.all(u[:, 0] == 0.0)

    def test_roundtrip_precision(self):
        rng = np.random.default_rng(4)
        ps = make_set(rng.uniform(-100, 100, (200, 3)))
        spec = fit_normalizer(ps)
        back = spec.invert(spec.apply(ps.coords))
        rel = np.abs(back - ps.coords) / np.maximum(1.0, np.abs(ps.coords))
        assert rel.max() < 1e-12

    def test_save_load(self, tmp_path):
        spec = fit_normalizer(make_set([[0.0, -10.0], [3.5, 10.0]]))
        path = tmp_path / "norm.txt"
        save_normalizer(spec, path)
        back = load_normalizer(path)
        assert back == spec
