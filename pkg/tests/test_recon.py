import numpy as np
import pytest

from fieldloom import (ArchSpec, DataError, GridSpec, NormSpec,
                       ProbabilityField, bench, evaluate_grid, forward,
                       init_params, make_grid, reconstruct_mask, sigmoid)
from fieldloom.recon import load_field, probability_raster, save_field


def identity_norm(dim):
    return NormSpec(tuple([-1.0] * dim), tuple([1.0] * dim), tuple([False] * dim))


class TestGridSpec:
    def test_cell_centers_1d_formula(self):
        spec = GridSpec(bounds=[(0.0, 1.0), (0.0, 1.0)], resolution=[2, 2])
        assert np.allclose(spec.centers(0), [0.25, 0.75])

    def test_product_count(self):
        spec = GridSpec(bounds=[(0, 1), (0, 1)], resolution=[3, 3])
        assert make_grid(spec).shape == (9, 2)

    def test_fixed_slice_injected(self):
        spec = GridSpec(bounds=[(0, 10), (0, 5)], resolution=[4, 4],
                        fixed=((2, 150.0),))
        grid = make_grid(spec)
        assert grid.shape == (16, 3)
        assert np.all(grid[:, 2] == 150.0)

    def test_fixed_slice_middle_dimension(self):
        spec = GridSpec(bounds=[(0, 10), (0, 5)], resolution=[3, 3],
                        fixed=((1, -7.0),))
        grid = make_grid(spec)
        assert np.all(grid[:, 1] == -7.0)
        assert np.allclose(sorted(set(grid[:, 0])), [5 / 3, 5.0, 25 / 3])

    def test_cap_enforced(self):
        spec = GridSpec(bounds=[(0, 1), (0, 1)], resolution=[5000, 5000])
        with pytest.raises(DataError):
            make_grid(spec, cap=1_000_000)

    def test_locate_and_boundaries(self):
        spec = GridSpec(bounds=[(0.0, 10.0), (0.0, 10.0)], resolution=[10, 10])
        idx = spec.locate([[0.5, 0.5], [9.99, 9.99], [10.0, 10.0], [11.0, 5.0]])
        assert idx[0] == 0
        assert idx[1] == idx[2] == 99  # upper bound joins the last cell
        assert idx[3] == -1

    def test_validation(self):
        with pytest.raises(ValueError):
            GridSpec(bounds=[(1.0, 1.0)], resolution=[4])
        with pytest.raises(ValueError):
            GridSpec(bounds=[(0.0, 1.0)], resolution=[1])
        with pytest.raises(ValueError):
            GridSpec(bounds=[(0, 1)], resolution=[4], fixed=((5, 2.0),))


class TestEvaluateGrid:
    def test_zero_model_uniform_half(self):
        spec = ArchSpec("relu", 2, 1, 4)
        model = init_params(spec, 0).with_params(
            np.zeros(len(init_params(spec, 0).params)))
        grid = GridSpec(bounds=[(0, 1), (0, 1)], resolution=[5, 5])
        field = evaluate_grid(model, identity_norm(2), grid)
        assert np.all(field.values == 0.5)

    def test_pointwise_definition(self):
        # field value at 100 random cells equals sigmoid(forward(normalize(x)))
        model = init_params(ArchSpec("sine", 2, 2, 8), 3)
        norm = NormSpec((0.0, 0.0), (10.0, 10.0), (False, False))
        grid = GridSpec(bounds=[(0, 10), (0, 10)], resolution=[25, 25])
        field = evaluate_grid(model, norm, grid)
        coords = make_grid(grid)
        rng = np.random.default_rng(0)
        for i in rng.choice(len(coords), 100, replace=False):
            direct = sigmoid(forward(model, norm.apply(coords[i:i + 1])[0]))
            assert field.values[i] == pytest.approx(float(direct), rel=1e-12)

    def test_chunking_agreement(self):
        model = init_params(ArchSpec("fourier", 2, 2, 16), 1)
        grid = GridSpec(bounds=[(-1, 1), (-1, 1)], resolution=[20, 20])
        a = evaluate_grid(model, identity_norm(2), grid, chunk=7)
        b = evaluate_grid(model, identity_norm(2), grid, chunk=400)
        assert np.allclose(a.values, b.values, atol=1e-12, rtol=0)
        c = evaluate_grid(model, identity_norm(2), grid, chunk=7)
        assert np.array_equal(a.values, c.values)  # fixed chunking is bitwise

    def test_bump_argmax_stable_across_resolution(self):
        # a model with a single logit bump keeps its argmax cell location
        spec = ArchSpec("rbf", 2, 1, 1, n_centers=1)
        base = init_params(spec, 0)
        params = base.params.copy()
        params[0] = np.log(0.25)          # width
        params[1] = 4.0                   # W: feature -> hidden
        params[2] = 0.0                   # hidden bias
        params[3] = 2.0                   # output weight
        params[4] = -1.0                  # output bias
        model = base.with_params(params)
        model.frozen[0] = [0.3, -0.2]
        locs = []
        for r in (50, 100):
            grid = GridSpec(bounds=[(-1, 1), (-1, 1)], resolution=[r, r])
            field = evaluate_grid(model, identity_norm(2), grid)
            flat = int(np.argmax(field.values))
            i, j = divmod(flat, r)
            locs.append((grid.centers(0)[i], grid.centers(1)[j]))
        assert abs(locs[0][0] - locs[1][0]) <= 2.0 / 50
        assert abs(locs[0][1] - locs[1][1]) <= 2.0 / 50
        assert abs(locs[1][0] - 0.3) <= 2.0 / 100 + 1e-9
        assert abs(locs[1][1] + 0.2) <= 2.0 / 100 + 1e-9

    def test_dimension_mismatch(self):
        model = init_params(ArchSpec("relu", 3, 1, 4), 0)
        grid = GridSpec(bounds=[(0, 1), (0, 1)], resolution=[4, 4])
        with pytest.raises(ValueError):
            evaluate_grid(model, identity_norm(3), grid)


class TestReconstructMask:
    def test_threshold_extremes_on_flat_field(self):
        spec = ArchSpec("relu", 2, 1, 4)
        zero = init_params(spec, 0)
        zero = zero.with_params(np.zeros_like(zero.params))
        norm = NormSpec((0.0, 0.0), (8.0, 8.0), (False, False))
        ones = reconstruct_mask(zero, norm, 8, 8, threshold=0.01)
        zeros = reconstruct_mask(zero, norm, 8, 8, threshold=0.99)
        assert ones.values.all()
        assert not zeros.values.any()

    def test_threshold_bounds_validated(self):
        spec = ArchSpec("relu", 2, 1, 4)
        model = init_params(spec, 0)
        norm = identity_norm(2)
        with pytest.raises(ValueError):
            reconstruct_mask(model, norm, 4, 4, threshold=0.0)

    def test_trained_disk_reconstruction_dice(self):
        # end-to-end smoke oracle: fit pixels of a disk, rebuild the mask
        import fieldloom as fl
        from fieldloom.metrics import dice_iou, select_thresholds
        from _synth import disk_mask
        mask = disk_mask(64, 64)
        pixels = fl.sample_pixels_from_mask(mask, 64 * 64, seed=0)
        split = fl.split_random(pixels, seed=0)
        tr = pixels.subset(split.indices("train"))
        va = pixels.subset(split.indices("val"))
        norm = fl.fit_normalizer(tr)
        model = init_params(ArchSpec("rbf", 2, 3, 64, n_centers=64), 0)
        cfg = fl.TrainConfig(batch_size=512, max_epochs=8, seed=0)
        best, _ = fl.train(model, fl.apply_normalizer(norm, tr),
                           fl.apply_normalizer(norm, va), cfg)
        prob = probability_raster(best, norm, 64, 64)
        _, t_global = select_thresholds([(prob, mask)])
        recon = reconstruct_mask(best, norm, 64, 64, threshold=t_global)
        assert dice_iou(recon, mask)["dice"] > 0.9

    def test_probability_raster_orientation(self):
        # logit increases with x only: raster columns vary, rows constant
        spec = ArchSpec("relu", 2, 1, 1)
        base = init_params(spec, 0)
        params = np.zeros_like(base.params)
        params[0] = 1.0   # W[0,0]: x weight
        params[1] = 0.0   # W[1,0]: y weight
        params[2] = 2.0   # hidden bias keeps relu active
        params[3] = 1.0   # output weight
        model = base.with_params(params)
        norm = NormSpec((0.0, 0.0), (6.0, 4.0), (False, False))
        img = probability_raster(model, norm, 6, 4)
        assert img.shape == (4, 6)
        assert np.all(np.diff(img, axis=1) > 0)       # varies along x
        assert np.allclose(np.diff(img, axis=0), 0.0)  # constant along y


class TestFieldIo:
    def test_roundtrip(self, tmp_path):
        model = init_params(ArchSpec("sine", 2, 2, 8), 5)
        grid = GridSpec(bounds=[(0, 4), (0, 2)], resolution=[8, 4])
        norm = NormSpec((0.0, 0.0), (4.0, 2.0), (False, False))
        field = evaluate_grid(model, norm, grid)
        path = tmp_path / "field.csv"
        save_field(field, path)
        back = load_field(path)
        assert back.spec == field.spec
        assert np.array_equal(back.values, field.values)

    def test_roundtrip_with_slice(self, tmp_path):
        model = init_params(ArchSpec("relu", 3, 1, 4), 2)
        grid = GridSpec(bounds=[(0, 4), (0, 2)], resolution=[4, 4],
                        fixed=((2, 150.0),))
        norm = NormSpec((0.0, 0.0, 1.0), (4.0, 2.0, 366.0),
                        (False, False, False))
        field = evaluate_grid(model, norm, grid)
        path = tmp_path / "field.csv"
        save_field(field, path)
        back = load_field(path)
        assert back.spec.fixed == ((2, 150.0),)
        assert np.array_equal(back.values, field.values)


class TestBench:
    def test_contract(self):
        model = init_params(ArchSpec("fourier", 2, 2, 32), 0)
        result = bench(model, n_points=2000, repeats=3, seed=0)
        assert result.throughput > 0
        assert result.latency * result.throughput == pytest.approx(1.0, rel=1e-9)
        assert result.params == (32 * 32 + 32) * 2 + 32 + 1
        assert result.batch_size == 2000 and result.repeats == 3

    def test_median_of_repeats(self):
        model = init_params(ArchSpec("relu", 2, 1, 8), 0)
        result = bench(model, n_points=500, repeats=5, seed=1)
        assert result.throughput > 0


def test_probability_field_validation():
    spec = GridSpec(bounds=[(0, 1)], resolution=[4])
    with pytest.raises(ValueError):
        ProbabilityField(spec, np.array([0.1, 0.2]))
    with pytest.raises(ValueError):
        ProbabilityField(spec, np.array([0.1, 0.2, 0.3, 1.4]))
