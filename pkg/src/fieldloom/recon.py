"""Dense grid reconstruction of trained fields, mask reconstruction, field
export, and the forward-throughput benchmark.
"""

import csv
import os
import time
from dataclasses import dataclass

import numpy as np

from .dataset import NormSpec
from .errors import DataError
from .fields import FieldModel, count_params, estimate_macs, forward_batch, sigmoid
from .raster import BinaryRaster

GRID_CELL_CAP = 10_000_000


@dataclass(frozen=True)
class GridSpec:
    """Regular cell-center grid over a query domain.

    ``bounds``/``resolution`` describe the free dimensions in input order;
    ``fixed`` pins held input dimensions to constant values (e.g. a
    day-of-year slice) as ``(input_dim_index, value)`` pairs.
    """

    bounds: tuple
    resolution: tuple
    fixed: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "bounds",
                           tuple((float(lo), float(hi)) for lo, hi in self.bounds))
        object.__setattr__(self, "resolution", tuple(int(r) for r in self.resolution))
        object.__setattr__(self, "fixed",
                           tuple((int(d), float(v)) for d, v in self.fixed))
        if len(self.bounds) != len(self.resolution):
            raise ValueError("bounds and resolution must have equal length")
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ValueError("grid bounds must satisfy min < max")
        for r in self.resolution:
            if r < 2:
                raise ValueError("resolution must be >= 2 per free dimension")
        total = len(self.bounds) + len(self.fixed)
        fixed_pos = [d for d, _ in self.fixed]
        if len(set(fixed_pos)) != len(fixed_pos) or any(
                not 0 <= d < total for d in fixed_pos):
            raise ValueError("fixed dimensions must be unique valid input positions")

    @property
    def input_dim(self) -> int:
        return len(self.bounds) + len(self.fixed)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.resolution))

    def free_positions(self):
        """Input-dimension indices of the free dims, in order."""
        held = {d for d, _ in self.fixed}
        return [d for d in range(self.input_dim) if d not in held]

    def centers(self, k: int) -> np.ndarray:
        lo, hi = self.bounds[k]
        r = self.resolution[k]
        return lo + (np.arange(r) + 0.5) * (hi - lo) / r

    def cell_widths(self):
        return [(hi - lo) / r for (lo, hi), r in zip(self.bounds, self.resolution)]

    def cell_area(self) -> float:
        return float(np.prod(self.cell_widths()))

    def locate(self, points) -> np.ndarray:
        """Flat row-major cell index of each free-coordinate point, or -1
        outside the extent; a point exactly on the upper bound joins the
        last cell."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if points.shape[1] != len(self.bounds):
            raise ValueError("points must have one column per free dimension")
        idx = np.zeros(len(points), dtype=np.int64)
        ok = np.all(np.isfinite(points), axis=1)
        for k, ((lo, hi), r) in enumerate(zip(self.bounds, self.resolution)):
            x = np.nan_to_num(points[:, k])
            cell = np.floor((x - lo) / ((hi - lo) / r)).astype(np.int64)
            cell[x == hi] = r - 1
            ok &= (cell >= 0) & (cell < r)
            idx = idx * r + np.clip(cell, 0, r - 1)
        idx[~ok] = -1
        return idx


@dataclass
class ProbabilityField:
    """Cell-center probabilities over a grid, stored flat row-major
    (first free dimension slowest)."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).ravel()
        if self.values.size != self.spec.n_cells:
            raise ValueError("field length must equal the grid cell count")
        if self.values.size and (self.values.min() < 0.0 or self.values.max() > 1.0):
            raise ValueError("probabilities must lie in [0, 1]")

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.spec.resolution)


def make_grid(spec: GridSpec, cap=GRID_CELL_CAP) -> np.ndarray:
    """All cell-center coordinates, shape (n_cells, input_dim), row-major
    with the first free dimension varying slowest."""
    if spec.n_cells > cap:
        raise DataError(f"grid has {spec.n_cells} cells, above the cap of {cap}")
    axes = [spec.centers(k) for k in range(len(spec.bounds))]
    mesh = np.meshgrid(*axes, indexing="ij") if axes else []
    free = np.column_stack([m.ravel() for m in mesh])
    out = np.empty((spec.n_cells, spec.input_dim))
    out[:, spec.free_positions()] = free
    for d, v in spec.fixed:
        out[:, d] = v
    return out


def evaluate_grid(model: FieldModel, norm: NormSpec, spec: GridSpec,
                  chunk=65536) -> ProbabilityField:
    """Normalize grid centers, run the model, and apply the sigmoid.

    Each cell is an independent single-point query, so the result does not
    depend on the chunk size and changing the resolution only changes the
    sampling density of the same underlying function.
    """
    if spec.input_dim != model.spec.input_dim:
        raise ValueError(
            f"grid input dim {spec.input_dim} != model input dim {model.spec.input_dim}")
    if norm.dim != model.spec.input_dim:
        raise ValueError("normalizer dimensionality does not match the model")
    coords = make_grid(spec)
    probs = np.empty(len(coords))
    for start in range(0, len(coords), chunk):
        block = norm.apply(coords[start:start + chunk])
        probs[start:start + chunk] = sigmoid(forward_batch(model, block))
    return ProbabilityField(spec, probs)


def reconstruct_mask(model: FieldModel, norm: NormSpec, width: int, height: int,
                     threshold: float) -> BinaryRaster:
    """Evaluate at pixel centers and binarize at ``threshold`` (p >= t)."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie strictly inside (0, 1)")
    prob = probability_raster(model, norm, width, height)
    return BinaryRaster((prob >= threshold).astype(np.uint8))


def probability_raster(model: FieldModel, norm: NormSpec, width: int,
                       height: int) -> np.ndarray:
    """(height, width) probability image at pixel centers, (x, y) inputs."""
    spec = GridSpec(bounds=[(0.0, float(width)), (0.0, float(height))],
                    resolution=[width, height])
    field = evaluate_grid(model, norm, spec)
    return field.as_array().T  # (x, y) row-major -> image rows


def save_field(field: ProbabilityField, path):
    """Comma-separated ``dim0,dim1[,dim2],p`` rows with a ``#`` metadata
    header describing the grid, so the field can be reloaded exactly."""
    spec = field.spec
    coords = make_grid(spec)
    with open(path, "w", newline="") as fh:
        fh.write(f"# bounds={';'.join(f'{lo:.17g}:{hi:.17g}' for lo, hi in spec.bounds)}\n")
        fh.write(f"# resolution={';'.join(str(r) for r in spec.resolution)}\n")
        if spec.fixed:
            fh.write(f"# fixed={';'.join(f'{d}:{v:.17g}' for d, v in spec.fixed)}\n")
        fh.write(",".join(f"dim{k}" for k in range(spec.input_dim)) + ",p\n")
        writer = csv.writer(fh)
        for xy, p in zip(coords, field.values):
            writer.writerow([f"{v:.17g}" for v in xy] + [f"{p:.17g}"])


def load_field(path) -> ProbabilityField:
    if not os.path.exists(path):
        raise DataError(f"field file not found: {path}")
    meta = {}
    values = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k] = v
            elif line.startswith("dim0"):
                continue
            else:
                values.append(float(line.split(",")[-1]))
    try:
        bounds = [tuple(map(float, b.split(":"))) for b in meta["bounds"].split(";")]
        resolution = [int(r) for r in meta["resolution"].split(";")]
    except KeyError:
        raise DataError(f"field file {path} lacks grid metadata") from None
    fixed = []
    if meta.get("fixed"):
        fixed = [(int(d), float(v)) for d, v in
                 (pair.split(":") for pair in meta["fixed"].split(";"))]
    return ProbabilityField(GridSpec(bounds, resolution, tuple(fixed)),
                            np.asarray(values))


@dataclass(frozen=True)
class BenchResult:
    """Forward-pass cost summary: analytic counts plus measured timing."""

    params: int
    macs: int
    throughput: float
    latency: float
    batch_size: int
    repeats: int


def bench(model: FieldModel, n_points=50000, repeats=3, seed=0) -> BenchResult:
    """Median-of-repeats wall time of ``forward_batch`` on uniform random
    normalized points, after one warm-up pass."""
    if n_points < 1 or repeats < 1:
        raise ValueError("n_points and repeats must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    X = rng.uniform(-1.0, 1.0, size=(n_points, model.spec.input_dim))
    forward_batch(model, X)  # warm-up
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        forward_batch(model, X)
        times.append(time.perf_counter() - t0)
    median = float(np.median(times))
    throughput = n_points / median
    return BenchResult(params=count_params(model.spec),
                       macs=estimate_macs(model.spec),
                       throughput=throughput,
                       latency=1.0 / throughput,
                       batch_size=n_points,
                       repeats=repeats)
