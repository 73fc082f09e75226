"""Labelled coordinate datasets: loading, cleaning, background sampling,
normalization, and train/val/test splitting (record-level or block-level).

Coordinate conventions
----------------------
Geographic records are ``(lon, lat)`` in degrees or ``(lon, lat, doy)`` with
day-of-year in ``[1, 366]``. Pixel records are ``(x, y)`` pixel-center
coordinates, i.e. column/row index plus 0.5.
"""

import csv
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import DataError
from .rng import stream
from .validation import as_coords, round_half_up

SOURCE_PRESENCE = "presence"
SOURCE_BACKGROUND = "background"
SOURCE_MASK_PIXEL = "mask-pixel"

LON_RANGE = (-180.0, 180.0)
LAT_RANGE = (-90.0, 90.0)
DOY_RANGE = (1.0, 366.0)


@dataclass
class PointSet:
    """Labelled coordinate records.

    Attributes
    ----------
    coords : (n, d) float64 array, d in {2, 3}
    labels : (n,) int8 array of {0, 1}
    sources : (n,) array of per-record provenance tags
        (``presence``, ``background``, or ``mask-pixel``)
    meta : free-form provenance dict (e.g. bad-row counts from loading)
    """

    coords: np.ndarray
    labels: np.ndarray
    sources: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coords = np.atleast_2d(np.asarray(self.coords, dtype=np.float64))
        self.labels = np.asarray(self.labels, dtype=np.int8).ravel()
        self.sources = np.asarray(self.sources, dtype="U10").ravel()
        if not (len(self.coords) == len(self.labels) == len(self.sources)):
            raise ValueError("coords, labels and sources must have equal length")
        if self.coords.ndim != 2 or self.coords.shape[1] not in (2, 3):
            raise ValueError("coordinates must be 2- or 3-dimensional")

    def __len__(self):
        return len(self.coords)

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def is_geographic(self) -> bool:
        """True unless every record came from a raster mask."""
        return len(self) == 0 or not np.all(self.sources == SOURCE_MASK_PIXEL)

    def subset(self, index) -> "PointSet":
        return PointSet(self.coords[index], self.labels[index], self.sources[index],
                        dict(self.meta))

    def concat(self, other: "PointSet") -> "PointSet":
        if other.dim != self.dim:
            raise ValueError("cannot concatenate point sets of different dimensionality")
        return PointSet(
            np.vstack([self.coords, other.coords]),
            np.concatenate([self.labels, other.labels]),
            np.concatenate([self.sources, other.sources]),
        )


def load_points(path, schema=None) -> PointSet:
    """Read labelled coordinates from a comma-separated file with a header row.

    ``schema`` maps the roles ``lon``, ``lat`` and optionally ``doy`` and
    ``label`` to column names; including ``doy`` selects dim=3, and omitting
    ``label`` treats every row as a presence. With ``schema=None`` the
    default columns ``lon, lat[, doy], label`` are used; the optional roles
    participate iff their column exists.

    Rows whose coordinate or label fields fail to parse are kept as records
    with non-finite coordinates (removed later by :func:`clean`); their count
    is reported in ``meta['bad_rows']``.
    """
    if not os.path.exists(path):
        raise DataError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"empty file: {path}") from None
        rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise DataError(f"no data rows after header in {path}")

    if schema is None:
        schema = {"lon": "lon", "lat": "lat"}
        if "doy" in header:
            schema["doy"] = "doy"
        if "label" in header:
            schema["label"] = "label"
    roles = ["lon", "lat"] + (["doy"] if "doy" in schema else [])
    has_label = "label" in schema
    col_idx = {}
    for role in roles + (["label"] if has_label else []):
        colname = schema[role]
        if colname not in header:
            raise DataError(f"declared column {colname!r} missing from {path}")
        col_idx[role] = header.index(colname)

    dim = 3 if "doy" in schema else 2
    n = len(rows)
    coords = np.full((n, dim), np.nan)
    labels = np.ones(n, dtype=np.int8)
    bad = 0
    for i, row in enumerate(rows):
        try:
            vals = [float(row[col_idx[r]]) for r in roles]
            lab = float(row[col_idx["label"]]) if has_label else 1.0
        except (ValueError, IndexError):
            bad += 1
            coords[i] = np.nan
            continue
        if lab not in (0.0, 1.0):
            bad += 1
            coords[i] = np.nan
            continue
        coords[i] = vals
        labels[i] = int(lab)
    sources = np.where(labels == 1, SOURCE_PRESENCE, SOURCE_BACKGROUND)
    return PointSet(coords, labels, sources,
                    meta={"path": str(path), "rows": n, "bad_rows": bad})


def save_points(points: PointSet, path):
    """Write a point set in the same comma-separated layout ``load_points`` reads."""
    cols = ["lon", "lat", "doy", "label"] if points.dim == 3 else ["lon", "lat", "label"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for xy, lab in zip(points.coords, points.labels):
            writer.writerow([f"{v:.17g}" for v in xy] + [int(lab)])


def clean(points: PointSet) -> PointSet:
    """Drop non-finite and out-of-range records, then exact coordinate duplicates.

    The first occurrence of each duplicated coordinate vector is kept, in
    input order, so cleaning is deterministic and idempotent. Range checks
    (lon/lat/doy) apply only to geographic sets.
    """
    keep = np.all(np.isfinite(points.coords), axis=1)
    if points.is_geographic:
        lon, lat = points.coords[:, 0], points.coords[:, 1]
        keep &= (lon >= LON_RANGE[0]) & (lon <= LON_RANGE[1])
        keep &= (lat >= LAT_RANGE[0]) & (lat <= LAT_RANGE[1])
        if points.dim == 3:
            doy = points.coords[:, 2]
            keep &= (doy >= DOY_RANGE[0]) & (doy <= DOY_RANGE[1])
    idx = np.flatnonzero(keep)
    seen = set()
    unique_idx = []
    for i in idx:
        key = points.coords[i].tobytes()
        if key not in seen:
            seen.add(key)
            unique_idx.append(i)
    if not unique_idx:
        raise DataError("no usable records remain after cleaning")
    return points.subset(np.asarray(unique_idx))


def bounding_box(points: PointSet):
    """Per-dimension (low, high) bounds of a point set."""
    if len(points) == 0:
        raise DataError("cannot take the bounding box of an empty point set")
    return [(float(lo), float(hi))
            for lo, hi in zip(points.coords.min(axis=0), points.coords.max(axis=0))]


def sample_background(presences: PointSet, n: int, seed: int, domain=None) -> PointSet:
    """Sample ``n`` label-0 background records uniformly per dimension.

    Bounds come from the presence bounding box unless an explicit ``domain``
    (list of per-dimension ``(low, high)``) is given; for dim=3 the third
    (day-of-year) dimension always spans [1, 366]. Deterministic given seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if domain is None:
        box = bounding_box(presences)
        if presences.dim == 3:
            box[2] = DOY_RANGE
        for d, (lo, hi) in enumerate(box):
            if not lo < hi:
                raise DataError(
                    f"degenerate presence bounding box in dimension {d}; "
                    "pass an explicit domain")
    else:
        box = [(float(lo), float(hi)) for lo, hi in domain]
        if len(box) != presences.dim:
            raise ValueError("domain dimensionality does not match presences")
        for lo, hi in box:
            if not lo < hi:
                raise ValueError("explicit domain has a zero-extent dimension")
    rng = stream("background", seed)
    cols = [rng.uniform(lo, hi, size=n) for lo, hi in box]
    coords = np.column_stack(cols)
    labels = np.zeros(n, dtype=np.int8)
    sources = np.full(n, SOURCE_BACKGROUND)
    return PointSet(coords, labels, sources)


def sample_pixels_from_mask(mask, n: int, seed: int) -> PointSet:
    """Sample ``n`` labelled pixel-center records from a binary raster.

    Sampling is without replacement when ``n`` does not exceed the pixel
    count, with replacement otherwise. All-zero and all-one masks are
    rejected as degenerate.
    """
    values = np.asarray(mask.values, dtype=np.int8)
    h, w = values.shape
    total = h * w
    fg = int(values.sum())
    if fg == 0 or fg == total:
        raise DataError("degenerate mask: all pixels share one value")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = stream("pixels", seed)
    flat = rng.choice(total, size=n, replace=n > total)
    rows, cols = np.divmod(flat, w)
    coords = np.column_stack([cols + 0.5, rows + 0.5])
    labels = values[rows, cols]
    sources = np.full(n, SOURCE_MASK_PIXEL)
    return PointSet(coords, labels, sources)


# ---------------------------------------------------------------------------
# Normalization

@dataclass(frozen=True)
class NormSpec:
    """Per-dimension affine map raw -> [-1, 1] fitted on training bounds.

    A degenerate (constant) dimension maps to 0 and carries a flag; inverting
    a degenerate dimension returns its constant training value.
    """

    lows: tuple
    highs: tuple
    degenerate: tuple

    @property
    def dim(self) -> int:
        return len(self.lows)

    def apply(self, X) -> np.ndarray:
        X = as_coords(X, dim=self.dim)
        out = np.empty_like(X)
        for d in range(self.dim):
            if self.degenerate[d]:
                out[:, d] = 0.0
            else:
                lo, hi = self.lows[d], self.highs[d]
                out[:, d] = 2.0 * (X[:, d] - lo) / (hi - lo) - 1.0
        return out

    def invert(self, U) -> np.ndarray:
        U = as_coords(U, dim=self.dim)
        out = np.empty_like(U)
        for d in range(self.dim):
            if self.degenerate[d]:
                out[:, d] = self.lows[d]
            else:
                lo, hi = self.lows[d], self.highs[d]
                out[:, d] = lo + (U[:, d] + 1.0) * (hi - lo) / 2.0
        return out


def fit_normalizer(train: PointSet) -> NormSpec:
    """Fit per-dimension [-1, 1] bounds on training records only.

    Training minima map to -1 and maxima to +1; later inputs outside the
    training range pass through the same affine map unclamped. Constant
    dimensions are flagged degenerate with a warning.
    """
    if len(train) == 0:
        raise DataError("cannot fit a normalizer on an empty point set")
    lows = train.coords.min(axis=0)
    highs = train.coords.max(axis=0)
    degenerate = lows == highs
    for d in np.flatnonzero(degenerate):
        warnings.warn(f"dimension {d} is constant ({lows[d]}); it will map to 0",
                      stacklevel=2)
    return NormSpec(tuple(map(float, lows)), tuple(map(float, highs)),
                    tuple(bool(b) for b in degenerate))


def apply_normalizer(spec: NormSpec, points: PointSet) -> PointSet:
    """Return a copy of ``points`` with coordinates mapped through ``spec``."""
    return PointSet(spec.apply(points.coords), points.labels, points.sources,
                    dict(points.meta))


def save_normalizer(spec: NormSpec, path):
    with open(path, "w") as fh:
        fh.write("dim,low,high,degenerate\n")
        for d in range(spec.dim):
            fh.write(f"{d},{spec.lows[d]:.17g},{spec.highs[d]:.17g},"
                     f"{int(spec.degenerate[d])}\n")


def load_normalizer(path) -> NormSpec:
    if not os.path.exists(path):
        raise DataError(f"normalizer file not found: {path}")
    lows, highs, flags = [], [], []
    with open(path) as fh:
        next(fh)
        for line in fh:
            if not line.strip():
                continue
            _, lo, hi, flag = line.strip().split(",")
            lows.append(float(lo))
            highs.append(float(hi))
            flags.append(bool(int(flag)))
    return NormSpec(tuple(lows), tuple(highs), tuple(flags))


# ---------------------------------------------------------------------------
# Splits

PARTITIONS = ("train", "val", "test")


@dataclass
class SplitAssignment:
    """Per-record train/val/test partition under a named protocol.

    For the blocked protocol, ``block_ids`` holds one integer block tuple per
    record and ``block_partitions`` the per-block tag; every record in a
    block shares the block's partition.
    """

    protocol: str
    partitions: np.ndarray
    block_ids: list | None = None
    block_deg: float | None = None
    doy_bin_days: float | None = None
    block_partitions: dict | None = None

    def __len__(self):
        return len(self.partitions)

    def indices(self, part: str) -> np.ndarray:
        if part not in PARTITIONS:
            raise ValueError(f"unknown partition {part!r}")
        return np.flatnonzero(self.partitions == part)


def _partition_counts(n: int, test_frac: float, val_frac: float):
    if not (0.0 < test_frac < 1.0 and 0.0 < val_frac < 1.0 and test_frac + val_frac < 1.0):
        raise ValueError("fractions must lie in (0,1) and sum below 1")
    n_test = int(round_half_up(n * test_frac))
    n_val = int(round_half_up(n * val_frac))
    n_train = n - n_test - n_val
    if min(n_test, n_val, n_train) < 1:
        raise DataError(f"{n} records are too few for three non-empty partitions")
    return n_test, n_val


def split_random(points: PointSet, test_frac=0.2, val_frac=0.1, seed=0) -> SplitAssignment:
    """Uniform record-level split with sizes rounded to the target fractions."""
    n = len(points)
    n_test, n_val = _partition_counts(n, test_frac, val_frac)
    order = stream("shuffle", seed).permutation(n)
    parts = np.full(n, "train", dtype="U5")
    parts[order[:n_test]] = "test"
    parts[order[n_test:n_test + n_val]] = "val"
    return SplitAssignment("random", parts)


def block_id_of(coords: np.ndarray, block_deg: float, doy_bin_days=None):
    """Integer block tuple per record: floor(lon/b), floor(lat/b)[, floor((doy-1)/w)].

    Blocks are anchored at 0 degrees (and day 1), so the tiling is
    reproducible across datasets; day-of-year 366 falls in the final bin.
    """
    bx = np.floor(coords[:, 0] / block_deg).astype(np.int64)
    by = np.floor(coords[:, 1] / block_deg).astype(np.int64)
    cols = [bx, by]
    if coords.shape[1] == 3:
        if doy_bin_days is None:
            raise ValueError("doy_bin_days is required for 3-dimensional records")
        cols.append(np.floor((coords[:, 2] - 1.0) / doy_bin_days).astype(np.int64))
    return list(zip(*(c.tolist() for c in cols)))


def split_blocked(points: PointSet, block_deg=5.0, doy_bin_days=None,
                  test_frac=0.2, val_frac=0.1, seed=0) -> SplitAssignment:
    """Assign whole spatial (or spatio-temporal) blocks to partitions.

    Occupied blocks are shuffled once; the first ``round(B*test_frac)`` become
    test blocks and validation blocks are then drawn from the remaining
    (training) pool, targeting ``round(B*val_frac)``.
    """
    if block_deg <= 0:
        raise ValueError("block_deg must be positive")
    if points.dim == 3 and doy_bin_days is None:
        raise ValueError("doy_bin_days is required for 3-dimensional records")
    ids = block_id_of(points.coords, block_deg, doy_bin_days)
    unique_blocks = sorted(set(ids))
    n_blocks = len(unique_blocks)
    if n_blocks < 3:
        raise DataError(f"only {n_blocks} occupied blocks; need at least 3")
    n_test = int(round_half_up(n_blocks * test_frac))
    n_val = int(round_half_up(n_blocks * val_frac))
    n_test = max(1, min(n_test, n_blocks - 2))
    n_val = max(1, min(n_val, n_blocks - n_test - 1))
    order = stream("shuffle", seed).permutation(n_blocks)
    block_part = {}
    for rank, j in enumerate(order):
        if rank < n_test:
            tag = "test"
        elif rank < n_test + n_val:
            tag = "val"
        else:
            tag = "train"
        block_part[unique_blocks[j]] = tag
    parts = np.array([block_part[b] for b in ids], dtype="U5")
    return SplitAssignment("blocked", parts, block_ids=ids, block_deg=float(block_deg),
                           doy_bin_days=doy_bin_days, block_partitions=block_part)


def save_split(split: SplitAssignment, path):
    """Write ``record_index,partition,block_id`` rows (block id fields joined by '|')."""
    with open(path, "w", newline="") as fh:
        fh.write("record_index,partition,block_id\n")
        for i, part in enumerate(split.partitions):
            block = ""
            if split.block_ids is not None:
                block = "|".join(str(v) for v in split.block_ids[i])
            fh.write(f"{i},{part},{block}\n")


def load_split(path) -> SplitAssignment:
    if not os.path.exists(path):
        raise DataError(f"split file not found: {path}")
    parts, blocks = [], []
    with open(path) as fh:
        next(fh)
        for line in fh:
            if not line.strip():
                continue
            _, part, block = line.rstrip("\n").split(",")
            parts.append(part)
            blocks.append(tuple(int(v) for v in block.split("|")) if block else None)
    has_blocks = all(b is not None for b in blocks) and blocks
    return SplitAssignment(
        "blocked" if has_blocks else "random",
        np.asarray(parts, dtype="U5"),
        block_ids=blocks if has_blocks else None,
    )


# ---------------------------------------------------------------------------
# sklearn-style wrapper

class CoordinateNormalizer(BaseEstimator, TransformerMixin):
    """Affine per-dimension scaler onto [-1, 1], fitted on the training domain.

    Unlike ``MinMaxScaler``, out-of-range inputs at transform time pass
    through the fitted map unclamped, and constant dimensions map to 0.
    """

    def fit(self, X, y=None):
        X = as_coords(X)
        self.spec_ = fit_normalizer(
            PointSet(X, np.zeros(len(X), dtype=np.int8),
                     np.full(len(X), SOURCE_PRESENCE)))
        return self

    def transform(self, X):
        return self.spec_.apply(X)

    def inverse_transform(self, U):
        return self.spec_.invert(U)
