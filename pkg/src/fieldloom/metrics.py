"""Ranking, calibration, raster-overlap and field-summary metrics, with
bootstrap confidence intervals and random-vs-blocked gap reports.
"""

import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import distance_transform_edt

from .errors import DataError
from .rng import stream
from .validation import as_binary_labels, as_probabilities

LOGLOSS_EPS = 1e-12


@dataclass
class ScoredSet:
    """Predicted probabilities paired with 0/1 labels."""

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.scores = as_probabilities(self.scores)
        self.labels = as_binary_labels(self.labels, n=self.scores.shape[0])

    def __len__(self):
        return len(self.scores)


def _unpack(scores, labels):
    if labels is None:
        return scores.scores, scores.labels
    return as_probabilities(scores), as_binary_labels(labels)


def roc_auc(scores, labels=None) -> float:
    """Probability that a random positive outranks a random negative,
    ties counted one half (Mann-Whitney form via average ranks)."""
    s, y = _unpack(scores, labels)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("roc_auc needs at least one positive and one negative")
    order = np.argsort(s, kind="mergesort")
    s_sorted = s[order]
    bounds = np.flatnonzero(np.diff(s_sorted)) + 1
    starts = np.concatenate([[0], bounds])
    ends = np.concatenate([bounds, [s.size]])
    avg_rank = (starts + ends + 1) / 2.0  # 1-based mean rank of each tie group
    ranks = np.empty(s.size)
    ranks[order] = np.repeat(avg_rank, ends - starts)
    numerator = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(numerator / (n_pos * n_neg))


def pr_auc(scores, labels=None) -> float:
    """Average precision over descending scores with ties grouped:
    every positive contributes the precision evaluated after its whole
    tie group."""
    s, y = _unpack(scores, labels)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise DataError("pr_auc needs at least one positive")
    order = np.argsort(-s, kind="mergesort")
    s_sorted, y_sorted = s[order], y[order]
    bounds = np.flatnonzero(np.diff(s_sorted)) + 1
    ends = np.concatenate([bounds, [s.size]])
    tp_per_group = np.add.reduceat(y_sorted.astype(np.float64),
                                   np.concatenate([[0], bounds]))
    tp_cum = np.cumsum(tp_per_group)
    precision = tp_cum / ends
    terms = np.repeat(precision, tp_per_group.astype(np.int64))
    return math.fsum(terms) / n_pos


def pointwise_metrics(scores, labels=None, threshold=0.5) -> dict:
    """Log loss, Brier score and thresholded accuracy/precision/recall/F1.

    Probabilities are clamped to [eps, 1-eps] for the log loss; predictions
    are positive at ``score >= threshold``; F1 is 0 by convention when there
    are neither positive predictions nor true positives.
    """
    s, y = _unpack(scores, labels)
    if s.size == 0:
        raise ValueError("empty scored set")
    p = np.clip(s, LOGLOSS_EPS, 1.0 - LOGLOSS_EPS)
    logloss = float(-np.mean(y * np.log(p) + (1 - y) * np.log1p(-p)))
    brier = float(np.mean((s - y) ** 2))
    pred = s >= threshold
    tp = int(np.sum(pred & (y == 1)))
    fp = int(np.sum(pred & (y == 0)))
    fn = int(np.sum(~pred & (y == 1)))
    accuracy = float(np.mean(pred == (y == 1)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0
    return {"logloss": logloss, "brier": brier, "accuracy": accuracy,
            "precision": precision, "recall": recall, "f1": f1}


def ece(scores, labels=None, bins=10) -> float:
    """Expected calibration error over equal-width bins on [0, 1];
    a score of exactly 1.0 joins the last bin and empty bins contribute 0."""
    s, y = _unpack(scores, labels)
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if s.size == 0:
        return 0.0
    idx = np.minimum((s * bins).astype(np.int64), bins - 1)
    total = 0.0
    for b in range(bins):
        mask = idx == b
        n_b = int(mask.sum())
        if n_b == 0:
            continue
        total += (n_b / s.size) * abs(float(y[mask].mean()) - float(s[mask].mean()))
    return total


METRIC_REGISTRY = {
    "roc_auc": roc_auc,
    "pr_auc": pr_auc,
    "logloss": lambda s, y: pointwise_metrics(s, y)["logloss"],
    "brier": lambda s, y: pointwise_metrics(s, y)["brier"],
    "acc_at_05": lambda s, y: pointwise_metrics(s, y)["accuracy"],
    "f1_at_05": lambda s, y: pointwise_metrics(s, y)["f1"],
    "precision_at_05": lambda s, y: pointwise_metrics(s, y)["precision"],
    "recall_at_05": lambda s, y: pointwise_metrics(s, y)["recall"],
    "ece": ece,
}


def bootstrap_ci(scores, labels=None, metric="roc_auc", resamples=1000, seed=0):
    """Percentile bootstrap 95% interval for a named (or callable) metric.

    Records are resampled with replacement; single-class resamples are
    redrawn (counted, capped at 10x the requested resamples) so ranking
    metrics stay computable. Deterministic given seed.
    """
    s, y = _unpack(scores, labels)
    fn = METRIC_REGISTRY[metric] if isinstance(metric, str) else metric
    fn(s, y)  # must be computable on the full set
    rng = stream("bootstrap", seed)
    n = s.size
    values = []
    redraws = 0
    cap = 10 * resamples
    while len(values) < resamples:
        idx = rng.integers(0, n, size=n)
        y_r = y[idx]
        if y_r.min() == y_r.max():
            redraws += 1
            if redraws > cap:
                raise DataError(
                    "bootstrap redraw cap exceeded; the set is hopelessly degenerate")
            continue
        values.append(fn(s[idx], y_r))
    lo, hi = np.percentile(values, [2.5, 97.5])
    return float(lo), float(hi)


# ---------------------------------------------------------------------------
# Raster-mask metrics

def _mask_array(mask):
    arr = np.asarray(getattr(mask, "values", mask))
    return arr.astype(bool)


def dice_iou(pred, gt) -> dict:
    """Pixel-level set-overlap scores between two equal-shape binary masks.

    Two empty masks agree perfectly: dice = iou = 1 by convention (and the
    vacuous precision/recall/f1 are 1 as well).
    """
    a, b = _mask_array(pred), _mask_array(gt)
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    inter = int(np.sum(a & b))
    na, nb = int(a.sum()), int(b.sum())
    union = na + nb - inter
    if na + nb == 0:
        dice = iou = precision = recall = f1 = 1.0
    else:
        dice = 2.0 * inter / (na + nb)
        iou = inter / union if union else 1.0
        precision = inter / na if na else (1.0 if nb == 0 else 0.0)
        recall = inter / nb if nb else (1.0 if na == 0 else 0.0)
        f1 = dice
    accuracy = float(np.mean(a == b)) if a.size else 1.0
    return {"dice": dice, "iou": iou, "precision": precision,
            "recall": recall, "f1": f1, "accuracy": accuracy}


def boundary_pixels(mask) -> np.ndarray:
    """Foreground pixels with at least one background 4-neighbour; the
    image border counts as background."""
    m = _mask_array(mask)
    padded = np.pad(m, 1, constant_values=False)
    interior = (padded[:-2, 1:-1] & padded[2:, 1:-1]
                & padded[1:-1, :-2] & padded[1:-1, 2:])
    return m & ~interior


def boundary_f1(pred, gt, tolerance_px=0) -> float:
    """F1 over boundary pixels matched within a Euclidean pixel tolerance."""
    if tolerance_px < 0:
        raise ValueError("tolerance must be >= 0")
    pb = boundary_pixels(pred)
    gb = boundary_pixels(gt)
    if pb.shape != gb.shape:
        raise ValueError(f"mask shapes differ: {pb.shape} vs {gb.shape}")
    n_pb, n_gb = int(pb.sum()), int(gb.sum())
    if n_pb == 0 and n_gb == 0:
        return 1.0
    if n_pb == 0 or n_gb == 0:
        return 0.0
    dist_to_gt = distance_transform_edt(~gb)
    dist_to_pred = distance_transform_edt(~pb)
    precision = float(np.mean(dist_to_gt[pb] <= tolerance_px))
    recall = float(np.mean(dist_to_pred[gb] <= tolerance_px))
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


THRESHOLD_GRID = np.round(np.arange(1, 100) * 0.01, 2)


def select_thresholds(per_image):
    """Per-image Dice-optimal thresholds and their median.

    For each (probability raster, reference mask) pair, t* is the threshold
    on the 0.01-step grid maximizing Dice of ``prob >= t`` against the
    reference, taking the lowest threshold on ties. The global threshold is
    the median of the per-image values (mean of the middle two for even
    counts).
    """
    per_image = list(per_image)
    if not per_image:
        raise ValueError("need at least one image")
    t_stars = []
    for prob, gt in per_image:
        prob = np.asarray(getattr(prob, "values", prob), dtype=np.float64)
        gt_arr = _mask_array(gt)
        best_t, best_dice = THRESHOLD_GRID[0], -1.0
        for t in THRESHOLD_GRID:
            d = dice_iou(prob >= t, gt_arr)["dice"]
            if d > best_dice:
                best_dice, best_t = d, float(t)
        t_stars.append(best_t)
    t_stars = np.asarray(t_stars)
    return t_stars, float(np.median(t_stars))


# ---------------------------------------------------------------------------
# Field summaries

@dataclass(frozen=True)
class FieldSummary:
    """Geometric descriptors of a reconstructed probability field."""

    area_above_threshold: float
    eoo: float
    hit_at_1pct: float
    hit_at_5pct: float


def convex_hull_area(points) -> float:
    """Shoelace area of the convex hull of 2-D points (monotone chain);
    0 for fewer than three distinct non-collinear points."""
    pts = np.unique(np.asarray(points, dtype=np.float64).reshape(-1, 2), axis=0)
    if len(pts) < 3:
        return 0.0
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = np.asarray(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        return 0.0
    x, y = hull[:, 0], hull[:, 1]
    return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2.0)


def field_summary(prob_field, presences, threshold=0.5) -> FieldSummary:
    """Area above threshold, presence convex-hull extent, and hit rates.

    ``hit@k%`` is the fraction of presence points whose containing cell
    ranks in the top k% of cells by predicted probability (ties broken by
    cell index). Presences outside the field extent count as misses with a
    warning. The extent of occurrence uses the first two coordinate
    dimensions of the presence records.
    """
    values = prob_field.values
    spec = prob_field.spec
    area_above = float(np.sum(values >= threshold)) * spec.cell_area()

    pres = presences.coords[presences.labels == 1] if hasattr(presences, "coords") \
        else np.asarray(presences, dtype=np.float64)
    if len(pres) == 0:
        raise DataError("no presence records to summarize")
    eoo = convex_hull_area(pres[:, :2])

    free = spec.free_positions()
    if pres.shape[1] == spec.input_dim:
        pres_free = pres[:, free]
    elif pres.shape[1] == len(free):
        pres_free = pres
    else:
        raise ValueError("presence dimensionality does not match the field grid")
    cells = spec.locate(pres_free)
    n_out = int(np.sum(cells < 0))
    if n_out:
        warnings.warn(f"{n_out} presence points fall outside the field extent",
                      stacklevel=2)
    order = np.argsort(-values, kind="stable")
    hits = {}
    for k in (1, 5):
        n_top = max(1, int(values.size * k // 100))
        top = np.zeros(values.size, dtype=bool)
        top[order[:n_top]] = True
        inside = cells >= 0
        hits[k] = float(np.sum(top[cells[inside]]) / len(pres))
    return FieldSummary(area_above, eoo, hits[1], hits[5])


# ---------------------------------------------------------------------------
# Reports

@dataclass
class MetricReport:
    """Named metric values with optional 95% intervals and metadata."""

    values: dict
    intervals: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_csv(self, path):
        with open(path, "w") as fh:
            for k, v in self.meta.items():
                fh.write(f"# {k}={v}\n")
            fh.write("metric,value,ci_lo,ci_hi\n")
            for name, val in self.values.items():
                if name in self.intervals:
                    lo, hi = self.intervals[name]
                    fh.write(f"{name},{val:.17g},{lo:.17g},{hi:.17g}\n")
                else:
                    fh.write(f"{name},{val:.17g},,\n")

    @classmethod
    def from_csv(cls, path):
        if not os.path.exists(path):
            raise DataError(f"report not found: {path}")
        values, intervals, meta = {}, {}, {}
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    k, _, v = line[1:].strip().partition("=")
                    meta[k] = v
                    continue
                if line.startswith("metric,"):
                    continue
                name, val, lo, hi = line.split(",")
                values[name] = float(val)
                if lo and hi:
                    intervals[name] = (float(lo), float(hi))
        return cls(values, intervals, meta)


def compute_report(scores, labels=None, threshold=0.5, ece_bins=10,
                   bootstrap=0, seed=0, meta=None) -> MetricReport:
    """Full classification report for a scored set; with ``bootstrap > 0``
    the ranking metrics get percentile intervals."""
    s, y = _unpack(scores, labels)
    pw = pointwise_metrics(s, y, threshold=threshold)
    values = {
        "roc_auc": roc_auc(s, y),
        "pr_auc": pr_auc(s, y),
        "logloss": pw["logloss"],
        "brier": pw["brier"],
        "acc_at_05": pw["accuracy"],
        "f1_at_05": pw["f1"],
        "precision_at_05": pw["precision"],
        "recall_at_05": pw["recall"],
        "ece": ece(s, y, bins=ece_bins),
    }
    intervals = {}
    if bootstrap > 0:
        for name in ("roc_auc", "pr_auc"):
            intervals[name] = bootstrap_ci(s, y, metric=name,
                                           resamples=bootstrap, seed=seed)
    meta = dict(meta or {})
    meta.setdefault("n", str(s.size))
    meta.setdefault("threshold", str(threshold))
    meta.setdefault("ece_bins", str(ece_bins))
    return MetricReport(values, intervals, meta)


def leakage_gap(random_report: MetricReport, blocked_report: MetricReport) -> MetricReport:
    """Per-metric difference random minus blocked; positive values mean the
    random split looked better (for losses, negative means lower loss)."""
    if set(random_report.values) != set(blocked_report.values):
        raise ValueError("reports carry different metric keys")
    values = {k: random_report.values[k] - blocked_report.values[k]
              for k in random_report.values}
    return MetricReport(values, meta={"delta": "random-blocked"})
