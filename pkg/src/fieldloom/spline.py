"""Tensor-product B-spline logistic baseline: a smooth non-neural reference
fitted by deterministic penalized full-batch gradient descent.
"""

import os
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import DataError
from .optim import bce_loss_and_upstream
from .fields import sigmoid
from .validation import as_binary_labels, as_coords

FEATURE_CAP = 20_000


@dataclass(frozen=True)
class SplineSpec:
    """Per-dimension clamped cubic B-spline bases over fixed knot bounds.

    Bounds are fixed once (typically from the overall coordinate range of
    the dataset) and inputs outside them are clamped, so evaluation never
    runs off the knot vector under blocked splits.
    """

    bounds: tuple
    basis_count: int = 12
    degree: int = 3
    penalty: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "bounds",
                           tuple((float(lo), float(hi)) for lo, hi in self.bounds))
        if self.basis_count < self.degree + 1:
            raise ValueError("basis_count must be at least degree + 1")
        if self.penalty < 0:
            raise ValueError("penalty must be >= 0")
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ValueError("knot bounds must satisfy low < high")
        if self.basis_count ** len(self.bounds) > FEATURE_CAP:
            raise ValueError(
                f"{self.basis_count}^{len(self.bounds)} tensor features exceed "
                f"the cap of {FEATURE_CAP}")

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def n_features(self) -> int:
        return self.basis_count ** self.dim

    def knots(self, dim_index: int) -> np.ndarray:
        lo, hi = self.bounds[dim_index]
        n_interior = self.basis_count - self.degree - 1
        interior = np.linspace(lo, hi, n_interior + 2)[1:-1]
        return np.concatenate([np.full(self.degree + 1, lo), interior,
                               np.full(self.degree + 1, hi)])


def bspline_basis(spec: SplineSpec, dim_index: int, x) -> np.ndarray:
    """Evaluate all basis functions of one dimension at ``x`` (scalar or
    vector), clamping out-of-bounds inputs to the knot bounds.

    Cox-de Boor recursion over a clamped uniform knot vector; the bases sum
    to one everywhere inside the bounds, the first basis is 1 at the left
    bound and the last is 1 at the right bound.
    """
    lo, hi = spec.bounds[dim_index]
    t = spec.knots(dim_index)
    p = spec.degree
    x = np.clip(np.asarray(x, dtype=np.float64).ravel(), lo, hi)
    n_int = len(t) - 1
    B = np.zeros((x.size, n_int))
    for j in range(n_int):
        if t[j] < t[j + 1]:
            B[:, j] = (x >= t[j]) & (x < t[j + 1])
    B[x == hi, n_int - p - 1] = 1.0  # right-closed final interval
    for q in range(1, p + 1):
        nxt = np.zeros((x.size, n_int - q))
        for j in range(n_int - q):
            d1 = t[j + q] - t[j]
            if d1 > 0:
                nxt[:, j] += (x - t[j]) / d1 * B[:, j]
            d2 = t[j + q + 1] - t[j + 1]
            if d2 > 0:
                nxt[:, j] += (t[j + q + 1] - x) / d2 * B[:, j + 1]
        B = nxt
    return B


def tensor_design(spec: SplineSpec, X) -> np.ndarray:
    """Design matrix with an intercept column followed by the flattened
    outer products of the per-dimension bases (first dimension slowest)."""
    X = as_coords(X, dim=spec.dim)
    parts = [bspline_basis(spec, k, X[:, k]) for k in range(spec.dim)]
    design = parts[0]
    for part in parts[1:]:
        design = np.einsum("ni,nj->nij", design, part).reshape(len(X), -1)
    return np.column_stack([np.ones(len(X)), design])


@dataclass
class SplineModel:
    """Fitted spline baseline: spec plus coefficient vector (intercept first)."""

    spec: SplineSpec
    coef: np.ndarray
    final_grad_norm: float = 0.0
    n_iter: int = 0
    converged: bool = True

    def __post_init__(self):
        self.coef = np.asarray(self.coef, dtype=np.float64).ravel()
        if self.coef.size != self.spec.n_features + 1:
            raise ValueError("coefficient length must be n_features + 1")


def _objective(design, y, coef, penalty):
    loss, upstream = bce_loss_and_upstream(design @ coef, y)
    w = coef.copy()
    w[0] = 0.0  # intercept unpenalized
    loss += penalty * float(w @ w)
    grad = design.T @ upstream + 2.0 * penalty * w
    return loss, grad


def fit_spline(spec: SplineSpec, train, max_iter=10_000, tol=1e-6,
               coef_init=None) -> SplineModel:
    """Minimize mean BCE + penalty * ||w||^2 (intercept unpenalized) by
    full-batch gradient descent with backtracking line search.

    Deterministic from the zero initialization; stops at gradient norm below
    ``tol`` or after ``max_iter`` iterations (reported with a warning).
    """
    if hasattr(train, "coords"):
        X, y = train.coords, train.labels
    else:
        X, y = train
    X = as_coords(X, dim=spec.dim)
    y = as_binary_labels(y, n=len(X))
    if y.min() == y.max():
        raise DataError("spline fit needs both classes present")
    design = tensor_design(spec, X)
    coef = np.zeros(design.shape[1]) if coef_init is None \
        else np.asarray(coef_init, dtype=np.float64).copy()
    loss, grad = _objective(design, y, coef, spec.penalty)
    step = 1.0
    it = 0
    gnorm = float(np.linalg.norm(grad))
    while gnorm >= tol and it < max_iter:
        # Armijo backtracking, reusing twice the last accepted step
        step *= 2.0
        while True:
            trial = coef - step * grad
            trial_loss, trial_grad = _objective(design, y, trial, spec.penalty)
            if trial_loss <= loss - 1e-4 * step * gnorm**2:
                break
            step *= 0.5
            if step < 1e-18:
                break
        if step < 1e-18:
            break
        coef, loss, grad = trial, trial_loss, trial_grad
        gnorm = float(np.linalg.norm(grad))
        it += 1
    converged = gnorm < tol
    if not converged:
        warnings.warn(f"spline fit stopped after {it} iterations at gradient "
                      f"norm {gnorm:.3g}", stacklevel=2)
    return SplineModel(spec, coef, final_grad_norm=gnorm, n_iter=it,
                       converged=converged)


def predict_spline(model: SplineModel, X) -> np.ndarray:
    """Probabilities sigma(design(X) @ coef); inputs are clamped to the
    knot bounds fixed at spec time."""
    design = tensor_design(model.spec, X)
    return sigmoid(design @ model.coef)


def save_spline(model: SplineModel, path):
    spec = model.spec
    bounds = ";".join(f"{lo:.17g}:{hi:.17g}" for lo, hi in spec.bounds)
    with open(path, "w") as fh:
        fh.write(f"spline degree={spec.degree} basis={spec.basis_count} "
                 f"lambda={spec.penalty:.17g} bounds={bounds}\n")
        for c in model.coef:
            fh.write(f"{c:.17g}\n")


def load_spline(path) -> SplineModel:
    if not os.path.exists(path):
        raise DataError(f"spline model not found: {path}")
    with open(path) as fh:
        header = fh.readline().split()
        if not header or header[0] != "spline":
            raise DataError(f"malformed spline model header in {path}")
        fields = dict(tok.split("=", 1) for tok in header[1:])
        bounds = [tuple(map(float, b.split(":"))) for b in fields["bounds"].split(";")]
        spec = SplineSpec(bounds=bounds, basis_count=int(fields["basis"]),
                          degree=int(fields["degree"]), penalty=float(fields["lambda"]))
        coef = [float(line) for line in fh if line.strip()]
    return SplineModel(spec, np.asarray(coef))


class SplineLogisticField(BaseEstimator, ClassifierMixin):
    """Tensor-spline logistic classifier over raw coordinates.

    Parameters
    ----------
    basis_count : bases per dimension (tensor features are basis_count**d)
    penalty : L2 strength on the spline coefficients; acts as a smoother
    bounds : optional per-dimension (low, high) knot bounds; defaults to the
        coordinate range of the data passed to ``fit``
    """

    def __init__(self, basis_count=12, degree=3, penalty=1e-3, bounds=None,
                 max_iter=10_000, tol=1e-6):
        self.basis_count = basis_count
        self.degree = degree
        self.penalty = penalty
        self.bounds = bounds
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y):
        X = as_coords(X)
        y = as_binary_labels(y, n=len(X))
        bounds = self.bounds
        if bounds is None:
            bounds = list(zip(X.min(axis=0), X.max(axis=0)))
        spec = SplineSpec(bounds=bounds, basis_count=self.basis_count,
                          degree=self.degree, penalty=self.penalty)
        self.model_ = fit_spline(spec, (X, y), max_iter=self.max_iter, tol=self.tol)
        self.classes_ = np.array([0, 1])
        return self

    def predict_proba(self, X):
        p = predict_spline(self.model_, X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (predict_spline(self.model_, X) >= 0.5).astype(int)
