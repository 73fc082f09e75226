"""Estimator wrapping a coordinate network behind the fit/predict API, so a
trained field drops into pipelines, model selection, and metric tooling.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .dataset import NormSpec, fit_normalizer, PointSet, SOURCE_PRESENCE
from .fields import ArchSpec, default_depth, forward_batch, init_params, sigmoid
from .optim import TrainConfig, train
from .rng import stream
from .validation import as_binary_labels, as_coords


class FieldClassifier(BaseEstimator, ClassifierMixin):
    """Coordinate-network classifier producing a continuous probability field.

    Parameters
    ----------
    kind : 'sine', 'fourier', 'relu', or 'rbf' network variant
    depth, width : hidden stack size; depth defaults to 4 for 'sine', else 3
    w0 : first-layer frequency scale of the sine variant
    n_fourier, fourier_sigma : random-projection count K and bandwidth
    n_centers : Gaussian-feature count of the rbf variant
    learning_rate, batch_size, max_epochs, patience : optimizer settings
    val_fraction : share of the fit data held out for early stopping
    normalize : fit an internal [-1, 1] scaler on the training coordinates
    seed : drives initialization, the validation carve-out, and shuffling

    After ``fit`` the trained network is in ``model_``, the per-epoch record
    in ``trace_``, and the fitted coordinate scaler in ``norm_``.
    """

    def __init__(self, kind="sine", depth=None, width=128, w0=30.0,
                 n_fourier=16, fourier_sigma=10.0, n_centers=64,
                 learning_rate=1e-3, batch_size=4096, max_epochs=10,
                 patience=3, val_fraction=0.1, normalize=True, seed=0):
        self.kind = kind
        self.depth = depth
        self.width = width
        self.w0 = w0
        self.n_fourier = n_fourier
        self.fourier_sigma = fourier_sigma
        self.n_centers = n_centers
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.val_fraction = val_fraction
        self.normalize = normalize
        self.seed = seed

    def _arch_spec(self, input_dim: int) -> ArchSpec:
        depth = self.depth if self.depth is not None else default_depth(self.kind)
        return ArchSpec(kind=self.kind, input_dim=input_dim, depth=depth,
                        width=self.width, w0=self.w0, n_fourier=self.n_fourier,
                        fourier_sigma=self.fourier_sigma, n_centers=self.n_centers)

    def fit(self, X, y):
        X = as_coords(X)
        y = as_binary_labels(y, n=len(X))
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in (0, 1)")

        if self.normalize:
            self.norm_ = fit_normalizer(
                PointSet(X, y, np.full(len(X), SOURCE_PRESENCE)))
            Xn = self.norm_.apply(X)
        else:
            self.norm_ = NormSpec(tuple([-1.0] * X.shape[1]),
                                  tuple([1.0] * X.shape[1]),
                                  tuple([False] * X.shape[1]))
            Xn = X

        n_val = max(1, int(round(len(X) * self.val_fraction)))
        if n_val >= len(X):
            raise ValueError("val_fraction leaves no training data")
        order = stream("shuffle", self.seed).permutation(len(X))
        val_idx, tr_idx = order[:n_val], order[n_val:]

        model = init_params(self._arch_spec(X.shape[1]), self.seed)
        cfg = TrainConfig(learning_rate=self.learning_rate,
                          batch_size=self.batch_size,
                          max_epochs=self.max_epochs,
                          patience=self.patience,
                          seed=self.seed)
        self.model_, self.trace_ = train(model, (Xn[tr_idx], y[tr_idx]),
                                         (Xn[val_idx], y[val_idx]), cfg)
        self.classes_ = np.array([0, 1])
        return self

    def decision_function(self, X):
        """Pre-sigmoid logits of the fitted field."""
        X = as_coords(X, dim=self.model_.spec.input_dim)
        return forward_batch(self.model_, self.norm_.apply(X))

    def predict_proba(self, X):
        p = sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self.decision_function(X) >= 0.0).astype(int)
