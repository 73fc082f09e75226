"""Binary cross-entropy objective, Adam, and the mini-batch training loop
with validation-based early stopping.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError
from .fields import FieldModel, backward, forward_batch, sigmoid
from .rng import stream
from .validation import as_binary_labels


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings; defaults are 10 epochs for point tasks
    (use ``max_epochs=8`` for the mask task)."""

    learning_rate: float = 1e-3
    batch_size: int = 4096
    max_epochs: int = 10
    patience: int = 3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be >= 1")
        if self.patience < 0:
            raise ValueError("patience must be >= 0")


@dataclass
class AdamState:
    """First/second moment vectors and the step counter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)


def bce_loss_and_upstream(logits, labels):
    """Mean binary cross-entropy of sigmoid(logits) against 0/1 labels.

    Computed in log-sum-exp form so large logits neither overflow nor lose
    the loss to cancellation. Returns ``(loss, upstream)`` where upstream_i
    is the exact derivative ``(sigmoid(z_i) - y_i) / n`` of the mean loss
    with respect to logit i.
    """
    z = np.asarray(logits, dtype=np.float64).ravel()
    y = as_binary_labels(labels, n=z.shape[0]).astype(np.float64)
    if z.shape[0] == 0:
        raise ValueError("need at least one sample")
    losses = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    loss = float(losses.mean())
    upstream = (sigmoid(z) - y) / z.shape[0]
    return loss, upstream


def adam_step(params, grad, state: AdamState, cfg: TrainConfig):
    """One bias-corrected Adam update; pure function of its inputs."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != np.shape(params):
        raise ValueError("params and grad must have equal length")
    if not np.all(np.isfinite(grad)):
        raise NumericError("non-finite gradient passed to adam_step")
    t = state.t + 1
    m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad
    v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad**2
    m_hat = m / (1.0 - cfg.beta1**t)
    v_hat = v / (1.0 - cfg.beta2**t)
    new_params = params - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)
    return new_params, AdamState(m, v, t)


class EarlyStopper:
    """Validation-loss early stopping with strict-improvement semantics.

    Training stops once ``patience`` consecutive epochs fail to strictly
    improve on the best validation loss (``patience=0`` behaves like 1:
    stop at the first non-improving epoch). Exposed separately so arbitrary
    loss sequences can drive it in tests.
    """

    def __init__(self, patience: int):
        self.patience = patience
        self.best_loss = np.inf
        self.best_epoch = 0
        self.counter = 0
        self.epoch = 0

    def update(self, val_loss: float) -> bool:
        """Record one epoch's validation loss; return True to stop."""
        self.epoch += 1
        if val_loss < self.best_loss:
            self.best_loss = val_loss
            self.best_epoch = self.epoch
            self.counter = 0
        else:
            self.counter += 1
        return self.counter >= max(self.patience, 1)


@dataclass
class TrainTrace:
    """Per-epoch losses and the stopping outcome (epochs are 1-based)."""

    train_losses: list = field(default_factory=list)
    val_losses: list = field(default_factory=list)
    best_epoch: int = 0
    stop_reason: str = ""

    @property
    def best_val_loss(self) -> float:
        return self.val_losses[self.best_epoch - 1]

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("epoch,train_loss,val_loss,is_best\n")
            for e, (tr, va) in enumerate(zip(self.train_losses, self.val_losses), start=1):
                fh.write(f"{e},{tr:.17g},{va:.17g},{int(e == self.best_epoch)}\n")


def _as_xy(data):
    """Accept a PointSet or an (X, y) pair."""
    if hasattr(data, "coords"):
        return data.coords, data.labels
    X, y = data
    return np.asarray(X, dtype=np.float64), y


def train(model: FieldModel, train_data, val_data, cfg: TrainConfig):
    """Mini-batch training with per-epoch validation and early stopping.

    Each epoch draws a fresh seeded permutation, walks it in sequential
    batches (the short final batch is kept), and applies one Adam update per
    batch on the mean batch loss. The returned model carries the parameters
    from the best-validation epoch. Coordinates are assumed normalized.
    """
    X_tr, y_tr = _as_xy(train_data)
    X_va, y_va = _as_xy(val_data)
    if len(X_tr) == 0 or len(X_va) == 0:
        raise ValueError("training and validation sets must be non-empty")
    y_tr = as_binary_labels(y_tr, n=len(X_tr))
    y_va = as_binary_labels(y_va, n=len(X_va))

    shuffler = stream("shuffle", cfg.seed)
    params = model.params.copy()
    state = AdamState.zeros(params.size)
    stopper = EarlyStopper(cfg.patience)
    trace = TrainTrace()
    best_params = params.copy()
    n = len(X_tr)

    for epoch in range(1, cfg.max_epochs + 1):
        order = shuffler.permutation(n)
        batch_losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            Xb, yb = X_tr[idx], y_tr[idx]
            logits = forward_batch(model.with_params(params), Xb)
            loss, upstream = bce_loss_and_upstream(logits, yb)
            if not np.isfinite(loss):
                raise NumericError(
                    f"non-finite training loss in epoch {epoch}", trace=trace)
            grad = backward(model, Xb, upstream, params=params)
            params, state = adam_step(params, grad, state, cfg)
            batch_losses.append(loss)
        val_logits = forward_batch(model.with_params(params), X_va)
        val_loss, _ = bce_loss_and_upstream(val_logits, y_va)
        if not np.isfinite(val_loss):
            raise NumericError(f"non-finite validation loss in epoch {epoch}", trace=trace)
        trace.train_losses.append(float(np.mean(batch_losses)))
        trace.val_losses.append(val_loss)
        improved = val_loss < stopper.best_loss
        should_stop = stopper.update(val_loss)
        if improved:
            best_params = params.copy()
        if should_stop:
            trace.stop_reason = "early_stop"
            break
    else:
        trace.stop_reason = "max_epochs"
    trace.best_epoch = stopper.best_epoch
    return model.with_params(best_params), trace
