"""Coordinate-network field models: four encodings feeding a dense stack
that ends in a single logit.

Kinds
-----
``sine``    raw coordinates, sinusoidal activations sin(w0 * a) after every
            hidden affine; w0 sets the first-layer frequency and hidden
            weights carry the compensating 1/w0 initialization scale.
``fourier`` frozen random sinusoidal projection [sin(2*pi*B x), cos(2*pi*B x)]
            of length 2K ahead of a ReLU stack; B has Normal(0, sigma^2) entries.
``relu``    raw coordinates into a ReLU stack.
``rbf``     Gaussian responses exp(-||x - c_j||^2 / (2 s_j^2)) over fixed
            centers with learned per-center widths, ahead of a ReLU stack.

Parameter vector layout (also the checkpoint order): for ``rbf``, the C
per-center log-widths come first; then for each affine layer in forward
order, the weight matrix W of shape (fan_in, fan_out) flattened row-major,
followed by the bias vector. The frozen Fourier projection (K x d) or the
frozen RBF centers (C x d) are stored separately, row-major.
"""

import math
import os
from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError, NumericError
from .rng import stream
from .validation import as_coords, require_finite

ARCH_KINDS = ("sine", "fourier", "relu", "rbf")

RBF_INITIAL_WIDTH = 0.3


def sigmoid(z):
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def default_depth(kind: str) -> int:
    return 4 if kind == "sine" else 3


@dataclass(frozen=True)
class ArchSpec:
    """Architecture descriptor; ``depth`` counts hidden layers."""

    kind: str
    input_dim: int
    depth: int
    width: int
    w0: float = 30.0
    n_fourier: int = 16
    fourier_sigma: float = 10.0
    n_centers: int = 64

    def __post_init__(self):
        if self.kind not in ARCH_KINDS:
            raise ValueError(f"kind must be one of {ARCH_KINDS}, got {self.kind!r}")
        if self.input_dim < 1 or self.depth < 1 or self.width < 1:
            raise ValueError("input_dim, depth and width must be >= 1")
        if self.kind == "sine" and self.w0 <= 0:
            raise ValueError("w0 must be positive")
        if self.kind == "fourier" and (self.n_fourier < 1 or self.fourier_sigma <= 0):
            raise ValueError("n_fourier must be >= 1 and fourier_sigma > 0")
        if self.kind == "rbf" and self.n_centers < 1:
            raise ValueError("n_centers must be >= 1")

    @property
    def encoded_dim(self) -> int:
        if self.kind == "fourier":
            return 2 * self.n_fourier
        if self.kind == "rbf":
            return self.n_centers
        return self.input_dim

    def layer_dims(self):
        """(fan_in, fan_out) per affine layer, encoder output to logit."""
        dims = [(self.encoded_dim, self.width)]
        dims += [(self.width, self.width)] * (self.depth - 1)
        dims.append((self.width, 1))
        return dims


def count_params(spec: ArchSpec) -> int:
    """Trainable parameter count: affine weights and biases, plus the
    per-center widths for ``rbf``. Frozen projections/centers are excluded."""
    total = sum(fi * fo + fo for fi, fo in spec.layer_dims())
    if spec.kind == "rbf":
        total += spec.n_centers
    return total


def estimate_macs(spec: ArchSpec) -> int:
    """Analytic multiply-accumulates for one single-point forward pass."""
    total = sum(fi * fo for fi, fo in spec.layer_dims())
    if spec.kind == "fourier":
        total += spec.n_fourier * spec.input_dim
    elif spec.kind == "rbf":
        total += spec.n_centers * (spec.input_dim + 1)
    return total


def _layer_slices(spec: ArchSpec):
    """Offsets of each layer's W and b inside the flat parameter vector."""
    offset = spec.n_centers if spec.kind == "rbf" else 0
    out = []
    for fi, fo in spec.layer_dims():
        w_sl = slice(offset, offset + fi * fo)
        b_sl = slice(offset + fi * fo, offset + fi * fo + fo)
        out.append((w_sl, b_sl, (fi, fo)))
        offset += fi * fo + fo
    return out


@dataclass
class FieldModel:
    """Architecture descriptor plus flat trainable parameter vector.

    ``frozen`` holds the fixed Fourier projection (fourier kind) or the fixed
    center coordinates (rbf kind); ``None`` otherwise. Immutable by
    convention after construction: training works on copies.
    """

    spec: ArchSpec
    params: np.ndarray
    frozen: np.ndarray | None
    seed: int

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=np.float64).ravel()
        expected = count_params(self.spec)
        if self.params.size != expected:
            raise ValueError(
                f"parameter vector has length {self.params.size}, expected {expected}")
        require_finite(self.params, "params")

    def with_params(self, params) -> "FieldModel":
        return replace(self, params=np.asarray(params, dtype=np.float64).copy())

    def layers(self, params=None):
        p = self.params if params is None else params
        return [(p[w_sl].reshape(shape), p[b_sl])
                for w_sl, b_sl, shape in _layer_slices(self.spec)]

    def rbf_log_widths(self, params=None):
        p = self.params if params is None else params
        return p[: self.spec.n_centers]


def init_params(spec: ArchSpec, seed: int) -> FieldModel:
    """Deterministically initialize a model from ``(spec, seed)``.

    Weights: sine first layer U(-1/d, 1/d) so unit inputs reach pre-activation
    frequency ``w0``; later sine layers U(+-sqrt(6/fan_in)/w0), compensating
    the in-activation frequency scale; every other kind uses
    U(+-sqrt(6/fan_in)). Biases are U(+-1/sqrt(fan_in)). Draw order: frozen
    matrix (if any), then each layer's weights then biases. RBF log-widths
    start at log(0.3) and are not random.
    """
    rng = stream("init", seed)
    frozen = None
    if spec.kind == "fourier":
        frozen = rng.normal(0.0, spec.fourier_sigma, size=(spec.n_fourier, spec.input_dim))
    elif spec.kind == "rbf":
        frozen = rng.uniform(-1.0, 1.0, size=(spec.n_centers, spec.input_dim))

    params = np.empty(count_params(spec))
    if spec.kind == "rbf":
        params[: spec.n_centers] = math.log(RBF_INITIAL_WIDTH)
    for i, (w_sl, b_sl, (fi, fo)) in enumerate(_layer_slices(spec)):
        if spec.kind == "sine":
            bound = 1.0 / spec.input_dim if i == 0 else math.sqrt(6.0 / fi) / spec.w0
        else:
            bound = math.sqrt(6.0 / fi)
        params[w_sl] = rng.uniform(-bound, bound, size=fi * fo)
        params[b_sl] = rng.uniform(-1.0 / math.sqrt(fi), 1.0 / math.sqrt(fi), size=fo)
    return FieldModel(spec, params, frozen, int(seed))


def encode(model: FieldModel, X) -> np.ndarray:
    """Feature map ahead of the dense stack; identity for sine/relu."""
    spec = model.spec
    X = as_coords(X, dim=spec.input_dim)
    if spec.kind in ("sine", "relu"):
        return X
    if spec.kind == "fourier":
        z = 2.0 * np.pi * (X @ model.frozen.T)
        return np.concatenate([np.sin(z), np.cos(z)], axis=1)
    # rbf: Gaussian response per center with learned widths
    widths = np.exp(model.rbf_log_widths())
    sq = np.square(X[:, None, :] - model.frozen[None, :, :]).sum(axis=2)
    return np.exp(-sq / (2.0 * widths**2))


def _forward_cached(model: FieldModel, X, params=None):
    """Forward pass keeping the per-layer pre-activations for backprop."""
    spec = model.spec
    if params is None:
        params = model.params
    shim = model if params is model.params else model.with_params(params)
    feats = encode(shim, X)
    layers = model.layers(params)
    h = feats
    pre_acts, hiddens = [], [feats]
    for i, (W, b) in enumerate(layers):
        a = h @ W + b
        if i == len(layers) - 1:
            h = a
        elif spec.kind == "sine":
            h = np.sin(spec.w0 * a)
        else:
            h = np.maximum(a, 0.0)
        pre_acts.append(a)
        if i < len(layers) - 1:
            hiddens.append(h)
    return h[:, 0], feats, pre_acts, hiddens


def forward_batch(model: FieldModel, X) -> np.ndarray:
    """Logits for an (n, d) batch of coordinates."""
    X = as_coords(X, dim=model.spec.input_dim)
    if X.shape[0] == 0:
        return np.empty(0)
    logits = _forward_cached(model, X)[0]
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite network output; parameters are corrupted")
    return logits


def forward(model: FieldModel, x) -> float:
    """Pre-sigmoid logit at a single coordinate."""
    return float(forward_batch(model, np.asarray(x, dtype=np.float64).reshape(1, -1))[0])


def backward(model: FieldModel, X, upstream, params=None) -> np.ndarray:
    """Exact gradient of sum_i upstream_i * logit(x_i) over trainable params.

    Includes the RBF width parameters via the derivative of the Gaussian
    response with respect to its log-width.
    """
    spec = model.spec
    X = as_coords(X, dim=spec.input_dim)
    upstream = np.asarray(upstream, dtype=np.float64).ravel()
    if upstream.shape[0] != X.shape[0]:
        raise ValueError("upstream length must match the number of rows in X")
    require_finite(upstream, "upstream")
    if params is None:
        params = model.params
    _, feats, pre_acts, hiddens = _forward_cached(model, X, params)
    layers = model.layers(params)

    grad = np.zeros_like(params)
    slices = _layer_slices(spec)
    delta = upstream[:, None]
    for i in range(len(layers) - 1, -1, -1):
        W, _ = layers[i]
        w_sl, b_sl, _ = slices[i]
        grad[w_sl] = (hiddens[i].T @ delta).ravel()
        grad[b_sl] = delta.sum(axis=0)
        if i == 0:
            delta = delta @ W.T
            break
        back = delta @ W.T
        a_prev = pre_acts[i - 1]
        if spec.kind == "sine":
            dact = spec.w0 * np.cos(spec.w0 * a_prev)
        else:
            dact = (a_prev > 0).astype(np.float64)
        delta = back * dact

    if spec.kind == "rbf":
        # d feat_j / d log_width_j = feat_j * r^2 / width_j^2
        widths = np.exp(params[: spec.n_centers])
        sq = np.square(X[:, None, :] - model.frozen[None, :, :]).sum(axis=2)
        grad[: spec.n_centers] = (delta * feats * sq / widths**2).sum(axis=0)
    if not np.all(np.isfinite(grad)):
        raise NumericError("non-finite gradient")
    return grad


# ---------------------------------------------------------------------------
# Checkpoint I/O: line-oriented text, full float64 precision.

def save_checkpoint(model: FieldModel, path):
    """Write header, then frozen matrix values (row-major) under ``#frozen``,
    then trainable parameters under ``#params``, one value per line."""
    spec = model.spec
    head = [f"arch={spec.kind}", f"d={spec.input_dim}",
            f"depth={spec.depth}", f"width={spec.width}"]
    if spec.kind == "sine":
        head.append(f"w0={spec.w0:.17g}")
    elif spec.kind == "fourier":
        head.append(f"K={spec.n_fourier}")
        head.append(f"sigma={spec.fourier_sigma:.17g}")
    elif spec.kind == "rbf":
        head.append(f"C={spec.n_centers}")
    head.append(f"seed={model.seed}")
    with open(path, "w") as fh:
        fh.write(" ".join(head) + "\n")
        if model.frozen is not None:
            fh.write("#frozen\n")
            for v in model.frozen.ravel():
                fh.write(f"{v:.17g}\n")
        fh.write("#params\n")
        for v in model.params:
            fh.write(f"{v:.17g}\n")


def load_checkpoint(path) -> FieldModel:
    if not os.path.exists(path):
        raise DataError(f"checkpoint not found: {path}")
    with open(path) as fh:
        header = fh.readline().strip()
        fields = dict(tok.split("=", 1) for tok in header.split())
        try:
            kind = fields["arch"]
            kwargs = dict(kind=kind, input_dim=int(fields["d"]),
                          depth=int(fields["depth"]), width=int(fields["width"]))
            if kind == "sine":
                kwargs["w0"] = float(fields["w0"])
            elif kind == "fourier":
                kwargs["n_fourier"] = int(fields["K"])
                kwargs["fourier_sigma"] = float(fields["sigma"])
            elif kind == "rbf":
                kwargs["n_centers"] = int(fields["C"])
            seed = int(fields["seed"])
        except KeyError as exc:
            raise DataError(f"malformed checkpoint header in {path}: {header!r}") from exc
        spec = ArchSpec(**kwargs)
        frozen_vals, param_vals = [], []
        target = None
        for line in fh:
            line = line.strip()
            if line == "#frozen":
                target = frozen_vals
            elif line == "#params":
                target = param_vals
            elif line:
                if target is None:
                    raise DataError(f"values before section marker in {path}")
                target.append(float(line))
    frozen = None
    if kind == "fourier":
        frozen = np.asarray(frozen_vals).reshape(spec.n_fourier, spec.input_dim)
    elif kind == "rbf":
        frozen = np.asarray(frozen_vals).reshape(spec.n_centers, spec.input_dim)
    params = np.asarray(param_vals)
    if params.size != count_params(spec):
        raise DataError(f"checkpoint has {params.size} parameters, "
                        f"expected {count_params(spec)}")
    return FieldModel(spec, params, frozen, seed)
