"""Dense forward/backward passes for small fully connected classifiers.

Everything runs on plain float64 numpy arrays. A feature vector is a 1-D
array, a model is a stack of (out x in) weight matrices plus bias vectors,
hidden layers apply ReLU, the output layer is affine. Probability vectors
come from a max-shifted softmax.

Gradient conventions:

    loss            L = -ln(max(softmax(logits)[label], 1e-12))
    output layer    dL/dlogits = softmax(logits) - onehot(label)
    hidden layers   chain rule through ReLU, subgradient 0 at the kink

``finite_diff_gradient`` is the independent numerical check for
``mlp_backward`` and deliberately shares no code path with it beyond the
forward pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, ShapeError

# Floor inside the log so a fully saturated softmax still yields a finite loss.
PROB_FLOOR = 1e-12


def as_vector(values, name: str = "vector") -> np.ndarray:
    """Coerce to a finite, non-empty 1-D float64 array."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ShapeError(f"{name} must be a non-empty 1-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr


@dataclass
class MlpModel:
    """Fully connected classifier: ReLU hidden layers, affine output layer.

    layer_dims is (d_in, h_1, ..., h_L, n_classes). weights[i] maps layer i
    activations (length layer_dims[i]) to layer i+1 pre-activations, stored
    as an (out, in) matrix.
    """

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        self.layer_dims = tuple(int(d) for d in self.layer_dims)
        if len(self.layer_dims) < 2:
            raise ShapeError("layer_dims needs at least input and output sizes")
        if any(d < 1 for d in self.layer_dims):
            raise ShapeError(f"layer dimensions must be positive, got {self.layer_dims}")
        n_layers = len(self.layer_dims) - 1
        if len(self.weights) != n_layers or len(self.biases) != n_layers:
            raise ShapeError(
                f"expected {n_layers} weight/bias pairs, got "
                f"{len(self.weights)}/{len(self.biases)}"
            )
        self.weights = [np.asarray(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in self.biases]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            want = (self.layer_dims[i + 1], self.layer_dims[i])
            if w.shape != want:
                raise ShapeError(f"weights[{i}] has shape {w.shape}, expected {want}")
            if b.shape != (self.layer_dims[i + 1],):
                raise ShapeError(
                    f"biases[{i}] has shape {b.shape}, expected ({self.layer_dims[i + 1]},)"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise InvalidInputError(f"layer {i} contains non-finite parameters")

    @property
    def feature_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def n_classes(self) -> int:
        return self.layer_dims[-1]

    @property
    def n_layers(self) -> int:
        return len(self.layer_dims) - 1

    def copy(self) -> "MlpModel":
        return MlpModel(
            self.layer_dims,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )


@dataclass
class Gradients:
    """Per-parameter values with the same layout as an MlpModel."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "Gradients":
        return Gradients([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.weights + self.biases)

    @classmethod
    def zeros_like(cls, model: MlpModel) -> "Gradients":
        return cls(
            [np.zeros_like(w) for w in model.weights],
            [np.zeros_like(b) for b in model.biases],
        )


@dataclass
class ForwardCache:
    """Activations recorded by mlp_forward for the matching backward pass."""

    x: np.ndarray
    pre: list[np.ndarray] = field(default_factory=list)   # pre-activation per layer
    post: list[np.ndarray] = field(default_factory=list)  # post-activation; last entry = logits


def softmax(logits) -> np.ndarray:
    """Numerically stable softmax: exp(z - max z) / sum exp(z - max z)."""
    z = as_vector(logits, "logits")
    shifted = z - z.max()
    e = np.exp(shifted)
    return e / e.sum()


def cross_entropy(probs, label: int) -> float:
    """Negative log probability of ``label`` with a 1e-12 floor inside the log."""
    p = as_vector(probs, "probs")
    label = int(label)
    if not 0 <= label < p.size:
        raise InvalidInputError(f"label {label} out of range for {p.size} classes")
    return float(-np.log(max(p[label], PROB_FLOOR)))


def mlp_forward(model: MlpModel, x) -> tuple[np.ndarray, ForwardCache]:
    """Run the network on one feature vector, returning logits and the cache."""
    x = as_vector(x, "x")
    if x.shape[0] != model.feature_dim:
        raise ShapeError(
            f"input has {x.shape[0]} features, model expects {model.feature_dim}"
        )
    cache = ForwardCache(x=x)
    a = x
    last = model.n_layers - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = w @ a + b
        cache.pre.append(z)
        a = np.maximum(z, 0.0) if i < last else z
        cache.post.append(a)
    return cache.post[-1], cache


def mlp_backward(model: MlpModel, cache: ForwardCache, label: int) -> Gradients:
    """Exact gradient of cross_entropy(softmax(logits), label) w.r.t. all parameters."""
    logits = cache.post[-1]
    label = int(label)
    if not 0 <= label < logits.size:
        raise InvalidInputError(f"label {label} out of range for {logits.size} classes")
    delta = softmax(logits)
    delta[label] -= 1.0
    n = model.n_layers
    g_w: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    g_b: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    for layer in range(n - 1, -1, -1):
        prev = cache.post[layer - 1] if layer > 0 else cache.x
        g_w[layer] = np.outer(delta, prev)
        g_b[layer] = delta.copy()
        if layer > 0:
            delta = model.weights[layer].T @ delta
            # ReLU subgradient: zero at and below the kink
            delta = delta * (cache.pre[layer - 1] > 0.0)
    return Gradients(g_w, g_b)


def finite_diff_gradient(model: MlpModel, x, label: int, h: float = 1e-5) -> Gradients:
    """Central-difference estimate (L(theta+h) - L(theta-h)) / 2h per parameter."""
    if h <= 0:
        raise InvalidInputError(f"step h must be positive, got {h}")
    work = model.copy()
    x = as_vector(x, "x")

    def loss_at_current() -> float:
        logits, _ = mlp_forward(work, x)
        return cross_entropy(softmax(logits), label)

    grads = Gradients.zeros_like(model)
    pairs = list(zip(work.weights, grads.weights)) + list(zip(work.biases, grads.biases))
    for arr, dest in pairs:
        flat = arr.reshape(-1)
        dest_flat = dest.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            up = loss_at_current()
            flat[i] = original - h
            down = loss_at_current()
            flat[i] = original
            dest_flat[i] = (up - down) / (2.0 * h)
    return grads
