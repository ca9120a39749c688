"""Model lifecycle: offline training, prediction, momentum updates, checkpoints.

The momentum update is shared between offline training and test-time
adaptation:

    v' = gamma * v - lam * g        (gamma decays the previous step,
    theta' = theta + v'              lam scales the current gradient)

Checkpoints use a little-endian binary layout: magic "ADPT", u32 format
version, u32 layer-dim count, the dims as u32, u64 training seed, then per
layer the weight matrix row-major and the bias vector as float64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import (
    AdaptationError,
    CheckpointError,
    CorruptHeaderError,
    InvalidInputError,
    ShapeError,
    TruncatedPayloadError,
    VersionMismatchError,
)
from .numerics import Gradients, MlpModel, cross_entropy, mlp_backward, mlp_forward, softmax

CHECKPOINT_MAGIC = b"ADPT"
CHECKPOINT_VERSION = 1

# A velocity carries one entry per parameter, same layout as gradients.
Velocity = Gradients


@dataclass(frozen=True)
class OptimizerConfig:
    """Momentum optimizer coefficients.

    gamma multiplies the previous velocity (momentum role, in [0, 1));
    lam scales the current gradient (step-size role, > 0).
    """

    gamma: float = 0.9
    lam: float = 0.001

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise InvalidInputError(f"gamma must be in [0, 1), got {self.gamma}")
        if not self.lam > 0.0:
            raise InvalidInputError(f"lam must be positive, got {self.lam}")


@dataclass(frozen=True)
class TrainConfig:
    """Offline training settings; updates are per-example (batch size 1)."""

    epochs: int = 30
    learning_rate: float = 0.05
    momentum: float = 0.9
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidInputError(f"epochs must be >= 1, got {self.epochs}")
        if not self.learning_rate > 0.0:
            raise InvalidInputError(f"learning rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise InvalidInputError(f"momentum must be in [0, 1), got {self.momentum}")


@dataclass
class Checkpoint:
    """A trained model plus the metadata needed to reproduce and reload it."""

    model: MlpModel
    training_seed: int = 0
    format_version: int = CHECKPOINT_VERSION

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return self.model.layer_dims

    @property
    def n_classes(self) -> int:
        return self.model.n_classes

    @property
    def feature_dim(self) -> int:
        return self.model.feature_dim


def zero_velocity(model: MlpModel) -> Velocity:
    """Fresh all-zero velocity matching the model layout."""
    return Gradients.zeros_like(model)


def predict(model: MlpModel, x) -> np.ndarray:
    """Class probability vector softmax(logits) for one feature vector."""
    logits, _ = mlp_forward(model, x)
    return softmax(logits)


def predict_label(model: MlpModel, x) -> int:
    """Argmax class with lowest-index tie-break."""
    return int(np.argmax(predict(model, x)))


def predict_labels(model: MlpModel, features: np.ndarray) -> np.ndarray:
    """Argmax class per row of a (n, d) feature matrix."""
    return np.array([predict_label(model, row) for row in np.asarray(features)], dtype=np.int64)


def momentum_update(
    model: MlpModel,
    velocity: Velocity,
    grads: Gradients,
    cfg: OptimizerConfig,
) -> tuple[MlpModel, Velocity]:
    """One descent step: v' = gamma*v - lam*g, theta' = theta + v'.

    Returns new values; nothing is mutated. Raises AdaptationError when the
    gradient or the resulting parameters are non-finite, so callers may skip
    the step and keep the previous model.
    """
    if len(grads.weights) != len(model.weights) or len(grads.biases) != len(model.biases):
        raise ShapeError("gradient layout does not match the model")
    if len(velocity.weights) != len(model.weights):
        raise ShapeError("velocity layout does not match the model")
    if not grads.all_finite():
        raise AdaptationError("gradient contains non-finite values")

    # overflow surfaces as AdaptationError below, not as a numpy warning
    with np.errstate(over="ignore", invalid="ignore"):
        new_w_vel = [cfg.gamma * v - cfg.lam * g for v, g in zip(velocity.weights, grads.weights)]
        new_b_vel = [cfg.gamma * v - cfg.lam * g for v, g in zip(velocity.biases, grads.biases)]
        new_weights = [w + v for w, v in zip(model.weights, new_w_vel)]
        new_biases = [b + v for b, v in zip(model.biases, new_b_vel)]
    for arr in new_weights + new_biases:
        if not np.all(np.isfinite(arr)):
            raise AdaptationError("parameter update produced non-finite values")
    return (
        MlpModel(model.layer_dims, new_weights, new_biases),
        Gradients(new_w_vel, new_b_vel),
    )


def init_model(layer_dims, rng: np.random.Generator) -> MlpModel:
    """Small random initialization, every parameter uniform in [-0.1, 0.1]."""
    dims = tuple(int(d) for d in layer_dims)
    weights = [rng.uniform(-0.1, 0.1, size=(dims[i + 1], dims[i])) for i in range(len(dims) - 1)]
    biases = [rng.uniform(-0.1, 0.1, size=dims[i + 1]) for i in range(len(dims) - 1)]
    return MlpModel(dims, weights, biases)


def train_offline(
    features: np.ndarray,
    labels: np.ndarray,
    layer_dims,
    cfg: TrainConfig,
    on_epoch_end: Callable[[int, float], None] | None = None,
) -> Checkpoint:
    """Per-example momentum SGD on cross-entropy over shuffled epochs.

    Deterministic given (seed, data, config). ``on_epoch_end`` receives
    (epoch index, mean epoch loss) for callers that track convergence.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise InvalidInputError("training set must be a non-empty (n, d) matrix")
    if labels.shape != (features.shape[0],):
        raise ShapeError(
            f"labels shape {labels.shape} does not match {features.shape[0]} examples"
        )
    dims = tuple(int(d) for d in layer_dims)
    if features.shape[1] != dims[0]:
        raise ShapeError(f"features have {features.shape[1]} columns, model expects {dims[0]}")
    n_classes = dims[-1]
    if labels.min() < 0 or labels.max() >= n_classes:
        raise InvalidInputError(f"labels must lie in [0, {n_classes})")

    rng = np.random.default_rng(cfg.seed)
    model = init_model(dims, rng)
    velocity = zero_velocity(model)
    opt = OptimizerConfig(gamma=cfg.momentum, lam=cfg.learning_rate)
    order = np.arange(features.shape[0])

    for epoch in range(cfg.epochs):
        if cfg.shuffle:
            order = rng.permutation(features.shape[0])
        total = 0.0
        for idx in order:
            logits, cache = mlp_forward(model, features[idx])
            label = int(labels[idx])
            total += cross_entropy(softmax(logits), label)
            grads = mlp_backward(model, cache, label)
            model, velocity = momentum_update(model, velocity, grads, opt)
        if on_epoch_end is not None:
            on_epoch_end(epoch, total / features.shape[0])

    return Checkpoint(model=model, training_seed=cfg.seed)


def dataset_accuracy(model: MlpModel, features: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of rows whose argmax prediction matches the label."""
    preds = predict_labels(model, features)
    labels = np.asarray(labels, dtype=np.int64)
    if preds.shape != labels.shape:
        raise ShapeError("labels do not match the feature rows")
    return float(np.mean(preds == labels))


def checkpoint_to_bytes(ckpt: Checkpoint) -> bytes:
    """Serialize a checkpoint to the binary wire format."""
    dims = ckpt.layer_dims
    parts = [
        CHECKPOINT_MAGIC,
        struct.pack("<I", ckpt.format_version),
        struct.pack("<I", len(dims)),
        struct.pack(f"<{len(dims)}I", *dims),
        struct.pack("<Q", ckpt.training_seed),
    ]
    for w, b in zip(ckpt.model.weights, ckpt.model.biases):
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return b"".join(parts)


def checkpoint_from_bytes(blob: bytes) -> Checkpoint:
    """Parse the binary wire format back into a checkpoint."""
    view = memoryview(blob)
    offset = 0

    def take(n: int, what: str) -> memoryview:
        nonlocal offset
        if offset + n > len(view):
            raise TruncatedPayloadError(f"file ends inside {what}")
        chunk = view[offset : offset + n]
        offset += n
        return chunk

    if len(view) < 4:
        raise TruncatedPayloadError("file shorter than the magic bytes")
    if bytes(view[:4]) != CHECKPOINT_MAGIC:
        raise CorruptHeaderError("bad magic bytes")
    offset = 4
    (version,) = struct.unpack("<I", take(4, "format version"))
    if version != CHECKPOINT_VERSION:
        raise VersionMismatchError(
            f"format version {version} unsupported, expected {CHECKPOINT_VERSION}"
        )
    (n_dims,) = struct.unpack("<I", take(4, "layer count"))
    if not 2 <= n_dims <= 64:
        raise CorruptHeaderError(f"implausible layer count {n_dims}")
    dims = struct.unpack(f"<{n_dims}I", take(4 * n_dims, "layer dims"))
    if any(not 1 <= d <= 1 << 20 for d in dims):
        raise CorruptHeaderError(f"implausible layer dims {dims}")
    (seed,) = struct.unpack("<Q", take(8, "training seed"))

    weights = []
    biases = []
    for i in range(len(dims) - 1):
        out_d, in_d = dims[i + 1], dims[i]
        w_bytes = take(8 * out_d * in_d, f"weights of layer {i}")
        b_bytes = take(8 * out_d, f"biases of layer {i}")
        weights.append(np.frombuffer(w_bytes, dtype="<f8").reshape(out_d, in_d).copy())
        biases.append(np.frombuffer(b_bytes, dtype="<f8").copy())
    if offset != len(view):
        raise CheckpointError(f"{len(view) - offset} unexpected trailing bytes")
    try:
        model = MlpModel(dims, weights, biases)
    except (InvalidInputError, ShapeError) as exc:
        raise CheckpointError(f"decoded parameters are invalid: {exc}") from exc
    return Checkpoint(model=model, training_seed=seed, format_version=version)


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    Path(path).write_bytes(checkpoint_to_bytes(ckpt))


def load_checkpoint(path) -> Checkpoint:
    return checkpoint_from_bytes(Path(path).read_bytes())
