"""Streaming adaptation core.

Each frame is classified by fusing the frozen main model's probability
vector with buffered auxiliary probabilities:

    buffer filling   fused = alpha * y_main + beta * y_aux
    buffer full      evict oldest, append current y_aux,
                     fused = alpha * y_main + beta * sum(buffer)

The argmax of the fused scores is emitted as the label and doubles as the
pseudo-label for a cross-entropy step on the auxiliary model, so the
auxiliary network keeps learning from the stream while the main model
never changes. The current auxiliary output participates in its own
pseudo-label once the buffer is full; that ordering is deliberate.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass

import numpy as np

from .errors import AdaptationError, ConfigurationError, InvalidInputError, ShapeError
from .models import (
    Checkpoint,
    OptimizerConfig,
    Velocity,
    momentum_update,
    zero_velocity,
)
from .numerics import MlpModel, cross_entropy, mlp_backward, mlp_forward, softmax

log = logging.getLogger(__name__)

WARMUP_BRANCH = "warmup"
STEADY_BRANCH = "steady"

# Frames of adaptation run on the stream immediately before evaluation.
DEFAULT_WARMUP_FRAMES = 200


@dataclass(frozen=True)
class FusionWeights:
    """alpha weighs the current main output, beta the auxiliary contribution."""

    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.alpha < 0.0 or self.beta < 0.0:
            raise InvalidInputError(
                f"fusion weights must be non-negative, got alpha={self.alpha} beta={self.beta}"
            )
        if self.alpha + self.beta <= 0.0:
            raise InvalidInputError("alpha + beta must be positive")


class RollingBuffer:
    """Chronological store of the most recent <= capacity probability vectors."""

    def __init__(self, capacity: int):
        capacity = int(capacity)
        if capacity < 1:
            raise ConfigurationError(f"buffer capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._entries: list[np.ndarray] = []

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def is_full(self) -> bool:
        return len(self._entries) == self.capacity

    def push(self, probs: np.ndarray) -> None:
        """Append, evicting the oldest entry once at capacity."""
        if len(self._entries) == self.capacity:
            self._entries.pop(0)
        self._entries.append(probs)

    def items(self) -> list[np.ndarray]:
        """Entries oldest first."""
        return list(self._entries)

    def sum(self) -> np.ndarray:
        """Elementwise sum over entries, accumulated in chronological order."""
        if not self._entries:
            raise InvalidInputError("cannot sum an empty buffer")
        return functools.reduce(np.add, self._entries)


@dataclass
class EngineState:
    """Everything one stream run owns; ``main`` is never modified."""

    main: MlpModel
    aux: MlpModel
    aux_velocity: Velocity
    buffer: RollingBuffer
    weights: FusionWeights
    optimizer: OptimizerConfig
    t: int = 1


@dataclass
class Decision:
    """Per-frame outcome; fused_scores are left unnormalized on purpose."""

    label: int
    fused_scores: np.ndarray
    y_main: np.ndarray
    y_aux: np.ndarray
    loss: float
    branch: str = WARMUP_BRANCH


def _model_of(source: Checkpoint | MlpModel) -> MlpModel:
    return source.model if isinstance(source, Checkpoint) else source


def new_engine(
    main: Checkpoint | MlpModel,
    aux: Checkpoint | MlpModel,
    weights: FusionWeights,
    k: int,
    optimizer: OptimizerConfig | None = None,
) -> EngineState:
    """Fresh engine: empty buffer, zero velocity, frame counter at 1."""
    main_model = _model_of(main)
    aux_model = _model_of(aux)
    if main_model.n_classes != aux_model.n_classes:
        raise ConfigurationError(
            f"class counts differ: main {main_model.n_classes}, aux {aux_model.n_classes}"
        )
    if main_model.feature_dim != aux_model.feature_dim:
        raise ConfigurationError(
            f"feature dims differ: main {main_model.feature_dim}, aux {aux_model.feature_dim}"
        )
    return EngineState(
        main=main_model,
        aux=aux_model,
        aux_velocity=zero_velocity(aux_model),
        buffer=RollingBuffer(k),
        weights=weights,
        optimizer=optimizer if optimizer is not None else OptimizerConfig(),
        t=1,
    )


def fuse(y_main: np.ndarray, aux_contrib: np.ndarray, weights: FusionWeights) -> tuple[np.ndarray, int]:
    """alpha * y_main + beta * aux_contrib; argmax label with lowest-index tie-break."""
    if y_main.shape != aux_contrib.shape:
        raise ShapeError(
            f"fusion operands disagree: {y_main.shape} vs {aux_contrib.shape}"
        )
    fused = weights.alpha * y_main + weights.beta * aux_contrib
    return fused, int(np.argmax(fused))


def step(state: EngineState, x_t) -> tuple[EngineState, Decision]:
    """Process one frame: fuse, emit a decision, adapt the auxiliary model.

    A non-finite update is skipped (and logged) rather than raised, so a
    stream never stalls; the decision for the frame is emitted either way.
    """
    main_logits, _ = mlp_forward(state.main, x_t)
    y_main = softmax(main_logits)
    aux_logits, aux_cache = mlp_forward(state.aux, x_t)
    y_aux = softmax(aux_logits)

    if len(state.buffer) < state.buffer.capacity:
        branch = WARMUP_BRANCH
        fused, label = fuse(y_main, y_aux, state.weights)
        state.buffer.push(y_aux)
    else:
        branch = STEADY_BRANCH
        state.buffer.push(y_aux)
        fused, label = fuse(y_main, state.buffer.sum(), state.weights)

    loss = cross_entropy(y_aux, label)
    try:
        grads = mlp_backward(state.aux, aux_cache, label)
        state.aux, state.aux_velocity = momentum_update(
            state.aux, state.aux_velocity, grads, state.optimizer
        )
    except AdaptationError as exc:
        log.warning("frame %d: auxiliary update skipped (%s)", state.t, exc)
    state.t += 1

    return state, Decision(
        label=label,
        fused_scores=fused,
        y_main=y_main,
        y_aux=y_aux,
        loss=loss,
        branch=branch,
    )


def run_stream(state: EngineState, frames) -> tuple[EngineState, list[Decision]]:
    """Fold step over the frames in order; one decision per frame."""
    decisions = []
    for x_t in frames:
        state, decision = step(state, x_t)
        decisions.append(decision)
    return state, decisions


def warmup(state: EngineState, preceding_frames) -> EngineState:
    """Adapt on the frames preceding evaluation, discarding their decisions."""
    state, _ = run_stream(state, preceding_frames)
    return state
