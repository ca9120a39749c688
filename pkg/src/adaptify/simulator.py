"""Synthetic data: offline training sets and drifting labeled streams.

Streams mimic video phenomenology: labels arrive in runs of consecutive
identical values, every frame carries Gaussian jitter, and an optional
drift vector shifts the whole feature distribution linearly over the
stream so a frozen classifier degrades while an adapting one can track.

Frame construction:

    frame[i] = class_mean[label_i]
             + (i / T) * drift_vector
             + N(0, class_spread[label_i]^2 I)
             + N(0, noise_std^2 I)

All generation is a pure function of the config, seed included.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigParseError, InvalidInputError, ShapeError


@dataclass
class StreamConfig:
    feature_dim: int
    class_count: int
    class_means: np.ndarray          # (class_count, feature_dim)
    class_spread: np.ndarray         # (class_count,) per-class isotropic std
    segment_length_range: tuple[int, int]
    stream_length: int
    drift_vector: np.ndarray         # total displacement over the stream
    noise_std: float
    seed: int

    def __post_init__(self):
        self.feature_dim = int(self.feature_dim)
        self.class_count = int(self.class_count)
        self.class_means = np.asarray(self.class_means, dtype=np.float64)
        self.class_spread = np.atleast_1d(np.asarray(self.class_spread, dtype=np.float64))
        if self.class_spread.size == 1:
            self.class_spread = np.full(self.class_count, float(self.class_spread[0]))
        self.segment_length_range = (
            int(self.segment_length_range[0]),
            int(self.segment_length_range[1]),
        )
        self.stream_length = int(self.stream_length)
        self.drift_vector = np.asarray(self.drift_vector, dtype=np.float64)
        self.noise_std = float(self.noise_std)
        self.seed = int(self.seed)

        if self.feature_dim < 1:
            raise InvalidInputError(f"feature_dim must be >= 1, got {self.feature_dim}")
        if self.class_count < 2:
            raise InvalidInputError(f"class_count must be >= 2, got {self.class_count}")
        if self.class_means.shape != (self.class_count, self.feature_dim):
            raise ShapeError(
                f"class_means shape {self.class_means.shape}, expected "
                f"({self.class_count}, {self.feature_dim})"
            )
        if self.class_spread.shape != (self.class_count,):
            raise ShapeError(
                f"class_spread shape {self.class_spread.shape}, expected ({self.class_count},)"
            )
        if np.any(self.class_spread < 0.0) or self.noise_std < 0.0:
            raise InvalidInputError("spreads and noise_std must be non-negative")
        lo, hi = self.segment_length_range
        if lo < 1 or hi < lo:
            raise InvalidInputError(f"bad segment_length_range ({lo}, {hi})")
        if self.stream_length < 1:
            raise InvalidInputError(f"stream_length must be >= 1, got {self.stream_length}")
        if self.drift_vector.shape != (self.feature_dim,):
            raise ShapeError(
                f"drift_vector shape {self.drift_vector.shape}, expected ({self.feature_dim},)"
            )
        for arr in (self.class_means, self.class_spread, self.drift_vector):
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError("stream config contains non-finite values")


@dataclass
class LabeledStream:
    frames: np.ndarray               # (T, feature_dim)
    labels: np.ndarray               # (T,) int64
    config: StreamConfig | None = None

    def __len__(self) -> int:
        return self.frames.shape[0]


@dataclass
class LabeledDataset:
    features: np.ndarray             # (n, feature_dim)
    labels: np.ndarray               # (n,) int64

    def __len__(self) -> int:
        return self.features.shape[0]


def default_drift_v1(seed: int = 1) -> StreamConfig:
    """The shipped benchmark: two drifting Gaussian classes in 8 dimensions.

    Class means sit at -1 and +1 on axis 0 (separation 2.0) and the whole
    distribution drifts +1.5 along axis 0 over 2000 frames, carrying the
    lower class across the frozen decision boundary.
    """
    d = 8
    means = np.zeros((2, d))
    means[0, 0] = -1.0
    means[1, 0] = 1.0
    drift = np.zeros(d)
    drift[0] = 1.5
    return StreamConfig(
        feature_dim=d,
        class_count=2,
        class_means=means,
        class_spread=np.array([0.8, 0.8]),
        segment_length_range=(40, 120),
        stream_length=2000,
        drift_vector=drift,
        noise_std=0.6,
        seed=seed,
    )


def generate_training_set(config: StreamConfig, n_per_class: int, seed: int) -> LabeledDataset:
    """Isotropic Gaussian samples per class; no drift, no segment structure."""
    n_per_class = int(n_per_class)
    if n_per_class < 1:
        raise InvalidInputError(f"n_per_class must be >= 1, got {n_per_class}")
    rng = np.random.default_rng(seed)
    blocks = []
    labels = []
    for c in range(config.class_count):
        samples = config.class_means[c] + rng.normal(
            0.0, config.class_spread[c], size=(n_per_class, config.feature_dim)
        )
        blocks.append(samples)
        labels.append(np.full(n_per_class, c, dtype=np.int64))
    return LabeledDataset(features=np.vstack(blocks), labels=np.concatenate(labels))


def generate_stream(config: StreamConfig) -> LabeledStream:
    """Drifting labeled stream with piecewise-constant label runs.

    Run lengths are uniform over segment_length_range; each run's class is
    drawn uniformly among the classes other than the previous run's, so
    adjacent runs never merge. The final run may be truncated.
    """
    rng = np.random.default_rng(config.seed)
    t_total = config.stream_length
    labels = np.empty(t_total, dtype=np.int64)
    lo, hi = config.segment_length_range

    filled = 0
    previous = -1
    while filled < t_total:
        run_len = int(rng.integers(lo, hi + 1))
        if previous < 0:
            cls = int(rng.integers(0, config.class_count))
        else:
            cls = int(rng.integers(0, config.class_count - 1))
            if cls >= previous:
                cls += 1
        run_len = min(run_len, t_total - filled)
        labels[filled : filled + run_len] = cls
        filled += run_len
        previous = cls

    frames = np.empty((t_total, config.feature_dim))
    for i in range(t_total):
        cls = int(labels[i])
        frames[i] = (
            config.class_means[cls]
            + (i / t_total) * config.drift_vector
            + rng.normal(0.0, config.class_spread[cls], size=config.feature_dim)
            + rng.normal(0.0, config.noise_std, size=config.feature_dim)
        )
    return LabeledStream(frames=frames, labels=labels, config=config)


def stream_to_csv(stream: LabeledStream) -> str:
    """CSV with header frame_idx,label,f0..f{d-1}; floats keep full precision."""
    d = stream.frames.shape[1]
    out = io.StringIO()
    header = ["frame_idx", "label"] + [f"f{j}" for j in range(d)]
    out.write(",".join(header) + "\n")
    for i in range(len(stream)):
        cells = [str(i), str(int(stream.labels[i]))]
        cells += [f"{v:.17g}" for v in stream.frames[i]]
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def write_stream_csv(stream: LabeledStream, path) -> None:
    Path(path).write_text(stream_to_csv(stream))


def read_stream_csv(path) -> LabeledStream:
    """Ingest a stream CSV written by stream_to_csv (config echo unavailable)."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigParseError(path, 1, "empty stream file") from None
        if len(header) < 3 or header[:2] != ["frame_idx", "label"]:
            raise ConfigParseError(path, 1, f"unexpected stream header {header!r}")
        d = len(header) - 2
        frames = []
        labels = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != d + 2:
                raise ConfigParseError(path, line_no, f"expected {d + 2} columns, got {len(row)}")
            try:
                labels.append(int(row[1]))
                frames.append([float(v) for v in row[2:]])
            except ValueError as exc:
                raise ConfigParseError(path, line_no, f"bad numeric value: {exc}") from None
    if not frames:
        raise ConfigParseError(path, 2, "stream file has no frames")
    return LabeledStream(
        frames=np.asarray(frames, dtype=np.float64),
        labels=np.asarray(labels, dtype=np.int64),
        config=None,
    )
