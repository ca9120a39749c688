"""Streaming test-time adaptation for drifting classification streams.

A frozen main classifier is fused with a small auxiliary classifier that
keeps learning online from its own pseudo-labels, smoothed through a
rolling buffer of recent probability vectors.
"""

from .engine import (
    DEFAULT_WARMUP_FRAMES,
    STEADY_BRANCH,
    WARMUP_BRANCH,
    Decision,
    EngineState,
    FusionWeights,
    RollingBuffer,
    fuse,
    new_engine,
    run_stream,
    step,
    warmup,
)
from .errors import (
    AdaptationError,
    AdaptifyError,
    CheckpointError,
    ConfigParseError,
    ConfigurationError,
    CorruptHeaderError,
    InvalidInputError,
    ShapeError,
    TruncatedPayloadError,
    VersionMismatchError,
)
from .metrics import (
    DEFAULT_MAX_SPIKE_LEN,
    TraceSummary,
    accuracy,
    confusion_counts,
    flicker_count,
    label_runs,
    spike_count,
    summarize,
)
from .models import (
    Checkpoint,
    OptimizerConfig,
    TrainConfig,
    Velocity,
    checkpoint_from_bytes,
    checkpoint_to_bytes,
    dataset_accuracy,
    init_model,
    load_checkpoint,
    momentum_update,
    predict,
    predict_label,
    predict_labels,
    save_checkpoint,
    train_offline,
    zero_velocity,
)
from .numerics import (
    ForwardCache,
    Gradients,
    MlpModel,
    cross_entropy,
    finite_diff_gradient,
    mlp_backward,
    mlp_forward,
    softmax,
)
from .simulator import (
    LabeledDataset,
    LabeledStream,
    StreamConfig,
    default_drift_v1,
    generate_stream,
    generate_training_set,
    read_stream_csv,
    stream_to_csv,
    write_stream_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptationError",
    "AdaptifyError",
    "Checkpoint",
    "CheckpointError",
    "ConfigParseError",
    "ConfigurationError",
    "CorruptHeaderError",
    "DEFAULT_MAX_SPIKE_LEN",
    "DEFAULT_WARMUP_FRAMES",
    "Decision",
    "EngineState",
    "ForwardCache",
    "FusionWeights",
    "Gradients",
    "InvalidInputError",
    "LabeledDataset",
    "LabeledStream",
    "MlpModel",
    "OptimizerConfig",
    "RollingBuffer",
    "STEADY_BRANCH",
    "ShapeError",
    "StreamConfig",
    "TraceSummary",
    "TrainConfig",
    "TruncatedPayloadError",
    "Velocity",
    "VersionMismatchError",
    "WARMUP_BRANCH",
    "accuracy",
    "checkpoint_from_bytes",
    "checkpoint_to_bytes",
    "confusion_counts",
    "cross_entropy",
    "dataset_accuracy",
    "default_drift_v1",
    "finite_diff_gradient",
    "flicker_count",
    "fuse",
    "generate_stream",
    "generate_training_set",
    "init_model",
    "label_runs",
    "load_checkpoint",
    "mlp_backward",
    "mlp_forward",
    "momentum_update",
    "new_engine",
    "predict",
    "predict_label",
    "predict_labels",
    "read_stream_csv",
    "run_stream",
    "save_checkpoint",
    "softmax",
    "spike_count",
    "step",
    "stream_to_csv",
    "summarize",
    "train_offline",
    "warmup",
    "write_stream_csv",
    "zero_velocity",
]
