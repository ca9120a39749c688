"""Experiment orchestration behind the CLI.

Config files are line-based ``key = value`` text; ``#`` starts a comment.
Paths inside configs are resolved against the current working directory.

File contracts:

    trace CSV    frame_idx, truth, main_pred, aux_pred, fused_pred,
                 p_main_0..p_main_{C-1}, p_aux_0..p_aux_{C-1}, loss, branch
                 (floats printed with 9 significant digits)
    stream CSV   frame_idx, label, f0..f{d-1}
    summary CSV  run identification columns followed by the metric block
                 (n_frames .. fn), one row per run

Summaries are always recomputed from the formatted trace values, so
re-deriving metrics from a trace file reproduces the stored summary
exactly. Wall-clock durations are logged, never written to CSV, keeping
every output file byte-deterministic for a given config and seed.
"""

from __future__ import annotations

import csv
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from statistics import median

import numpy as np

from . import engine as eng
from .errors import ConfigParseError, ConfigurationError, InvalidInputError, ShapeError
from .metrics import DEFAULT_MAX_SPIKE_LEN, TraceSummary, summarize
from .models import (
    Checkpoint,
    OptimizerConfig,
    TrainConfig,
    checkpoint_to_bytes,
    dataset_accuracy,
    load_checkpoint,
    predict,
    train_offline,
)
from .simulator import (
    LabeledStream,
    StreamConfig,
    generate_stream,
    generate_training_set,
    read_stream_csv,
    stream_to_csv,
)

log = logging.getLogger(__name__)

THREADS_ENV_VAR = "ADAPTIFY_THREADS"

MODE_ADAPTIFY = "adaptify"
MODE_BASELINE_MAIN = "baseline_main"
MODE_BASELINE_AUX = "baseline_aux"
BASELINE_BRANCH = "baseline"

ID_COLUMNS = ["mode", "alpha", "beta", "k", "gamma", "lambda", "warmup", "seed"]
METRIC_COLUMNS = [
    "n_frames",
    "n_correct",
    "accuracy",
    "flicker_count",
    "spike_count",
    "mean_loss",
    "tp",
    "fp",
    "tn",
    "fn",
]
SUMMARY_COLUMNS = ID_COLUMNS + METRIC_COLUMNS
MEDIAN_COLUMNS = [
    "alpha",
    "beta",
    "k",
    "n_seeds",
    "median_accuracy",
    "median_flicker_count",
    "median_spike_count",
    "median_mean_loss",
]


def fmt_float(v: float) -> str:
    """The 9-significant-digit float format used in every CSV."""
    return f"{v:.9g}"


def round_trip(v: float) -> float:
    """Value as it will read back from a CSV cell."""
    return float(fmt_float(v))


# ---------------------------------------------------------------------------
# key = value config files
# ---------------------------------------------------------------------------

_REQUIRED = object()


class ConfigMap:
    """Parsed config with typed accessors that report file and line on error."""

    def __init__(self, values: dict[str, str], lines: dict[str, int], path: Path):
        self._values = values
        self._lines = lines
        self.path = path

    def has(self, key: str) -> bool:
        return key in self._values

    def _fail(self, key: str, message: str):
        raise ConfigParseError(self.path, self._lines.get(key, 0), message)

    def _raw(self, key: str, default):
        if key in self._values:
            return self._values[key]
        if default is _REQUIRED:
            raise ConfigParseError(self.path, 0, f"missing required key {key!r}")
        return default

    def get_str(self, key: str, default=_REQUIRED) -> str:
        return self._raw(key, default)

    def get_int(self, key: str, default=_REQUIRED) -> int:
        value = self._raw(key, default)
        if not isinstance(value, str):
            return value
        try:
            return int(value)
        except ValueError:
            self._fail(key, f"{key} must be an integer, got {value!r}")

    def get_float(self, key: str, default=_REQUIRED) -> float:
        value = self._raw(key, default)
        if not isinstance(value, str):
            return value
        try:
            return float(value)
        except ValueError:
            self._fail(key, f"{key} must be a number, got {value!r}")

    def get_bool(self, key: str, default=_REQUIRED) -> bool:
        value = self._raw(key, default)
        if not isinstance(value, str):
            return value
        lowered = value.lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        self._fail(key, f"{key} must be a boolean, got {value!r}")

    def _split_list(self, value: str) -> list[str]:
        parts = [p for chunk in value.split(",") for p in chunk.split()]
        return [p for p in parts if p]

    def get_float_list(self, key: str, default=_REQUIRED) -> list[float]:
        value = self._raw(key, default)
        if not isinstance(value, str):
            return value
        parts = self._split_list(value)
        if not parts:
            self._fail(key, f"{key} must hold at least one number")
        try:
            return [float(p) for p in parts]
        except ValueError:
            self._fail(key, f"{key} must be a list of numbers, got {value!r}")

    def get_int_list(self, key: str, default=_REQUIRED) -> list[int]:
        value = self._raw(key, default)
        if not isinstance(value, str):
            return value
        parts = self._split_list(value)
        if not parts:
            self._fail(key, f"{key} must hold at least one integer")
        try:
            return [int(p) for p in parts]
        except ValueError:
            self._fail(key, f"{key} must be a list of integers, got {value!r}")

    def get_vectors(self, key: str) -> list[list[float]]:
        """Semicolon-separated vectors, each a list of numbers."""
        value = self._raw(key, _REQUIRED)
        vectors = []
        for chunk in value.split(";"):
            parts = self._split_list(chunk)
            if not parts:
                self._fail(key, f"{key} has an empty vector")
            try:
                vectors.append([float(p) for p in parts])
            except ValueError:
                self._fail(key, f"{key} must hold numeric vectors, got {chunk!r}")
        return vectors


def parse_kv_file(path) -> ConfigMap:
    """Parse a ``key = value`` file; raises ConfigParseError with diagnostics."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigParseError(path, 0, f"cannot read config file: {exc}") from exc
    values: dict[str, str] = {}
    lines: dict[str, int] = {}
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(path, line_no, f"expected 'key = value', got {raw_line.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigParseError(path, line_no, "empty key")
        if key in values:
            raise ConfigParseError(path, line_no, f"duplicate key {key!r} (first on line {lines[key]})")
        values[key] = value
        lines[key] = line_no
    return ConfigMap(values, lines, path)


# ---------------------------------------------------------------------------
# building domain configs out of key = value maps
# ---------------------------------------------------------------------------

def _axis0_means(class_count: int, feature_dim: int, separation: float) -> np.ndarray:
    """Class means spaced ``separation`` apart along axis 0, centered at zero."""
    means = np.zeros((class_count, feature_dim))
    for c in range(class_count):
        means[c, 0] = (c - (class_count - 1) / 2.0) * separation
    return means


def _class_geometry(cfg: ConfigMap) -> tuple[int, int, np.ndarray, np.ndarray]:
    d = cfg.get_int("feature_dim")
    n_classes = cfg.get_int("class_count")
    if cfg.has("class_means"):
        means = np.asarray(cfg.get_vectors("class_means"), dtype=np.float64)
    else:
        means = _axis0_means(n_classes, d, cfg.get_float("mean_separation", 2.0))
    spread = cfg.get_float_list("class_spread", [1.0])
    if len(spread) == 1:
        spread = spread * n_classes
    return d, n_classes, means, np.asarray(spread, dtype=np.float64)


def build_stream_config(cfg: ConfigMap, seed_override: int | None = None) -> StreamConfig:
    """StreamConfig from inline simulator keys; --seed wins over the file."""
    d, n_classes, means, spread = _class_geometry(cfg)
    if cfg.has("drift_vector"):
        vectors = cfg.get_vectors("drift_vector")
        drift = np.asarray(vectors[0], dtype=np.float64)
    else:
        drift = np.zeros(d)
        drift[0] = cfg.get_float("drift_displacement", 0.0)
    seed = seed_override if seed_override is not None else cfg.get_int("seed", 0)
    try:
        return StreamConfig(
            feature_dim=d,
            class_count=n_classes,
            class_means=means,
            class_spread=spread,
            segment_length_range=(cfg.get_int("segment_min"), cfg.get_int("segment_max")),
            stream_length=cfg.get_int("stream_length"),
            drift_vector=drift,
            noise_std=cfg.get_float("noise_std", 0.0),
            seed=seed,
        )
    except (InvalidInputError, ShapeError, ValueError) as exc:
        raise ConfigParseError(cfg.path, 0, f"invalid stream settings: {exc}") from exc


def build_dataset_config(cfg: ConfigMap) -> StreamConfig:
    """Minimal StreamConfig for dataset generation (no stream keys needed)."""
    d, n_classes, means, spread = _class_geometry(cfg)
    return StreamConfig(
        feature_dim=d,
        class_count=n_classes,
        class_means=means,
        class_spread=spread,
        segment_length_range=(1, 1),
        stream_length=1,
        drift_vector=np.zeros(d),
        noise_std=0.0,
        seed=0,
    )


# ---------------------------------------------------------------------------
# trace rows and CSV output
# ---------------------------------------------------------------------------

@dataclass
class TraceRow:
    frame_idx: int
    truth: int
    main_pred: int
    aux_pred: int
    fused_pred: int
    p_main: np.ndarray
    p_aux: np.ndarray
    loss: float
    branch: str


@dataclass
class RunRecord:
    """One run's outputs: identification, trace, summary, wall-clock time."""

    mode: str
    alpha: float
    beta: float
    k: int
    gamma: float
    lam: float
    warmup: int
    seed: int
    trace: list[TraceRow]
    summary: TraceSummary
    duration_seconds: float


def trace_header(n_classes: int) -> list[str]:
    return (
        ["frame_idx", "truth", "main_pred", "aux_pred", "fused_pred"]
        + [f"p_main_{c}" for c in range(n_classes)]
        + [f"p_aux_{c}" for c in range(n_classes)]
        + ["loss", "branch"]
    )


def trace_csv_text(rows: list[TraceRow]) -> str:
    if not rows:
        raise InvalidInputError("cannot serialize an empty trace")
    n_classes = rows[0].p_main.shape[0]
    out = [",".join(trace_header(n_classes))]
    for r in rows:
        cells = [
            str(r.frame_idx),
            str(r.truth),
            str(r.main_pred),
            str(r.aux_pred),
            str(r.fused_pred),
        ]
        cells += [fmt_float(v) for v in r.p_main]
        cells += [fmt_float(v) for v in r.p_aux]
        cells += [fmt_float(r.loss), r.branch]
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


def parse_trace_csv(path) -> tuple[list[int], list[int], list[float]]:
    """(fused_preds, truths, losses) read back from a trace file."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigParseError(path, 1, "empty trace file") from None
        try:
            i_truth = header.index("truth")
            i_fused = header.index("fused_pred")
            i_loss = header.index("loss")
        except ValueError:
            raise ConfigParseError(path, 1, f"unexpected trace header {header!r}") from None
        preds: list[int] = []
        truths: list[int] = []
        losses: list[float] = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ConfigParseError(path, line_no, "column count mismatch")
            try:
                preds.append(int(row[i_fused]))
                truths.append(int(row[i_truth]))
                losses.append(float(row[i_loss]))
            except ValueError as exc:
                raise ConfigParseError(path, line_no, f"bad numeric value: {exc}") from None
    if not preds:
        raise ConfigParseError(path, 2, "trace file has no rows")
    return preds, truths, losses


def summary_from_trace(
    rows: list[TraceRow],
    max_spike_len: int = DEFAULT_MAX_SPIKE_LEN,
    positive_class: int = 1,
) -> TraceSummary:
    """Summary computed from the values as they will appear in the file."""
    preds = [r.fused_pred for r in rows]
    truths = [r.truth for r in rows]
    losses = [round_trip(r.loss) for r in rows]
    return summarize(preds, truths, losses, max_spike_len=max_spike_len, positive_class=positive_class)


def summary_row_cells(record: RunRecord) -> list[str]:
    s = record.summary
    return [
        record.mode,
        fmt_float(record.alpha),
        fmt_float(record.beta),
        str(record.k),
        fmt_float(record.gamma),
        fmt_float(record.lam),
        str(record.warmup),
        str(record.seed),
        str(s.n_frames),
        str(s.n_correct),
        fmt_float(s.accuracy),
        str(s.flicker_count),
        str(s.spike_count),
        fmt_float(s.mean_loss),
        str(s.tp),
        str(s.fp),
        str(s.tn),
        str(s.fn),
    ]


def summary_csv_text(records: list[RunRecord]) -> str:
    out = [",".join(SUMMARY_COLUMNS)]
    out += [",".join(summary_row_cells(r)) for r in records]
    return "\n".join(out) + "\n"


def _write_text_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_bytes_atomic(path: Path, blob: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# running streams
# ---------------------------------------------------------------------------

def run_adaptify(
    main_ckpt: Checkpoint,
    aux_ckpt: Checkpoint,
    stream: LabeledStream,
    weights: eng.FusionWeights,
    k: int,
    optimizer: OptimizerConfig,
    warmup_frames: int,
    max_spike_len: int = DEFAULT_MAX_SPIKE_LEN,
    positive_class: int = 1,
    seed: int = 0,
) -> RunRecord:
    """Warm up on the leading frames, then evaluate the rest of the stream."""
    t_total = len(stream)
    if not 0 <= warmup_frames < t_total:
        raise ConfigurationError(
            f"warmup must leave at least one evaluation frame: warmup={warmup_frames}, "
            f"stream length={t_total}"
        )
    started = time.perf_counter()
    state = eng.new_engine(main_ckpt, aux_ckpt, weights, k, optimizer)
    state = eng.warmup(state, stream.frames[:warmup_frames])
    state, decisions = eng.run_stream(state, stream.frames[warmup_frames:])

    rows = []
    for i, d in enumerate(decisions):
        rows.append(
            TraceRow(
                frame_idx=warmup_frames + i,
                truth=int(stream.labels[warmup_frames + i]),
                main_pred=int(np.argmax(d.y_main)),
                aux_pred=int(np.argmax(d.y_aux)),
                fused_pred=d.label,
                p_main=d.y_main,
                p_aux=d.y_aux,
                loss=d.loss,
                branch=d.branch,
            )
        )
    record = RunRecord(
        mode=MODE_ADAPTIFY,
        alpha=weights.alpha,
        beta=weights.beta,
        k=k,
        gamma=optimizer.gamma,
        lam=optimizer.lam,
        warmup=warmup_frames,
        seed=seed,
        trace=rows,
        summary=summary_from_trace(rows, max_spike_len, positive_class),
        duration_seconds=time.perf_counter() - started,
    )
    log.info("%s run finished in %.3fs", record.mode, record.duration_seconds)
    return record


def run_baseline(
    mode: str,
    main_ckpt: Checkpoint,
    aux_ckpt: Checkpoint,
    stream: LabeledStream,
    warmup_frames: int,
    config_echo: RunRecord | None = None,
    max_spike_len: int = DEFAULT_MAX_SPIKE_LEN,
    positive_class: int = 1,
    seed: int = 0,
) -> RunRecord:
    """Frozen single-model run over the same evaluation window.

    The emitting model is main or aux per ``mode``; the loss column records
    the model's own cross-entropy against its emitted label (a confidence
    measure, since no adaptation happens here).
    """
    if mode not in (MODE_BASELINE_MAIN, MODE_BASELINE_AUX):
        raise ConfigurationError(f"unknown baseline mode {mode!r}")
    t_total = len(stream)
    if not 0 <= warmup_frames < t_total:
        raise ConfigurationError(
            f"warmup must leave at least one evaluation frame: warmup={warmup_frames}, "
            f"stream length={t_total}"
        )
    started = time.perf_counter()
    rows = []
    from .numerics import cross_entropy  # local import avoids a cycle at module load

    for i in range(warmup_frames, t_total):
        p_main = predict(main_ckpt.model, stream.frames[i])
        p_aux = predict(aux_ckpt.model, stream.frames[i])
        emitted = p_main if mode == MODE_BASELINE_MAIN else p_aux
        label = int(np.argmax(emitted))
        rows.append(
            TraceRow(
                frame_idx=i,
                truth=int(stream.labels[i]),
                main_pred=int(np.argmax(p_main)),
                aux_pred=int(np.argmax(p_aux)),
                fused_pred=label,
                p_main=p_main,
                p_aux=p_aux,
                loss=cross_entropy(emitted, label),
                branch=BASELINE_BRANCH,
            )
        )
    echo = config_echo
    record = RunRecord(
        mode=mode,
        alpha=echo.alpha if echo else 1.0,
        beta=echo.beta if echo else 1.0,
        k=echo.k if echo else 1,
        gamma=echo.gamma if echo else 0.9,
        lam=echo.lam if echo else 0.001,
        warmup=warmup_frames,
        seed=seed,
        trace=rows,
        summary=summary_from_trace(rows, max_spike_len, positive_class),
        duration_seconds=time.perf_counter() - started,
    )
    log.info("%s run finished in %.3fs", record.mode, record.duration_seconds)
    return record


# ---------------------------------------------------------------------------
# commands (argparse Namespace in, exit code out)
# ---------------------------------------------------------------------------

def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_train(args) -> int:
    cfg = parse_kv_file(args.config)
    out = _out_dir(args)
    data_cfg = build_dataset_config(cfg)
    n_per_class = cfg.get_int("n_per_class", 500)
    n_val_per_class = cfg.get_int("n_val_per_class", 200)
    data_seed = cfg.get_int("data_seed", 0)
    train_set = generate_training_set(data_cfg, n_per_class, data_seed)
    val_set = generate_training_set(data_cfg, n_val_per_class, data_seed + 1)

    hidden = cfg.get_int_list("hidden_dims", [16])
    dims = (data_cfg.feature_dim, *hidden, data_cfg.class_count)
    seed = args.seed if args.seed is not None else cfg.get_int("seed", 0)
    train_cfg = TrainConfig(
        epochs=cfg.get_int("epochs", 30),
        learning_rate=cfg.get_float("learning_rate", 0.05),
        momentum=cfg.get_float("momentum", 0.9),
        seed=seed,
        shuffle=cfg.get_bool("shuffle", True),
    )
    started = time.perf_counter()
    ckpt = train_offline(train_set.features, train_set.labels, dims, train_cfg)
    log.info("training finished in %.3fs", time.perf_counter() - started)

    ckpt_path = out / cfg.get_str("checkpoint_name", "model.ckpt")
    _write_bytes_atomic(ckpt_path, checkpoint_to_bytes(ckpt))

    train_acc = dataset_accuracy(ckpt.model, train_set.features, train_set.labels)
    val_acc = dataset_accuracy(ckpt.model, val_set.features, val_set.labels)
    n_train = len(train_set)
    n_val = len(val_set)
    print(f"checkpoint = {ckpt_path}")
    print(f"train_accuracy = {fmt_float(train_acc)} ({round(train_acc * n_train)}/{n_train})")
    print(f"val_accuracy = {fmt_float(val_acc)} ({round(val_acc * n_val)}/{n_val})")
    return 0


def cmd_simulate(args) -> int:
    cfg = parse_kv_file(args.config)
    out = _out_dir(args)
    stream_cfg = build_stream_config(cfg, args.seed)
    stream = generate_stream(stream_cfg)
    path = out / cfg.get_str("stream_name", "stream.csv")
    _write_text_atomic(path, stream_to_csv(stream))
    print(f"stream = {path}")
    print(f"frames = {len(stream)}")
    return 0


def _load_run_inputs(cfg: ConfigMap, args) -> tuple[Checkpoint, Checkpoint, LabeledStream, int]:
    main_ckpt = load_checkpoint(cfg.get_str("main_checkpoint"))
    aux_ckpt = load_checkpoint(cfg.get_str("aux_checkpoint"))
    if cfg.has("stream_csv"):
        stream = read_stream_csv(cfg.get_str("stream_csv"))
        seed = args.seed if args.seed is not None else cfg.get_int("seed", 0)
    else:
        stream_cfg = build_stream_config(cfg, args.seed)
        stream = generate_stream(stream_cfg)
        seed = stream_cfg.seed
    return main_ckpt, aux_ckpt, stream, seed


def _warmup_frames(cfg: ConfigMap, args) -> int:
    if getattr(args, "warmup", None) is not None:
        return args.warmup
    return cfg.get_int("warmup", eng.DEFAULT_WARMUP_FRAMES)


def cmd_run(args) -> int:
    cfg = parse_kv_file(args.config)
    out = _out_dir(args)
    main_ckpt, aux_ckpt, stream, seed = _load_run_inputs(cfg, args)
    warmup_frames = _warmup_frames(cfg, args)
    weights = eng.FusionWeights(cfg.get_float("alpha", 1.0), cfg.get_float("beta", 1.0))
    optimizer = OptimizerConfig(
        gamma=cfg.get_float("gamma", 0.9),
        lam=cfg.get_float("lambda", 0.001),
    )
    max_spike = cfg.get_int("max_spike_len", DEFAULT_MAX_SPIKE_LEN)
    positive = cfg.get_int("positive_class", 1)

    record = run_adaptify(
        main_ckpt,
        aux_ckpt,
        stream,
        weights,
        cfg.get_int("k", 1),
        optimizer,
        warmup_frames,
        max_spike,
        positive,
        seed,
    )
    records = [record]
    _write_text_atomic(out / "trace.csv", trace_csv_text(record.trace))

    baseline = getattr(args, "baseline", "none") or "none"
    if baseline != "none":
        mode = MODE_BASELINE_MAIN if baseline == "main" else MODE_BASELINE_AUX
        base = run_baseline(
            mode, main_ckpt, aux_ckpt, stream, warmup_frames, record, max_spike, positive, seed
        )
        records.append(base)
        _write_text_atomic(out / f"trace_{mode}.csv", trace_csv_text(base.trace))

    _write_text_atomic(out / "summary.csv", summary_csv_text(records))
    for rec in records:
        s = rec.summary
        print(
            f"{rec.mode}: accuracy = {fmt_float(s.accuracy)} ({s.n_correct}/{s.n_frames}), "
            f"flicker = {s.flicker_count}, spikes = {s.spike_count}"
        )
    return 0


def grid_threads(n_cells: int) -> int:
    """Worker count for grid execution, capped by ADAPTIFY_THREADS."""
    cap = os.environ.get(THREADS_ENV_VAR, "")
    try:
        cap_value = int(cap) if cap else (os.cpu_count() or 1)
    except ValueError:
        log.warning("ignoring non-integer %s=%r", THREADS_ENV_VAR, cap)
        cap_value = os.cpu_count() or 1
    return max(1, min(n_cells, cap_value))


def median_rows(records: list[RunRecord]) -> list[list[str]]:
    """One aggregate row per (alpha, beta, k) cell, medians over seeds."""
    groups: dict[tuple[float, float, int], list[RunRecord]] = {}
    order: list[tuple[float, float, int]] = []
    for rec in records:
        key = (rec.alpha, rec.beta, rec.k)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(rec)
    rows = []
    for key in order:
        group = groups[key]
        rows.append(
            [
                fmt_float(key[0]),
                fmt_float(key[1]),
                str(key[2]),
                str(len(group)),
                fmt_float(median(r.summary.accuracy for r in group)),
                fmt_float(median(float(r.summary.flicker_count) for r in group)),
                fmt_float(median(float(r.summary.spike_count) for r in group)),
                fmt_float(median(r.summary.mean_loss for r in group)),
            ]
        )
    return rows


def cmd_grid(args) -> int:
    cfg = parse_kv_file(args.config)
    out = _out_dir(args)
    if cfg.has("stream_csv"):
        raise ConfigurationError("grid runs regenerate streams per seed; use inline stream keys")
    main_ckpt = load_checkpoint(cfg.get_str("main_checkpoint"))
    aux_ckpt = load_checkpoint(cfg.get_str("aux_checkpoint"))
    alphas = cfg.get_float_list("alpha_grid", [1.0])
    betas = cfg.get_float_list("beta_grid", [1.0, 0.8, 0.5])
    ks = cfg.get_int_list("k_grid", [1, 3, 4])
    seeds = cfg.get_int_list("seeds", [1])
    warmup_frames = _warmup_frames(cfg, args)
    optimizer = OptimizerConfig(
        gamma=cfg.get_float("gamma", 0.9),
        lam=cfg.get_float("lambda", 0.001),
    )
    max_spike = cfg.get_int("max_spike_len", DEFAULT_MAX_SPIKE_LEN)
    positive = cfg.get_int("positive_class", 1)

    traces_dir = out / "traces"
    traces_dir.mkdir(parents=True, exist_ok=True)
    cells = [(a, b, k, s) for a in alphas for b in betas for k in ks for s in seeds]

    def run_cell(cell: tuple[float, float, int, int]) -> RunRecord:
        alpha, beta, k, seed = cell
        stream = generate_stream(build_stream_config(cfg, seed))
        record = run_adaptify(
            main_ckpt,
            aux_ckpt,
            stream,
            eng.FusionWeights(alpha, beta),
            k,
            optimizer,
            warmup_frames,
            max_spike,
            positive,
            seed,
        )
        name = f"trace_a{alpha:g}_b{beta:g}_k{k}_s{seed}.csv"
        _write_text_atomic(traces_dir / name, trace_csv_text(record.trace))
        return record

    workers = grid_threads(len(cells))
    started = time.perf_counter()
    if workers == 1:
        records = [run_cell(cell) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run_cell, cells))
    log.info("grid of %d cells finished in %.3fs", len(cells), time.perf_counter() - started)

    _write_text_atomic(out / "runs.csv", summary_csv_text(records))
    med_text = ",".join(MEDIAN_COLUMNS) + "\n"
    med_text += "".join(",".join(row) + "\n" for row in median_rows(records))
    _write_text_atomic(out / "medians.csv", med_text)
    print(f"runs = {out / 'runs.csv'} ({len(records)} rows)")
    print(f"medians = {out / 'medians.csv'}")
    return 0


def cmd_metrics(args) -> int:
    preds, truths, losses = parse_trace_csv(args.trace)
    summary = summarize(
        preds,
        truths,
        losses,
        max_spike_len=args.max_spike_len,
        positive_class=args.positive_class,
    )
    cells = [
        str(summary.n_frames),
        str(summary.n_correct),
        fmt_float(summary.accuracy),
        str(summary.flicker_count),
        str(summary.spike_count),
        fmt_float(summary.mean_loss),
        str(summary.tp),
        str(summary.fp),
        str(summary.tn),
        str(summary.fn),
    ]
    text = ",".join(METRIC_COLUMNS) + "\n" + ",".join(cells) + "\n"
    print(text, end="")
    if args.out is not None:
        out = _out_dir(args)
        _write_text_atomic(out / "summary.csv", text)
    return 0
