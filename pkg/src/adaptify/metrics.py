"""Accuracy and temporal-consistency metrics for per-frame label sequences.

A flicker is any change of predicted label between adjacent frames. A
spike is a short interior run (length <= max_spike_len) whose neighboring
runs on both sides carry the same, different label; spikes are the brief
erroneous bursts visible in per-frame trace plots.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

DEFAULT_MAX_SPIKE_LEN = 5


def _as_labels(seq, name: str) -> np.ndarray:
    arr = np.asarray(seq, dtype=np.int64)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be a 1-D sequence")
    return arr


def accuracy(preds, truth) -> float:
    """Fraction of positions where preds equals truth."""
    p = _as_labels(preds, "preds")
    t = _as_labels(truth, "truth")
    if p.size == 0 or p.size != t.size:
        raise InvalidInputError(
            f"preds and truth must be equal non-zero lengths, got {p.size} and {t.size}"
        )
    return float(np.mean(p == t))


def confusion_counts(preds, truth, positive_class: int) -> tuple[int, int, int, int]:
    """(tp, fp, tn, fn) treating positive_class one-vs-rest."""
    p = _as_labels(preds, "preds")
    t = _as_labels(truth, "truth")
    if p.size == 0 or p.size != t.size:
        raise InvalidInputError(
            f"preds and truth must be equal non-zero lengths, got {p.size} and {t.size}"
        )
    pred_pos = p == positive_class
    true_pos = t == positive_class
    tp = int(np.sum(pred_pos & true_pos))
    fp = int(np.sum(pred_pos & ~true_pos))
    tn = int(np.sum(~pred_pos & ~true_pos))
    fn = int(np.sum(~pred_pos & true_pos))
    return tp, fp, tn, fn


def flicker_count(preds) -> int:
    """Number of adjacent positions whose labels differ."""
    p = _as_labels(preds, "preds")
    if p.size == 0:
        raise InvalidInputError("flicker_count needs a non-empty sequence")
    return int(np.sum(p[1:] != p[:-1]))


def label_runs(preds) -> list[tuple[int, int]]:
    """Maximal constant runs as (label, length), in order."""
    p = _as_labels(preds, "preds")
    if p.size == 0:
        raise InvalidInputError("label_runs needs a non-empty sequence")
    runs = []
    start = 0
    for i in range(1, p.size):
        if p[i] != p[start]:
            runs.append((int(p[start]), i - start))
            start = i
    runs.append((int(p[start]), p.size - start))
    return runs


def spike_count(preds, max_spike_len: int = DEFAULT_MAX_SPIKE_LEN) -> int:
    """Interior runs of length <= max_spike_len flanked by a common other label."""
    if max_spike_len < 1:
        raise InvalidInputError(f"max_spike_len must be >= 1, got {max_spike_len}")
    runs = label_runs(preds)
    count = 0
    for i in range(1, len(runs) - 1):
        label, length = runs[i]
        if length <= max_spike_len and runs[i - 1][0] == runs[i + 1][0]:
            count += 1
    return count


@dataclass
class TraceSummary:
    """Aggregate view of one prediction trace.

    tp/fp/tn/fn refer to positive_class one-vs-rest; per_class holds the
    same four counts for every class seen in preds or truth.
    """

    n_frames: int
    n_correct: int
    accuracy: float
    flicker_count: int
    spike_count: int
    mean_loss: float
    positive_class: int
    tp: int
    fp: int
    tn: int
    fn: int
    per_class: dict[int, tuple[int, int, int, int]] = field(default_factory=dict)


def summarize(
    preds,
    truth,
    losses,
    max_spike_len: int = DEFAULT_MAX_SPIKE_LEN,
    positive_class: int = 1,
) -> TraceSummary:
    """Full TraceSummary for a prediction trace with per-frame losses."""
    p = _as_labels(preds, "preds")
    t = _as_labels(truth, "truth")
    loss_arr = np.asarray(losses, dtype=np.float64)
    if loss_arr.shape != p.shape:
        raise InvalidInputError(
            f"losses length {loss_arr.size} does not match {p.size} predictions"
        )
    acc = accuracy(p, t)
    classes = sorted(set(p.tolist()) | set(t.tolist()))
    per_class = {c: confusion_counts(p, t, c) for c in classes}
    tp, fp, tn, fn = confusion_counts(p, t, positive_class)
    return TraceSummary(
        n_frames=int(p.size),
        n_correct=int(np.sum(p == t)),
        accuracy=acc,
        flicker_count=flicker_count(p),
        spike_count=spike_count(p, max_spike_len),
        mean_loss=float(np.mean(loss_arr)),
        positive_class=int(positive_class),
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        per_class=per_class,
    )
