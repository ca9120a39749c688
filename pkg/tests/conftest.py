"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from adaptify import Checkpoint, MlpModel, init_model


def make_model(layer_dims, seed: int = 0) -> MlpModel:
    return init_model(layer_dims, np.random.default_rng(seed))


def layers_of(model: MlpModel):
    """Plain (weight, bias) pairs for the independent reference script."""
    return [(w.copy(), b.copy()) for w, b in zip(model.weights, model.biases)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_pair():
    """A small frozen main/aux model pair over 3 features, 2 classes."""
    main = make_model((3, 4, 2), seed=10)
    aux = make_model((3, 3, 2), seed=20)
    return Checkpoint(main, training_seed=10), Checkpoint(aux, training_seed=20)


@pytest.fixture
def write_config(tmp_path):
    def _write(text: str, name: str = "test.cfg") -> Path:
        path = tmp_path / name
        path.write_text(text)
        return path

    return _write
