"""Optimizer, offline trainer, and checkpoint format tests."""

import struct

import numpy as np
import pytest

from adaptify import (
    AdaptationError,
    Checkpoint,
    CheckpointError,
    CorruptHeaderError,
    Gradients,
    InvalidInputError,
    MlpModel,
    OptimizerConfig,
    TrainConfig,
    TruncatedPayloadError,
    VersionMismatchError,
    checkpoint_from_bytes,
    checkpoint_to_bytes,
    dataset_accuracy,
    load_checkpoint,
    momentum_update,
    predict,
    save_checkpoint,
    train_offline,
    zero_velocity,
)
from conftest import make_model


def scalar_model(w: float) -> MlpModel:
    return MlpModel((1, 2), [np.array([[w], [0.0]])], [np.zeros(2)])


def grads_like(model: MlpModel, value: float) -> Gradients:
    return Gradients(
        [np.full_like(w, value) for w in model.weights],
        [np.full_like(b, value) for b in model.biases],
    )


class TestMomentumUpdate:
    def test_two_step_hand_trace(self):
        # v1 = 0.9*0 - 0.1*2 = -0.2, w1 = 1 - 0.2 = 0.8
        # v2 = 0.9*(-0.2) - 0.1*1 = -0.28, w2 = 0.52
        cfg = OptimizerConfig(gamma=0.9, lam=0.1)
        model = scalar_model(1.0)
        vel = zero_velocity(model)
        model, vel = momentum_update(model, vel, grads_like(model, 2.0), cfg)
        assert model.weights[0][0, 0] == pytest.approx(0.8, abs=1e-15)
        assert vel.weights[0][0, 0] == pytest.approx(-0.2, abs=1e-15)
        model, vel = momentum_update(model, vel, grads_like(model, 1.0), cfg)
        assert model.weights[0][0, 0] == pytest.approx(0.52, abs=1e-15)
        assert vel.weights[0][0, 0] == pytest.approx(-0.28, abs=1e-15)

    def test_zero_gamma_is_plain_sgd(self):
        cfg = OptimizerConfig(gamma=0.0, lam=0.5)
        model = scalar_model(3.0)
        model, _ = momentum_update(model, zero_velocity(model), grads_like(model, 2.0), cfg)
        assert model.weights[0][0, 0] == pytest.approx(2.0, abs=1e-15)

    def test_descends_along_gradient(self):
        cfg = OptimizerConfig()
        model = scalar_model(1.0)
        updated, _ = momentum_update(model, zero_velocity(model), grads_like(model, 1.0), cfg)
        assert updated.weights[0][0, 0] < model.weights[0][0, 0]

    def test_inputs_not_mutated(self):
        model = scalar_model(1.0)
        vel = zero_velocity(model)
        momentum_update(model, vel, grads_like(model, 1.0), OptimizerConfig())
        assert model.weights[0][0, 0] == 1.0
        assert vel.weights[0][0, 0] == 0.0

    def test_nonfinite_gradient_raises(self):
        model = scalar_model(1.0)
        bad = grads_like(model, 1.0)
        bad.weights[0][0, 0] = np.nan
        with pytest.raises(AdaptationError):
            momentum_update(model, zero_velocity(model), bad, OptimizerConfig())

    def test_overflowing_update_raises(self):
        model = scalar_model(1.7e308)
        cfg = OptimizerConfig(gamma=0.0, lam=1.0)
        with pytest.raises(AdaptationError):
            momentum_update(model, zero_velocity(model), grads_like(model, -1.7e308), cfg)

    def test_config_validation(self):
        with pytest.raises(InvalidInputError):
            OptimizerConfig(gamma=1.0)
        with pytest.raises(InvalidInputError):
            OptimizerConfig(gamma=-0.1)
        with pytest.raises(InvalidInputError):
            OptimizerConfig(lam=0.0)


def blobs(n_per_class: int, seed: int):
    rng = np.random.default_rng(seed)
    a = rng.normal(loc=(-2.0, 0.0), scale=0.5, size=(n_per_class, 2))
    b = rng.normal(loc=(2.0, 0.0), scale=0.5, size=(n_per_class, 2))
    features = np.vstack([a, b])
    labels = np.array([0] * n_per_class + [1] * n_per_class)
    return features, labels


class TestTrainOffline:
    def test_learns_separable_blobs(self):
        features, labels = blobs(200, seed=3)
        cfg = TrainConfig(epochs=20, learning_rate=0.05, momentum=0.9, seed=5)
        ckpt = train_offline(features, labels, (2, 4, 2), cfg)
        assert dataset_accuracy(ckpt.model, features, labels) >= 0.95
        assert ckpt.training_seed == 5

    def test_epoch_loss_decreases(self):
        features, labels = blobs(200, seed=3)
        cfg = TrainConfig(epochs=10, learning_rate=0.05, momentum=0.9, seed=5)
        epoch_losses = []
        train_offline(features, labels, (2, 4, 2), cfg, on_epoch_end=lambda e, l: epoch_losses.append(l))
        assert len(epoch_losses) == 10
        assert epoch_losses[-1] < epoch_losses[0]

    def test_deterministic_given_seed(self):
        features, labels = blobs(50, seed=9)
        cfg = TrainConfig(epochs=3, learning_rate=0.02, momentum=0.9, seed=21)
        a = train_offline(features, labels, (2, 4, 2), cfg)
        b = train_offline(features, labels, (2, 4, 2), cfg)
        assert checkpoint_to_bytes(a) == checkpoint_to_bytes(b)

    def test_label_out_of_range(self):
        features, labels = blobs(10, seed=0)
        labels = labels.copy()
        labels[0] = 7
        with pytest.raises(InvalidInputError):
            train_offline(features, labels, (2, 4, 2), TrainConfig(epochs=1))

    def test_shape_mismatch(self):
        features, labels = blobs(10, seed=0)
        with pytest.raises(Exception):
            train_offline(features, labels[:-1], (2, 4, 2), TrainConfig(epochs=1))


class TestCheckpointFormat:
    def test_exact_byte_layout(self):
        # magic, u32 version, u32 dim count, dims, u64 seed, then per layer
        # row-major weights followed by biases, all little-endian f64
        model = MlpModel(
            (2, 1),
            [np.array([[1.5, -2.5]])],
            [np.array([0.25])],
        )
        blob = checkpoint_to_bytes(Checkpoint(model, training_seed=77))
        expected = (
            b"ADPT"
            + struct.pack("<I", 1)
            + struct.pack("<I", 2)
            + struct.pack("<II", 2, 1)
            + struct.pack("<Q", 77)
            + struct.pack("<3d", 1.5, -2.5, 0.25)
        )
        assert blob == expected

    def test_round_trip_identity(self):
        model = make_model((4, 7, 3), seed=42)
        ckpt = Checkpoint(model, training_seed=999)
        back = checkpoint_from_bytes(checkpoint_to_bytes(ckpt))
        assert back.training_seed == 999
        assert back.format_version == 1
        assert back.model.layer_dims == model.layer_dims
        for a, b in zip(back.model.weights, model.weights):
            np.testing.assert_array_equal(a, b)
        for a, b in zip(back.model.biases, model.biases):
            np.testing.assert_array_equal(a, b)

    def test_corrupt_magic(self):
        blob = bytearray(checkpoint_to_bytes(Checkpoint(make_model((2, 2)))))
        blob[0:4] = b"JUNK"
        with pytest.raises(CorruptHeaderError):
            checkpoint_from_bytes(bytes(blob))

    def test_version_mismatch(self):
        blob = bytearray(checkpoint_to_bytes(Checkpoint(make_model((2, 2)))))
        blob[4:8] = struct.pack("<I", 2)
        with pytest.raises(VersionMismatchError):
            checkpoint_from_bytes(bytes(blob))

    def test_truncated_header(self):
        blob = checkpoint_to_bytes(Checkpoint(make_model((2, 2))))
        with pytest.raises(TruncatedPayloadError):
            checkpoint_from_bytes(blob[:6])

    def test_truncated_payload(self):
        blob = checkpoint_to_bytes(Checkpoint(make_model((3, 4, 2))))
        with pytest.raises(TruncatedPayloadError):
            checkpoint_from_bytes(blob[:-8])

    def test_trailing_garbage(self):
        blob = checkpoint_to_bytes(Checkpoint(make_model((2, 2))))
        with pytest.raises(CheckpointError):
            checkpoint_from_bytes(blob + b"\x00")

    def test_nonfinite_payload(self):
        ckpt = Checkpoint(make_model((2, 2)))
        blob = bytearray(checkpoint_to_bytes(ckpt))
        blob[-8:] = struct.pack("<d", float("nan"))
        with pytest.raises(CheckpointError):
            checkpoint_from_bytes(bytes(blob))

    def test_absurd_dim_count_rejected(self):
        blob = b"ADPT" + struct.pack("<I", 1) + struct.pack("<I", 10**6)
        with pytest.raises(CheckpointError):
            checkpoint_from_bytes(blob)

    def test_save_load_file(self, tmp_path):
        ckpt = Checkpoint(make_model((3, 5, 2), seed=8), training_seed=8)
        path = tmp_path / "model.ckpt"
        save_checkpoint(ckpt, path)
        back = load_checkpoint(path)
        x = np.array([0.1, -0.2, 0.3])
        np.testing.assert_array_equal(predict(back.model, x), predict(ckpt.model, x))

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_checkpoint(tmp_path / "absent.ckpt")
