"""Adapter kernel tests: identity start, gradients, counting, training."""

from __future__ import annotations

import math

import numpy as np
import pytest

from music_arena.adapter import (
    CONV1X1,
    AdamState,
    AdapterConfig,
    AdapterParams,
    TrainConfig,
    adapter_backward,
    adapter_forward,
    conv1x1_forward,
    gelu,
    gelu_grad,
    mse_loss_and_grads,
    param_count,
    train,
    train_step,
)
from music_arena.errors import InvalidArgumentError, TrainingError


def _params(d=3, b=2, seed=0) -> AdapterParams:
    rng = np.random.default_rng(seed)
    return AdapterParams(
        down_weights=rng.normal(size=(d, b)),
        down_bias=rng.normal(size=b),
        up_weights=rng.normal(size=(b, d)),
        up_bias=rng.normal(size=d),
        reduction_factor=max(1, d // b),
    )


class TestForward:
    def test_zero_up_path_is_identity(self):
        cfg = AdapterConfig(d=6, r=3)
        params = AdapterParams.initialize(cfg, seed=1)
        x = np.random.default_rng(2).normal(size=(5, 6))
        assert np.array_equal(adapter_forward(x, params), x)

    def test_hand_computed_single_position(self):
        params = AdapterParams(
            down_weights=np.array([[0.3], [-0.5]]),
            down_bias=np.array([0.1]),
            up_weights=np.array([[0.7, -0.2]]),
            up_bias=np.array([0.05, -0.04]),
            reduction_factor=2,
        )
        x = np.array([1.0, 2.0])
        # Scalar arithmetic, independent of the vectorised path.
        hidden = 1.0 * 0.3 + 2.0 * -0.5 + 0.1
        activated = 0.5 * hidden * (1.0 + math.erf(hidden / math.sqrt(2.0)))
        expected = np.array(
            [1.0 + activated * 0.7 + 0.05, 2.0 + activated * -0.2 - 0.04]
        )
        assert np.allclose(adapter_forward(x, params), expected, atol=1e-15)

    def test_batch_equals_per_position_loop(self):
        params = _params(d=4, b=2, seed=3)
        x = np.random.default_rng(4).normal(size=(7, 4))
        batched = adapter_forward(x, params)
        looped = np.stack([adapter_forward(x[i], params) for i in range(7)])
        # BLAS may reassociate sums between the matrix and vector paths.
        assert np.allclose(batched, looped, rtol=1e-12, atol=1e-12)

    def test_leading_dims_flattened(self):
        params = _params(d=3, b=2)
        x = np.random.default_rng(5).normal(size=(2, 5, 3))
        out = adapter_forward(x, params)
        assert out.shape == x.shape
        assert np.allclose(out[1, 4], adapter_forward(x[1, 4], params))

    def test_conv1x1_agrees_with_dense_on_flattened_positions(self):
        params = _params(d=4, b=2, seed=6)
        fmap = np.random.default_rng(7).normal(size=(4, 3, 5))  # channels first
        conv_out = conv1x1_forward(fmap, params)
        dense_out = adapter_forward(fmap.reshape(4, -1).T, params).T.reshape(4, 3, 5)
        assert np.array_equal(conv_out, dense_out)

    def test_shape_mismatch_rejected(self):
        params = _params(d=3, b=2)
        with pytest.raises(InvalidArgumentError):
            adapter_forward(np.ones((2, 4)), params)
        with pytest.raises(InvalidArgumentError):
            conv1x1_forward(np.ones((4, 2, 2)), params)


class TestBackward:
    def test_zero_upstream_grad_zero_everywhere(self):
        params = _params()
        x = np.random.default_rng(8).normal(size=(4, 3))
        grad_x, grads = adapter_backward(x, params, np.zeros_like(x))
        assert np.array_equal(grad_x, np.zeros_like(x))
        for tensor in grads.tensors().values():
            assert np.array_equal(tensor, np.zeros_like(tensor))

    def test_zero_adapter_passes_upstream_through(self):
        cfg = AdapterConfig(d=5, r=5)
        params = AdapterParams.initialize(cfg, seed=9)
        params.down_weights[:] = 0.0
        params.up_weights[:] = 0.0
        x = np.random.default_rng(10).normal(size=(3, 5))
        upstream = np.random.default_rng(11).normal(size=(3, 5))
        grad_x, _ = adapter_backward(x, params, upstream)
        assert np.array_equal(grad_x, upstream)

    @pytest.mark.parametrize("seed", range(100))
    def test_finite_difference_check(self, seed):
        rng = np.random.default_rng(seed)
        d, b, n = 3, 2, 2
        params = AdapterParams(
            down_weights=rng.normal(size=(d, b)),
            down_bias=rng.normal(size=b),
            up_weights=rng.normal(size=(b, d)),
            up_bias=rng.normal(size=d),
            reduction_factor=1,
        )
        x = rng.normal(size=(n, d))
        w = rng.normal(size=(n, d))  # fixed linear readout

        def loss(p: AdapterParams, xs: np.ndarray) -> float:
            return float(np.sum(adapter_forward(xs, p) * w))

        grad_x, grads = adapter_backward(x, params, w)
        h = 1e-6

        def check(analytic: float, plus: float, minus: float) -> None:
            numeric = (plus - minus) / (2.0 * h)
            scale = max(abs(analytic), abs(numeric), 1e-6)
            assert abs(analytic - numeric) / scale < 1e-4

        for name, tensor in params.tensors().items():
            analytic_tensor = grads.tensors()[name]
            it = np.nditer(tensor, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                original = tensor[idx]
                tensor[idx] = original + h
                plus = loss(params, x)
                tensor[idx] = original - h
                minus = loss(params, x)
                tensor[idx] = original
                check(float(analytic_tensor[idx]), plus, minus)
        for idx in np.ndindex(x.shape):
            original = x[idx]
            x[idx] = original + h
            plus = loss(params, x)
            x[idx] = original - h
            minus = loss(params, x)
            x[idx] = original
            check(float(grad_x[idx]), plus, minus)

    def test_gelu_grad_matches_finite_differences(self):
        xs = np.linspace(-4.0, 4.0, 33)
        h = 1e-6
        numeric = (gelu(xs + h) - gelu(xs - h)) / (2.0 * h)
        assert np.allclose(gelu_grad(xs), numeric, atol=1e-8)

    def test_upstream_shape_mismatch_rejected(self):
        params = _params()
        with pytest.raises(InvalidArgumentError):
            adapter_backward(np.ones((2, 3)), params, np.ones((3, 3)))


class TestParamCount:
    def test_hand_arithmetic(self):
        total, _ = param_count(AdapterConfig(d=1024, r=8), n_sites=1)
        assert total == 2 * 1024 * 128 + 128 + 1024 == 263_296

    def test_reference_configuration_fraction(self):
        # Roughly two million adapter parameters against a two-billion base.
        total, fraction = param_count(
            AdapterConfig(d=2048, r=8), n_sites=2, base_params=2_000_000_000
        )
        assert total == pytest.approx(2_000_000, rel=0.06)
        assert fraction <= 0.0011

    def test_zero_sites(self):
        total, fraction = param_count(AdapterConfig(d=64, r=8), 0, base_params=10)
        assert total == 0 and fraction == 0.0

    def test_non_divisible_reduction_floors(self):
        cfg = AdapterConfig(d=10, r=3)
        assert cfg.bottleneck == 3
        cfg = AdapterConfig(d=3, r=3)
        assert cfg.bottleneck == 1


class TestTraining:
    def test_identity_task_only_decays(self):
        cfg = AdapterConfig(d=4, r=2)
        params = AdapterParams.initialize(cfg, seed=12)
        x = np.random.default_rng(13).normal(size=(8, 4))
        state = AdamState.for_params(params)
        train_cfg = TrainConfig(lr=1e-3, weight_decay=0.05)
        new_params, _, loss = train_step((x, x.copy()), params, state, train_cfg)
        assert loss == 0.0
        # Zero gradients: the only movement is the decoupled decay term.
        for name, tensor in params.tensors().items():
            expected = tensor - train_cfg.lr * train_cfg.weight_decay * tensor
            assert np.allclose(new_params.tensors()[name], expected, atol=1e-15)

    def test_zero_lr_zero_decay_is_noop(self):
        params = _params(d=4, b=2, seed=14)
        x = np.random.default_rng(15).normal(size=(6, 4))
        state = AdamState.for_params(params)
        new_params, _, _ = train_step(
            (x, x + 0.3), params, state, TrainConfig(lr=0.0, weight_decay=0.0)
        )
        for name, tensor in params.tensors().items():
            assert np.array_equal(new_params.tensors()[name], tensor)

    def test_toy_task_strictly_decreasing(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(32, 4))
        target = x @ (np.eye(4) * 1.08) + 0.05 * np.tanh(x @ rng.normal(size=(4, 4)))
        params = AdapterParams.initialize(AdapterConfig(d=4, r=2), seed=1)
        _, curve = train(x, target, params, 50, TrainConfig(lr=1e-2, weight_decay=0.0))
        losses = [loss for _, loss in curve]
        assert len(losses) == 50
        assert all(later < earlier for earlier, later in zip(losses, losses[1:]))

    def test_non_finite_loss_raises_training_error(self):
        params = _params(d=2, b=1, seed=16)
        x = np.array([[1.0, 2.0]])
        target = np.array([[np.inf, 0.0]])
        with pytest.raises(TrainingError):
            train_step((x, target), params, AdamState.for_params(params))
        with pytest.raises(TrainingError):
            mse_loss_and_grads(x, target, params)

    def test_checkpoint_round_trip(self, tmp_path):
        params = _params(d=5, b=2, seed=17)
        params.save(tmp_path / "ckpt")
        loaded = AdapterParams.load(tmp_path / "ckpt")
        for name, tensor in params.tensors().items():
            # The container stores float32; expect that precision back.
            assert np.allclose(loaded.tensors()[name], tensor, atol=1e-6)
        assert loaded.bottleneck == params.bottleneck


class TestConfig:
    def test_variant_validation(self):
        assert AdapterConfig(variant=CONV1X1, d=16, r=8).bottleneck == 2
        with pytest.raises(InvalidArgumentError):
            AdapterConfig(variant="dense3x3", d=16, r=8)
        with pytest.raises(InvalidArgumentError):
            AdapterConfig(d=4, r=8)
