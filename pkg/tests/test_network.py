"""Transformation-model tests: init, forward squashing, reverse-mode
gradients against finite differences, Adam, and checkpoint round-trips."""

import numpy as np
import pytest

from pslearn import network as net

from conftest import central_difference_gradient

LB = np.array([-1.0, 0.0, 2.0])
UB = np.array([1.0, 3.0, 5.0])


def small_net(seed=0):
    return net.init_network((2, 8, 8, 3), seed=seed)


class TestInit:
    def test_deterministic(self):
        a = net.init_network((2, 256, 256, 30), seed=42)
        b = net.init_network((2, 256, 256, 30), seed=42)
        for wa, wb in zip(a.weights, b.weights):
            np.testing.assert_array_equal(wa, wb)

    def test_biases_zero(self):
        params = small_net()
        assert all(np.all(b == 0.0) for b in params.biases)

    def test_weight_magnitudes_bounded(self):
        params = net.init_network((9, 16, 4), seed=1)
        for w in params.weights:
            fan_in = w.shape[1]
            assert np.all(np.abs(w) <= 1.0 / np.sqrt(fan_in))

    def test_rejects_single_layer(self):
        with pytest.raises(ValueError):
            net.init_network((5,), seed=0)


class TestForward:
    def test_zero_params_map_to_box_midpoint(self):
        params = small_net()
        for w in params.weights:
            w[:] = 0.0
        x, _ = net.forward(params, np.array([0.3, -2.0]), LB, UB)
        np.testing.assert_allclose(x, (LB + UB) / 2.0, rtol=1e-15)

    def test_output_strictly_inside_bounds(self, rng):
        params = small_net(seed=3)
        v = rng.standard_normal((200, 2)) * 5.0
        x, _ = net.forward(params, v, LB, UB)
        assert np.all(x > LB) and np.all(x < UB)

    def test_batch_equals_independent_forwards(self, rng):
        params = small_net(seed=5)
        v = rng.standard_normal((10, 2))
        batch, _ = net.forward(params, v, LB, UB)
        singles = np.stack([net.forward(params, vi, LB, UB)[0] for vi in v])
        np.testing.assert_allclose(batch, singles, rtol=1e-15)

    def test_rejects_nonfinite_input(self):
        params = small_net()
        with pytest.raises(ValueError):
            net.forward(params, np.array([np.nan, 0.0]), LB, UB)

    def test_input_standardisation_is_affine_reparam(self, rng):
        # Standardising inputs equals shifting/scaling the latent by hand.
        offset, scale = np.array([3.0, -1.0]), np.array([2.0, 0.5])
        std = net.init_network((2, 8, 3), seed=7, input_offset=offset, input_scale=scale)
        plain = net.init_network((2, 8, 3), seed=7)
        v = rng.standard_normal((6, 2))
        a, _ = net.forward(std, v, LB, UB)
        b, _ = net.forward(plain, (v - offset) / scale, LB, UB)
        np.testing.assert_allclose(a, b, rtol=1e-15)


class TestBackward:
    def test_zero_upstream_gives_zero_gradient(self, rng):
        params = small_net(seed=2)
        v = rng.standard_normal((4, 2))
        _, cache = net.forward(params, v, LB, UB)
        gw, gb = net.backward(params, cache, np.zeros((4, 3)))
        assert all(np.all(g == 0.0) for g in gw)
        assert all(np.all(g == 0.0) for g in gb)

    def test_upstream_linearity(self, rng):
        params = small_net(seed=2)
        v = rng.standard_normal((4, 2))
        _, cache = net.forward(params, v, LB, UB)
        upstream = rng.standard_normal((4, 3))
        gw1, gb1 = net.backward(params, cache, upstream)
        gw2, gb2 = net.backward(params, cache, 2.0 * upstream)
        for g1, g2 in zip(gw1 + gb1, gw2 + gb2):
            np.testing.assert_allclose(g2, 2.0 * g1, rtol=1e-12)

    def test_matches_finite_differences(self, rng):
        lb, ub = np.full(4, -1.0), np.full(4, 2.0)
        for probe in range(5):
            params = net.init_network((3, 6, 5, 4), seed=100 + probe)
            v = rng.standard_normal((5, 3))
            target = rng.standard_normal(4)

            x, cache = net.forward(params, v, lb, ub)
            gw, gb = net.backward(params, cache, x - target)

            def loss_of(theta_flat):
                trial = params.copy()
                pos = 0
                for arrs in (trial.weights, trial.biases):
                    for arr in arrs:
                        arr[:] = theta_flat[pos : pos + arr.size].reshape(arr.shape)
                        pos += arr.size
                xt, _ = net.forward(trial, v, lb, ub)
                return 0.5 * np.sum((xt - target) ** 2)

            theta = np.concatenate(
                [a.ravel() for a in params.weights] + [a.ravel() for a in params.biases]
            )
            fd = central_difference_gradient(loss_of, theta)
            analytic = np.concatenate([g.ravel() for g in gw] + [g.ravel() for g in gb])
            np.testing.assert_allclose(analytic, fd, rtol=1e-4, atol=1e-7)

    def test_shape_mismatch_rejected(self, rng):
        params = small_net()
        _, cache = net.forward(params, rng.standard_normal((4, 2)), LB, UB)
        with pytest.raises(ValueError):
            net.backward(params, cache, np.zeros((3, 3)))


class TestAdam:
    def test_zero_gradient_keeps_params(self):
        params = small_net(seed=9)
        state = net.init_adam(params)
        grads = ([np.zeros_like(w) for w in params.weights], [np.zeros_like(b) for b in params.biases])
        new_params, new_state = net.adam_step(params, grads, state)
        for a, b in zip(params.weights, new_params.weights):
            np.testing.assert_array_equal(a, b)
        assert new_state.t == 1

    def test_first_step_is_signed_learning_rate(self):
        # With bias correction, step one moves by -lr * g / (|g| + eps).
        params = small_net(seed=4)
        lr = 1e-3
        state = net.init_adam(params, learning_rate=lr)
        grads = (
            [np.full_like(w, 0.25) for w in params.weights],
            [np.full_like(b, -3.0) for b in params.biases],
        )
        new_params, _ = net.adam_step(params, grads, state)
        dw = new_params.weights[0] - params.weights[0]
        db = new_params.biases[0] - params.biases[0]
        np.testing.assert_allclose(dw, -lr * 0.25 / (0.25 + state.eps), rtol=1e-12)
        np.testing.assert_allclose(db, lr * 3.0 / (3.0 + state.eps), rtol=1e-12)

    def test_deterministic(self, rng):
        params = small_net(seed=6)
        state = net.init_adam(params)
        grads = (
            [rng.standard_normal(w.shape) for w in params.weights],
            [rng.standard_normal(b.shape) for b in params.biases],
        )
        out1 = net.adam_step(params, grads, state)
        out2 = net.adam_step(params, grads, state)
        for a, b in zip(out1[0].weights, out2[0].weights):
            np.testing.assert_array_equal(a, b)

    def test_nonfinite_gradient_names_layer(self):
        params = small_net()
        state = net.init_adam(params)
        grads = ([np.zeros_like(w) for w in params.weights], [np.zeros_like(b) for b in params.biases])
        grads[0][1][0, 0] = np.inf
        with pytest.raises(ValueError, match="layer 1"):
            net.adam_step(params, grads, state)


class TestCheckpoint:
    def test_exact_round_trip(self, tmp_path, rng):
        params = net.init_network((3, 16, 5), seed=12, input_offset=[1.0, 2.0, 3.0])
        state = net.init_adam(params, learning_rate=5e-4, beta1=0.8)
        grads = (
            [rng.standard_normal(w.shape) for w in params.weights],
            [rng.standard_normal(b.shape) for b in params.biases],
        )
        params, state = net.adam_step(params, grads, state)
        seeds = {"train_seed": 3, "eval_seed": 77}
        path = tmp_path / "model.ckpt.npz"
        net.save_checkpoint(path, params, state, seeds)
        loaded_params, loaded_state, loaded_seeds = net.load_checkpoint(path)
        assert loaded_params.layer_sizes == params.layer_sizes
        assert loaded_seeds == seeds
        assert loaded_state.t == state.t
        assert loaded_state.learning_rate == state.learning_rate
        for a, b in zip(params.weights, loaded_params.weights):
            np.testing.assert_array_equal(a, b)
        for a, b in zip(state.v_weights, loaded_state.v_weights):
            np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(params.input_offset, loaded_params.input_offset)
