"""Network forward/backward passes, output scaling, trainer, surrogate objective."""

import numpy as np
import pytest

from floodopt.controls import ControlBounds, ControlVector
from floodopt.errors import ParameterError, ShapeError
from floodopt.surrogate import (
    NetworkArchitecture,
    NetworkWeights,
    NeuralSurrogate,
    OutputScaling,
    TrainerConfig,
    discount_vector,
    forward,
    initialize_weights,
    load_network,
    loss_gradient,
    make_surrogate,
    mse_loss,
    save_network,
    train_on_scaled,
)


def tiny_arch(activation="tanh"):
    return NetworkArchitecture((1, 1, 1), activation)


class TestArchitecture:
    def test_needs_at_least_one_hidden_layer(self):
        with pytest.raises(ParameterError):
            NetworkArchitecture((2, 1))

    def test_unknown_activation_rejected(self):
        with pytest.raises(ParameterError):
            NetworkArchitecture((2, 3, 1), "sigmoid")

    def test_layer_counts(self):
        arch = NetworkArchitecture((60, 25, 25, 1))
        assert arch.n_inputs == 60
        assert arch.n_outputs == 1
        assert arch.n_layers == 3


class TestForward:
    def test_zero_weights_give_zero_output(self):
        arch = NetworkArchitecture((3, 4, 2))
        weights = NetworkWeights(
            [np.zeros((4, 3)), np.zeros((2, 4))], [np.zeros(4), np.zeros(2)]
        )
        out = forward(weights, np.array([1.0, -2.0, 3.0]))
        np.testing.assert_array_equal(out, np.zeros(2))

    def test_single_unit_identity_weights_compute_tanh(self):
        weights = NetworkWeights([np.array([[1.0]]), np.array([[1.0]])],
                                 [np.zeros(1), np.zeros(1)])
        for x in (-2.0, -0.3, 0.0, 0.7, 1.9):
            out = forward(weights, np.array([x]))
            assert out[0] == pytest.approx(np.tanh(x), abs=1e-15)

    def test_one_two_one_hand_computed(self):
        """Explicit 1-2-1 network checked against the closed-form value."""
        w1 = np.array([[0.5], [-1.0]])
        b1 = np.array([0.1, 0.2])
        w2 = np.array([[2.0, -0.5]])
        b2 = np.array([0.3])
        weights = NetworkWeights([w1, w2], [b1, b2])
        x = 0.8
        hidden = np.tanh(np.array([0.5 * x + 0.1, -1.0 * x + 0.2]))
        expected = 2.0 * hidden[0] - 0.5 * hidden[1] + 0.3
        out = forward(weights, np.array([x]))
        assert out[0] == pytest.approx(expected, abs=1e-14)

    def test_output_layer_is_affine_not_activated(self):
        # a huge pre-activation at the output must not saturate
        weights = NetworkWeights([np.array([[1.0]]), np.array([[100.0]])],
                                 [np.zeros(1), np.zeros(1)])
        out = forward(weights, np.array([5.0]))
        assert out[0] == pytest.approx(100.0 * np.tanh(5.0))
        assert abs(out[0]) > 1.0

    def test_batch_rows_match_single_calls(self):
        rng = np.random.default_rng(0)
        arch = NetworkArchitecture((3, 5, 2))
        weights = initialize_weights(arch, rng)
        X = rng.standard_normal((7, 3))
        batch = forward(weights, X)
        for i in range(7):
            np.testing.assert_allclose(batch[i], forward(weights, X[i]), atol=1e-15)

    def test_input_size_checked(self):
        weights = initialize_weights(
            NetworkArchitecture((3, 4, 1)), np.random.default_rng(0)
        )
        with pytest.raises(ShapeError):
            forward(weights, np.zeros(2))

    def test_relu_activation(self):
        weights = NetworkWeights([np.array([[1.0]]), np.array([[1.0]])],
                                 [np.zeros(1), np.zeros(1)])
        assert forward(weights, np.array([-3.0]), "relu")[0] == 0.0
        assert forward(weights, np.array([2.5]), "relu")[0] == 2.5


class TestLossAndGradient:
    def test_loss_is_summed_not_averaged(self):
        weights = NetworkWeights([np.zeros((2, 1)), np.zeros((1, 2))],
                                 [np.zeros(2), np.zeros(1)])
        inputs = np.zeros((2, 1))
        targets = np.array([[0.2], [0.2]])  # predictions are zero
        assert mse_loss(weights, inputs, targets) == pytest.approx(0.08, abs=1e-15)

    def test_single_residual_squared(self):
        weights = NetworkWeights([np.zeros((2, 1)), np.zeros((1, 2))],
                                 [np.zeros(2), np.zeros(1)])
        loss = mse_loss(weights, np.zeros((1, 1)), np.array([[0.2]]))
        assert loss == pytest.approx(0.04, abs=1e-16)

    def test_zero_loss_implies_zero_gradient(self):
        rng = np.random.default_rng(1)
        arch = NetworkArchitecture((2, 3, 1))
        weights = initialize_weights(arch, rng)
        X = rng.standard_normal((5, 2))
        targets = forward(weights, X)  # exact fit by construction
        loss, grad = loss_gradient(weights, X, targets)
        assert loss == pytest.approx(0.0, abs=1e-20)
        assert np.max(np.abs(grad.flatten())) == pytest.approx(0.0, abs=1e-15)

    def test_output_bias_gradient_is_twice_summed_residual(self):
        rng = np.random.default_rng(2)
        arch = NetworkArchitecture((2, 4, 3))
        weights = initialize_weights(arch, rng)
        X = rng.standard_normal((6, 2))
        Y = rng.standard_normal((6, 3))
        pred = forward(weights, X)
        _, grad = loss_gradient(weights, X, Y)
        np.testing.assert_allclose(
            grad.biases[-1], 2.0 * (pred - Y).sum(axis=0), atol=1e-12
        )

    @pytest.mark.parametrize("sizes", [(2, 3, 1), (3, 5, 4, 2), (4, 8, 8, 8, 1)])
    def test_gradient_matches_central_differences(self, sizes):
        rng = np.random.default_rng(hash(sizes) % 2**32)
        arch = NetworkArchitecture(sizes)
        weights = initialize_weights(arch, rng)
        X = rng.standard_normal((10, sizes[0]))
        Y = rng.standard_normal((10, sizes[-1]))
        _, grad = loss_gradient(weights, X, Y)
        flat = weights.flatten()
        gflat = grad.flatten()
        h = 1e-6
        for i in rng.choice(flat.size, size=min(40, flat.size), replace=False):
            plus, minus = flat.copy(), flat.copy()
            plus[i] += h
            minus[i] -= h
            fd = (
                mse_loss(NetworkWeights.from_flat(plus, arch), X, Y)
                - mse_loss(NetworkWeights.from_flat(minus, arch), X, Y)
            ) / (2.0 * h)
            scale = max(abs(fd), abs(gflat[i]), 1e-8)
            assert abs(fd - gflat[i]) / scale < 1e-5


class TestWeights:
    def test_flatten_round_trip(self):
        rng = np.random.default_rng(3)
        arch = NetworkArchitecture((3, 5, 2))
        weights = initialize_weights(arch, rng)
        again = NetworkWeights.from_flat(weights.flatten(), arch)
        for a, b in zip(weights.matrices, again.matrices):
            np.testing.assert_array_equal(a, b)
        for a, b in zip(weights.biases, again.biases):
            np.testing.assert_array_equal(a, b)

    def test_from_flat_size_checked(self):
        arch = NetworkArchitecture((3, 5, 2))
        with pytest.raises(ShapeError):
            NetworkWeights.from_flat(np.zeros(10), arch)

    def test_layer_shape_chaining_checked(self):
        with pytest.raises(ShapeError):
            NetworkWeights([np.zeros((4, 3)), np.zeros((2, 5))],
                           [np.zeros(4), np.zeros(2)])

    def test_initialization_statistics(self):
        """He-style init: std sqrt(2 / fan_in), biases exactly zero."""
        rng = np.random.default_rng(4)
        arch = NetworkArchitecture((100, 200, 1))
        weights = initialize_weights(arch, rng)
        observed = np.std(weights.matrices[0])
        assert observed == pytest.approx(np.sqrt(2.0 / 100.0), rel=0.05)
        for b in weights.biases:
            assert np.all(b == 0.0)


class TestOutputScaling:
    def test_round_trip(self):
        rng = np.random.default_rng(5)
        Y = rng.uniform(-1e6, 1e6, size=(50, 4))
        scaling = OutputScaling.from_targets(Y)
        np.testing.assert_allclose(scaling.unscale(scaling.scale(Y)), Y,
                                   rtol=1e-10, atol=1e-6)

    def test_targets_map_into_unit_interval(self):
        Y = np.array([[1.0], [3.0], [2.0]])
        scaling = OutputScaling.from_targets(Y)
        s = scaling.scale(Y)
        assert s.min() == 0.0 and s.max() == 1.0

    def test_constant_component_maps_to_half(self):
        Y = np.full((10, 1), 7.5)
        scaling = OutputScaling.from_targets(Y)
        assert np.all(scaling.scale(Y) == 0.5)
        assert scaling.unscale(np.array([0.123]))[0] == 7.5

    def test_hi_below_lo_rejected(self):
        with pytest.raises(ParameterError):
            OutputScaling(np.array([1.0]), np.array([0.0]))


class TestDiscountVector:
    def test_zero_rate_gives_ones(self):
        d = discount_vector(0.0, 365.0, np.array([100.0, 900.0]))
        np.testing.assert_array_equal(d, np.ones(2))

    def test_one_period(self):
        d = discount_vector(0.1, 365.0, np.array([365.0]))
        assert d[0] == pytest.approx(1.0 / 1.1, abs=1e-15)

    def test_two_periods(self):
        d = discount_vector(0.1, 365.0, np.array([730.0]))
        assert d[0] == pytest.approx(1.0 / 1.21, abs=1e-15)

    def test_parameter_domains(self):
        with pytest.raises(ParameterError):
            discount_vector(-1.0, 365.0, np.ones(1))
        with pytest.raises(ParameterError):
            discount_vector(0.1, 0.0, np.ones(1))


class TestTrainer:
    def test_constant_targets_fit_to_near_zero_loss(self):
        rng = np.random.default_rng(6)
        X = rng.uniform(size=(40, 2))
        Y = np.full(40, 3.14)
        arch = NetworkArchitecture((2, 5, 1))
        cfg = TrainerConfig(restarts=2, max_epochs=200, rng_seed=0)
        weights, scaling, report = train_on_scaled(X, Y, arch, cfg)
        assert mse_loss(weights, X, scaling.scale(Y[:, None])) < 1e-8
        pred = scaling.unscale(forward(weights, X))
        np.testing.assert_allclose(pred, 3.14, atol=1e-3)

    def test_smooth_target_reaches_loss_band(self):
        """Small quadratic fit lands under the documented loss ceilings."""
        rng = np.random.default_rng(7)
        X = rng.uniform(size=(100, 2))
        Y = -((X - 0.5) ** 2).sum(axis=1)
        arch = NetworkArchitecture((2, 10, 10, 1))
        cfg = TrainerConfig(restarts=5, max_epochs=400, rng_seed=1)
        weights, scaling, report = train_on_scaled(X, Y, arch, cfg)
        assert report.selected.train_loss < 1e-3
        assert report.selected.validation_loss < 1e-2

    def test_training_is_deterministic(self):
        rng = np.random.default_rng(8)
        X = rng.uniform(size=(30, 2))
        Y = X.sum(axis=1)
        arch = NetworkArchitecture((2, 4, 1))
        cfg = TrainerConfig(restarts=3, max_epochs=100, rng_seed=5)
        w1, s1, _ = train_on_scaled(X, Y, arch, cfg)
        w2, s2, _ = train_on_scaled(X, Y, arch, cfg)
        np.testing.assert_array_equal(w1.flatten(), w2.flatten())
        np.testing.assert_array_equal(s1.lo, s2.lo)

    def test_different_seed_changes_the_fit(self):
        rng = np.random.default_rng(9)
        X = rng.uniform(size=(30, 2))
        Y = X.prod(axis=1)
        arch = NetworkArchitecture((2, 4, 1))
        w1, _, _ = train_on_scaled(X, Y, arch, TrainerConfig(restarts=1, max_epochs=50, rng_seed=0))
        w2, _, _ = train_on_scaled(X, Y, arch, TrainerConfig(restarts=1, max_epochs=50, rng_seed=1))
        assert not np.array_equal(w1.flatten(), w2.flatten())

    def test_early_stopping_bound(self):
        """A stopped restart never runs past its last improvement + patience."""
        rng = np.random.default_rng(10)
        X = rng.uniform(size=(50, 3))
        Y = np.sin(3.0 * X).sum(axis=1)
        arch = NetworkArchitecture((3, 6, 1))
        cfg = TrainerConfig(restarts=6, max_epochs=300, patience=7, rng_seed=2)
        _, _, report = train_on_scaled(X, Y, arch, cfg)
        for r in report.restarts:
            if r.stopped_early:
                assert r.epochs <= r.last_improvement_epoch + cfg.patience
            assert r.epochs <= cfg.max_epochs

    def test_selection_minimizes_combined_loss(self):
        rng = np.random.default_rng(11)
        X = rng.uniform(size=(40, 2))
        Y = (X**2).sum(axis=1)
        arch = NetworkArchitecture((2, 5, 1))
        cfg = TrainerConfig(restarts=5, max_epochs=100, rng_seed=3)
        _, _, report = train_on_scaled(X, Y, arch, cfg)
        combined = [r.combined_loss for r in report.restarts if not r.diverged]
        assert report.selected.combined_loss == min(combined)

    def test_needs_ten_pairs(self):
        with pytest.raises(ParameterError):
            train_on_scaled(np.zeros((9, 2)), np.zeros(9),
                            NetworkArchitecture((2, 3, 1)), TrainerConfig(restarts=1))

    def test_rejects_non_finite_data(self):
        X = np.zeros((12, 2))
        Y = np.zeros(12)
        Y[3] = np.nan
        with pytest.raises(ParameterError):
            train_on_scaled(X, Y, NetworkArchitecture((2, 3, 1)),
                            TrainerConfig(restarts=1))

    def test_input_width_checked(self):
        with pytest.raises(ShapeError):
            train_on_scaled(np.zeros((12, 3)), np.zeros(12),
                            NetworkArchitecture((2, 3, 1)), TrainerConfig(restarts=1))

    def test_config_domains(self):
        with pytest.raises(ParameterError):
            TrainerConfig(restarts=0)
        with pytest.raises(ParameterError):
            TrainerConfig(validation_fraction=1.0)
        with pytest.raises(ParameterError):
            TrainerConfig(wolfe_c1=0.5, wolfe_c2=0.4)

    def test_default_line_search_constants(self):
        cfg = TrainerConfig()
        assert cfg.wolfe_c1 == 1e-4
        assert cfg.wolfe_c2 == 0.9
        assert cfg.memory == 10
        assert cfg.restarts == 15


class TestNeuralSurrogate:
    def build(self, variant="scalar", n_steps=3):
        rng = np.random.default_rng(12)
        n_outputs = n_steps if variant == "vector" else 1
        arch = NetworkArchitecture((2 * n_steps, 4, n_outputs))
        weights = initialize_weights(arch, rng)
        bounds = ControlBounds.unit(2)
        scaling = OutputScaling(np.zeros(n_outputs), np.full(n_outputs, 2.0))
        delta = np.linspace(1.0, 0.5, n_steps) if variant == "vector" else None
        return make_surrogate(weights, arch, bounds, scaling, variant, delta)

    def test_scalar_value_is_unscaled_network_output(self):
        s = self.build("scalar")
        u = ControlVector(np.full(6, 0.3), 2, 3)
        raw = s.scaling.unscale(forward(s.weights, u.values, "tanh"))
        assert s.evaluate(u) == pytest.approx(float(raw[0]), abs=1e-14)

    def test_vector_value_is_discounted_component_sum(self):
        s = self.build("vector")
        u = ControlVector(np.full(6, 0.3), 2, 3)
        value, comps = s.evaluate_full(u)
        assert comps.shape == (3,)
        assert value == pytest.approx(float(s.delta @ comps), abs=1e-12)
        assert s.has_components

    def test_fixed_value_range(self):
        assert self.build("scalar").value_range() == pytest.approx(2.0)
        vector = self.build("vector")
        assert vector.value_range() == pytest.approx(
            float(vector.delta @ vector.scaling.span)
        )

    def test_range_is_fixed_regardless_of_evaluations(self):
        s = self.build("scalar")
        before = s.value_range()
        for v in (0.1, 0.9, 0.4):
            s.evaluate(ControlVector(np.full(6, v), 2, 3))
        assert s.value_range() == before

    def test_vector_needs_delta(self):
        rng = np.random.default_rng(13)
        arch = NetworkArchitecture((4, 3, 2))
        weights = initialize_weights(arch, rng)
        with pytest.raises(ParameterError):
            make_surrogate(weights, arch, ControlBounds.unit(2),
                           OutputScaling(np.zeros(2), np.ones(2)), "vector")

    def test_scalar_needs_single_output(self):
        rng = np.random.default_rng(14)
        arch = NetworkArchitecture((4, 3, 2))
        weights = initialize_weights(arch, rng)
        with pytest.raises(ParameterError):
            make_surrogate(weights, arch, ControlBounds.unit(2),
                           OutputScaling(np.zeros(2), np.ones(2)), "scalar")

    def test_save_load_round_trip(self, tmp_path):
        for variant in ("scalar", "vector"):
            s = self.build(variant)
            path = tmp_path / f"{variant}.json"
            save_network(path, s)
            loaded = load_network(path)
            u = ControlVector(np.full(6, 0.7), 2, 3)
            assert loaded.evaluate(u) == s.evaluate(u)
            assert loaded.variant == s.variant
            for a, b in zip(loaded.weights.matrices, s.weights.matrices):
                np.testing.assert_array_equal(a, b)
