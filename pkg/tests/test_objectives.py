"""NPV objective and analytic benchmark checks."""

import numpy as np
import pytest

from floodopt.controls import ControlBounds, ControlVector
from floodopt.errors import ParameterError, ShapeError, SimulationError
from floodopt.reservoir import (
    EconParams,
    analytic_objectives,
    make_fom_objective,
    npv,
    simulate,
)
from floodopt.reservoir.simulator import SimulationResult
from floodopt.surrogate import discount_vector


TABLE_ECON = EconParams()


def _result(times_days, *, oil=None, water_prod=None, water_inj=None,
            poly_inj=None, poly_prod=None):
    """Synthetic SimulationResult with only the cashflow-relevant totals."""
    n = len(times_days)
    zeros = np.zeros(n)

    def arr(x):
        return zeros.copy() if x is None else np.asarray(x, dtype=float)

    return SimulationResult(
        well_names=("I", "P"),
        times_days=np.asarray(times_days, dtype=float),
        oil_produced=arr(oil),
        water_produced=arr(water_prod),
        water_injected=arr(water_inj),
        gas_produced=zeros.copy(),
        polymer_injected=arr(poly_inj),
        polymer_produced=arr(poly_prod),
        injection_rates=np.zeros((n, 1)),
        concentrations=np.zeros((n, 1)),
        production_rates=np.zeros((n, 1)),
        bhp_bar=np.zeros((n, 2)),
        final_water_saturation=np.zeros((2, 2)),
        final_concentration=np.zeros((2, 2)),
        final_adsorbed=np.zeros((2, 2)),
        water_balance_error=0.0,
        polymer_balance_error=0.0,
        n_substeps=0,
        n_pressure_solves=0,
        substeps_per_step=np.zeros(n, dtype=int),
    )


class TestDiscountVector:
    def test_hand_values(self):
        delta = discount_vector(0.1, 365.0, np.array([365.0, 730.0]))
        assert delta[0] == pytest.approx(1.0 / 1.1, rel=1e-15)
        assert delta[1] == pytest.approx(1.0 / 1.21, rel=1e-15)

    def test_time_zero_is_undiscounted(self):
        delta = discount_vector(0.1, 365.0, np.array([0.0]))
        assert delta[0] == 1.0

    def test_zero_rate_is_all_ones(self):
        delta = discount_vector(0.0, 365.0, np.array([100.0, 900.0, 3000.0]))
        assert np.all(delta == 1.0)

    def test_monotone_decreasing_for_positive_rate(self):
        delta = discount_vector(0.08, 365.0, np.linspace(10.0, 4000.0, 40))
        assert np.all(np.diff(delta) < 0.0)

    def test_invalid_parameters(self):
        with pytest.raises(ParameterError):
            discount_vector(-1.0, 365.0, np.array([1.0]))
        with pytest.raises(ParameterError):
            discount_vector(0.1, 0.0, np.array([1.0]))


class TestNpv:
    def test_no_activity_is_zero(self):
        value, cashflow = npv(_result([365.0, 730.0]), TABLE_ECON)
        assert value == 0.0
        assert np.all(cashflow == 0.0)

    def test_hand_computed_two_step_case(self):
        result = _result(
            [365.0, 730.0],
            oil=[100.0, 50.0],
            water_prod=[20.0, 60.0],
            water_inj=[120.0, 110.0],
            poly_inj=[10.0, 0.0],
            poly_prod=[0.0, 5.0],
        )
        value, cashflow = npv(result, TABLE_ECON)
        cash1 = 500.0 * 100.0 - 30.0 * 120.0 - 30.0 * 20.0 - 2.5 * 10.0
        cash2 = 500.0 * 50.0 - 30.0 * 110.0 - 30.0 * 60.0 - 0.5 * 5.0
        assert cashflow[0] == pytest.approx(cash1, rel=1e-15)
        assert cashflow[1] == pytest.approx(cash2, rel=1e-15)
        assert value == pytest.approx(cash1 / 1.1 + cash2 / 1.21, rel=1e-14)

    def test_costs_alone_give_negative_npv(self):
        result = _result([365.0], water_inj=[100.0])
        value, _ = npv(result, TABLE_ECON)
        assert value == pytest.approx(-30.0 * 100.0 / 1.1, rel=1e-14)

    def test_gas_revenue_enters_cashflow(self):
        base = _result([365.0])
        with_gas = _result([365.0])
        with_gas.gas_produced = np.array([1000.0])
        v0, _ = npv(base, TABLE_ECON)
        v1, _ = npv(with_gas, TABLE_ECON)
        assert v1 - v0 == pytest.approx(0.15 * 1000.0 / 1.1, rel=1e-14)


@pytest.fixture(scope="module")
def objective(fivespot9):
    model, econ = fivespot9
    return make_fom_objective(model, econ)


class TestReservoirObjective:
    def test_scalar_matches_direct_npv(self, fivespot9, objective):
        model, econ = fivespot9
        u = model.constant_controls(200.0, 0.8, 50.0)
        expected, _ = npv(simulate(model, u), econ)
        assert objective.evaluate(u) == pytest.approx(expected, rel=1e-14)

    def test_discounted_components_reproduce_scalar(self, fivespot9, objective):
        # the identity the vector surrogate variant relies on
        model, _ = fivespot9
        rng = np.random.default_rng(5)
        lo, hi = model.control_bounds().tiled(model.n_steps)
        for _ in range(3):
            u = ControlVector(rng.uniform(lo, hi), model.n_control_types,
                              model.n_steps)
            value, components = objective.evaluate_full(u)
            assert components.shape == (model.n_steps,)
            assert value == pytest.approx(
                float(objective.delta @ components), rel=1e-12)

    def test_counts_every_run(self, fivespot9):
        model, econ = fivespot9
        objective = make_fom_objective(model, econ)
        assert objective.evaluations == 0
        u = model.constant_controls(100.0, 0.0, 25.0)
        objective.evaluate(u)
        objective.evaluate(u)  # repeats are counted too
        objective.evaluate_components(u)
        assert objective.evaluations == 3

    def test_value_range_tracks_observed_spread(self, fivespot9):
        model, econ = fivespot9
        objective = make_fom_objective(model, econ)
        assert objective.value_range() == 0.0
        v1 = objective.evaluate(model.constant_controls(0.0, 0.0, 0.0))
        v2 = objective.evaluate(model.constant_controls(300.0, 1.0, 75.0))
        assert objective.value_range() == pytest.approx(abs(v2 - v1), rel=1e-15)

    def test_has_components_and_delta(self, fivespot9, objective):
        model, econ = fivespot9
        assert objective.has_components
        expected = discount_vector(econ.discount_rate,
                                   econ.discount_period_days,
                                   model.times_days())
        assert np.allclose(objective.delta, expected, rtol=1e-15)

    def test_default_bounds_come_from_deck(self, fivespot9, objective):
        model, _ = fivespot9
        assert objective.bounds.n_wells == model.n_control_types

    def test_mismatched_bounds_rejected(self, fivespot9):
        model, econ = fivespot9
        wrong = ControlBounds(np.zeros(2), np.ones(2), ("a", "b"))
        with pytest.raises(ShapeError):
            make_fom_objective(model, econ, wrong)

    def test_demo_deck_initial_guess_profitable(self, fivespot25):
        model, econ = fivespot25
        objective = make_fom_objective(model, econ)
        value = objective.evaluate(model.constant_controls(700.0, 0.5, 150.0))
        assert np.isfinite(value)
        assert value > 0.0


class TestAnalyticRegistry:
    def test_registry_contents(self, problems):
        assert set(problems) == {"quadratic", "multimodal", "linear"}
        for p in problems.values():
            assert p.n_controls == p.n_wells * p.n_steps
            assert p.initial_control().values.shape == (p.n_controls,)

    @pytest.mark.parametrize("name", ["quadratic", "multimodal", "linear"])
    def test_gradient_matches_finite_differences(self, problems, name):
        p = problems[name]
        rng = np.random.default_rng(11)
        x = rng.uniform(p.bounds.tiled(p.n_steps)[0] + 0.5,
                        p.bounds.tiled(p.n_steps)[1] - 0.5)
        grad = p.gradient(x)
        h = 1e-6
        for i in range(p.n_controls):
            e = np.zeros_like(x)
            e[i] = h
            fd = (p.fn(x + e) - p.fn(x - e)) / (2.0 * h)
            assert grad[i] == pytest.approx(fd, rel=1e-5, abs=1e-7)

    @pytest.mark.parametrize("name", ["quadratic", "multimodal", "linear"])
    def test_documented_maximum_beats_a_grid(self, problems, name):
        p = problems[name]
        assert p.fn(p.argmax) == pytest.approx(p.max_value, rel=1e-12)
        lo, hi = p.bounds.tiled(p.n_steps)
        rng = np.random.default_rng(3)
        samples = rng.uniform(lo, hi, size=(4000, p.n_controls))
        values = np.array([p.fn(s) for s in samples])
        assert values.max() <= p.max_value + 1e-9

    def test_quadratic_components_identity(self, quadratic):
        rng = np.random.default_rng(7)
        for _ in range(5):
            x = rng.uniform(0.0, 10.0, quadratic.n_controls)
            total = float(quadratic.delta @ quadratic.components_fn(x))
            assert total == pytest.approx(quadratic.fn(x), rel=1e-13, abs=1e-13)

    def test_linear_components_identity(self, linear):
        rng = np.random.default_rng(8)
        for _ in range(5):
            x = rng.uniform(-5.0, 5.0, linear.n_controls)
            total = float(linear.delta @ linear.components_fn(x))
            assert total == pytest.approx(linear.fn(x), rel=1e-13, abs=1e-13)

    def test_multimodal_has_two_separated_optima(self, multimodal):
        p = multimodal
        # the global optimum is stationary and dominates its neighborhood
        assert np.linalg.norm(p.gradient(p.argmax)) < 1e-4
        rng = np.random.default_rng(9)
        nearby = p.argmax + rng.uniform(-0.3, 0.3, size=(200, 2))
        assert max(p.fn(x) for x in nearby) <= p.max_value + 1e-9
        # gradient ascent from the documented local center stays trapped at a
        # nearby stationary point far below the global value
        x = p.local_argmax.copy()
        for _ in range(2000):
            x = x + 0.05 * p.gradient(x)
        assert np.linalg.norm(p.gradient(x)) < 1e-8
        assert np.linalg.norm(x - p.local_argmax) < 0.2
        assert p.local_value <= p.fn(x) < 0.8 * p.max_value

    def test_make_objective_counts_from_zero(self, quadratic):
        objective = quadratic.make_objective()
        assert objective.evaluations == 0
        x = quadratic.initial_control()
        objective.evaluate(x)
        assert objective.evaluations == 1
        # a second instance gets its own counter
        assert quadratic.make_objective().evaluations == 0

    def test_linear_argmax_is_box_corner(self, linear):
        lo, hi = linear.bounds.tiled(linear.n_steps)
        at_corner = (linear.argmax == lo) | (linear.argmax == hi)
        assert at_corner.all()

    def test_non_finite_objective_rejected(self):
        from floodopt.enopt import CallableObjective

        bad = CallableObjective(lambda x: float("nan"), name="bad")
        with pytest.raises(SimulationError):
            bad.evaluate(ControlVector(np.zeros(2), 2, 1))
