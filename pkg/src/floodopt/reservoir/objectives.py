"""Discounted-cashflow objective on simulator output, plus analytic benchmarks.

The reservoir objective is the net present value of a run: per control step,
oil revenue minus water-handling and polymer costs, contracted with the
per-step discount factors.  The analytic problems are cheap closed-form
objectives in the same control layout, used to exercise the optimizers with
known maxima and gradients.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..controls import ControlBounds, ControlVector
from ..enopt import CallableObjective, Objective
from ..errors import ShapeError
from ..surrogate import discount_vector
from .model import EconParams, ReservoirModel
from .simulator import SimulationResult, simulate

__all__ = [
    "npv",
    "ReservoirObjective",
    "make_fom_objective",
    "AnalyticProblem",
    "analytic_objectives",
]

logger = logging.getLogger(__name__)


def npv(result: SimulationResult, econ: EconParams) -> tuple[float, np.ndarray]:
    """Net present value of a simulation: (discounted total, per-step cashflow).

    The per-step cashflow is oil plus gas revenue minus injection/production
    handling costs for water and polymer; the scalar is its inner product with
    the per-step discount factors, so the identity ``J == delta @ j`` holds by
    construction.
    """
    cashflow = (
        econ.oil_price * result.oil_produced
        + econ.gas_price * result.gas_produced
        - econ.water_injection_cost * result.water_injected
        - econ.water_production_cost * result.water_produced
        - econ.polymer_injection_cost * result.polymer_injected
        - econ.polymer_production_cost * result.polymer_produced
    )
    delta = discount_vector(econ.discount_rate, econ.discount_period_days, result.times_days)
    return float(delta @ cashflow), cashflow


class ReservoirObjective(Objective):
    """Full-order objective: one simulator run plus the NPV cashflow.

    Exposes per-step components (the undiscounted cashflow vector), so it can
    back both the scalar- and vector-output surrogate variants.
    """

    def __init__(self, model: ReservoirModel, econ: EconParams, *, name: str = ""):
        delta = discount_vector(econ.discount_rate, econ.discount_period_days, model.times_days())
        super().__init__(name=name or f"npv[{model.name}]", delta=delta)
        self.model = model
        self.econ = econ

    def _evaluate_full(self, u: ControlVector) -> tuple[float, np.ndarray]:
        result = simulate(self.model, u)
        return npv(result, self.econ)

    @property
    def has_components(self) -> bool:
        return True


def make_fom_objective(
    model: ReservoirModel,
    econ: EconParams,
    bounds: ControlBounds | None = None,
) -> ReservoirObjective:
    """Reservoir NPV objective with its admissible box attached.

    ``bounds`` defaults to the deck's control bounds; a custom box must still
    match the deck's control layout.
    """
    if bounds is None:
        bounds = model.control_bounds()
    elif bounds.n_wells != model.n_control_types:
        raise ShapeError(
            f"bounds describe {bounds.n_wells} control types, deck {model.name!r} "
            f"has {model.n_control_types}"
        )
    objective = ReservoirObjective(model, econ)
    objective.bounds = bounds
    return objective


# ---------------------------------------------------------------------------
# analytic benchmark objectives
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnalyticProblem:
    """A cheap closed-form objective with documented maxima and gradient.

    ``fn``/``gradient`` act on flat control values in the (types, steps)
    layout; ``components_fn`` (when present) returns one term per control
    step whose ``delta``-weighted sum equals ``fn``.
    """

    name: str
    n_wells: int
    n_steps: int
    bounds: ControlBounds
    fn: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    argmax: np.ndarray
    max_value: float
    components_fn: Callable[[np.ndarray], np.ndarray] | None = None
    delta: np.ndarray | None = None
    local_argmax: np.ndarray | None = None
    local_value: float | None = None
    default_initial: np.ndarray | None = None  # per-control-type constants
    notes: str = ""

    @property
    def n_controls(self) -> int:
        return self.n_wells * self.n_steps

    def control(self, values) -> ControlVector:
        return ControlVector(np.asarray(values, dtype=float), self.n_wells, self.n_steps)

    def initial_control(self) -> ControlVector:
        constants = self.default_initial
        if constants is None:
            constants = 0.5 * (self.bounds.lower + self.bounds.upper)
        return self.control(np.tile(np.asarray(constants, dtype=float), self.n_steps))

    def make_objective(self) -> CallableObjective:
        """Fresh counting objective over this problem (counters start at zero)."""
        return CallableObjective(
            self.fn,
            components_fn=self.components_fn,
            delta=self.delta,
            name=self.name,
        )


def _quadratic_problem() -> AnalyticProblem:
    center = np.array([3.0, 6.0, 5.0, 7.0])
    weights = np.array([1.0, 0.5, 2.0, 1.5])

    def fn(x: np.ndarray) -> float:
        return float(-(weights * (x - center) ** 2).sum())

    def gradient(x: np.ndarray) -> np.ndarray:
        return -2.0 * weights * (x - center)

    def components(x: np.ndarray) -> np.ndarray:
        per_control = -(weights * (x - center) ** 2)
        return per_control.reshape(2, 2).sum(axis=1)

    return AnalyticProblem(
        name="quadratic",
        n_wells=2,
        n_steps=2,
        bounds=ControlBounds(np.zeros(2), np.full(2, 10.0), ("a", "b")),
        fn=fn,
        gradient=gradient,
        argmax=center.copy(),
        max_value=0.0,
        components_fn=components,
        delta=np.ones(2),
        default_initial=np.array([1.0, 9.0]),
        notes="concave paraboloid; unique interior maximum at the center",
    )


def _multimodal_problem() -> AnalyticProblem:
    tall = (np.array([7.0, 7.0]), 10.0, 8.0)
    short = (np.array([2.5, 2.5]), 6.0, 3.0)

    def fn(x: np.ndarray) -> float:
        total = 0.0
        for center, height, width in (tall, short):
            total += height * np.exp(-((x - center) ** 2).sum() / width)
        return float(total)

    def gradient(x: np.ndarray) -> np.ndarray:
        grad = np.zeros_like(x)
        for center, height, width in (tall, short):
            grad += (
                height
                * np.exp(-((x - center) ** 2).sum() / width)
                * (-2.0 / width)
                * (x - center)
            )
        return grad

    return AnalyticProblem(
        name="multimodal",
        n_wells=2,
        n_steps=1,
        bounds=ControlBounds(np.zeros(2), np.full(2, 10.0), ("a", "b")),
        fn=fn,
        gradient=gradient,
        argmax=tall[0].copy(),
        max_value=fn(tall[0]),
        local_argmax=short[0].copy(),
        local_value=fn(short[0]),
        default_initial=np.array([4.0, 4.0]),
        notes=(
            "two Gaussian bumps; the global maximum sits at the tall bump's "
            "center up to ~3e-6 (the far bump's pull), the documented local "
            "maximum at the short bump's center"
        ),
    )


def _linear_problem() -> AnalyticProblem:
    slope = np.array([2.0, -1.0, 0.5, 1.0, -0.25, 3.0])
    lower, upper = np.full(2, -5.0), np.full(2, 5.0)
    full_lower, full_upper = np.tile(lower, 3), np.tile(upper, 3)

    def fn(x: np.ndarray) -> float:
        return float(slope @ x)

    def gradient(x: np.ndarray) -> np.ndarray:
        return slope.copy()

    def components(x: np.ndarray) -> np.ndarray:
        return (slope * x).reshape(3, 2).sum(axis=1)

    argmax = np.where(slope >= 0.0, full_upper, full_lower)
    return AnalyticProblem(
        name="linear",
        n_wells=2,
        n_steps=3,
        bounds=ControlBounds(lower, upper, ("a", "b")),
        fn=fn,
        gradient=gradient,
        argmax=argmax,
        max_value=fn(argmax),
        components_fn=components,
        delta=np.ones(3),
        default_initial=np.array([0.0, 0.0]),
        notes="constant gradient; the maximum sits at the matching box corner",
    )


def analytic_objectives() -> dict[str, AnalyticProblem]:
    """Registry of the analytic benchmark problems, keyed by name."""
    problems = (_quadratic_problem(), _multimodal_problem(), _linear_problem())
    return {p.name: p for p in problems}
