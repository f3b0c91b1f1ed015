"""Desk-scale polymer-flooding proxy: model decks, simulator, and objectives."""

from .model import (
    BAR,
    DAY_SECONDS,
    MILLIDARCY,
    EconParams,
    FluidParams,
    NumericsParams,
    PolymerParams,
    ReservoirModel,
    WellSpec,
    builtin_deck_path,
    load_deck,
)
from .objectives import (
    AnalyticProblem,
    ReservoirObjective,
    analytic_objectives,
    make_fom_objective,
    npv,
)
from .simulator import SimulationResult, simulate

__all__ = [
    "BAR",
    "DAY_SECONDS",
    "MILLIDARCY",
    "EconParams",
    "FluidParams",
    "NumericsParams",
    "PolymerParams",
    "ReservoirModel",
    "WellSpec",
    "builtin_deck_path",
    "load_deck",
    "AnalyticProblem",
    "ReservoirObjective",
    "analytic_objectives",
    "make_fom_objective",
    "npv",
    "SimulationResult",
    "simulate",
]
