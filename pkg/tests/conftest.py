"""Shared fixtures: analytic benchmark problems and the bundled decks.

Deck-backed fixtures are session-scoped because loading is cheap but the
models are immutable, and several test modules share them.
"""

import numpy as np
import pytest

from floodopt.controls import ControlBounds, ControlVector
from floodopt.reservoir import analytic_objectives, builtin_deck_path, load_deck


@pytest.fixture(scope="session")
def problems():
    return analytic_objectives()


@pytest.fixture()
def quadratic(problems):
    return problems["quadratic"]


@pytest.fixture()
def multimodal(problems):
    return problems["multimodal"]


@pytest.fixture()
def linear(problems):
    return problems["linear"]


@pytest.fixture(scope="session")
def fivespot9():
    """Small homogeneous deck: (model, econ)."""
    return load_deck(builtin_deck_path("fivespot9"))


@pytest.fixture(scope="session")
def fivespot25():
    """Demonstration deck: (model, econ)."""
    return load_deck(builtin_deck_path("fivespot25"))


@pytest.fixture()
def unit_box_4():
    return ControlBounds.unit(2)


def make_control(values, n_wells, n_steps):
    return ControlVector(np.asarray(values, dtype=float), n_wells, n_steps)


@pytest.fixture()
def control_factory():
    return make_control
