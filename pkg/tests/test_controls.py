"""Control layout, box projection, and unit-cube scaling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from floodopt.controls import (
    ControlBounds,
    ControlVector,
    project,
    scale_to_unit,
    unscale_from_unit,
)
from floodopt.errors import BoundsError, ParameterError, ShapeError


def bounds_2() -> ControlBounds:
    return ControlBounds(np.array([0.0, 0.0]), np.array([2000.0, 2.5]))


class TestControlVector:
    def test_layout_types_vary_fastest(self):
        u = ControlVector(np.arange(6.0), 2, 3)
        assert u.flat_index(well=0, step=0) == 0
        assert u.flat_index(well=1, step=0) == 1
        assert u.flat_index(well=0, step=1) == 2
        assert u.flat_index(well=1, step=2) == 5

    def test_as_matrix_is_steps_by_types(self):
        u = ControlVector(np.arange(6.0), 2, 3)
        m = u.as_matrix()
        assert m.shape == (3, 2)
        np.testing.assert_array_equal(m[:, 0], [0.0, 2.0, 4.0])
        np.testing.assert_array_equal(m[:, 1], [1.0, 3.0, 5.0])

    def test_well_series_matches_strided_indexing(self):
        u = ControlVector(np.arange(12.0), 3, 4)
        for j in range(3):
            np.testing.assert_array_equal(u.well_series(j), u.values[j::3])

    def test_values_are_immutable(self):
        u = ControlVector(np.ones(4), 2, 2)
        with pytest.raises(ValueError):
            u.values[0] = 2.0

    def test_length_must_match_layout(self):
        with pytest.raises(ShapeError):
            ControlVector(np.zeros(5), 2, 3)

    def test_non_finite_values_rejected(self):
        with pytest.raises(ParameterError):
            ControlVector(np.array([1.0, np.nan]), 2, 1)

    def test_key_is_exact_bits(self):
        a = ControlVector(np.array([0.1, 0.2]), 2, 1)
        b = ControlVector(np.array([0.1, 0.2]), 2, 1)
        c = ControlVector(np.array([0.1, np.nextafter(0.2, 1.0)]), 2, 1)
        assert a.key() == b.key()
        assert a.key() != c.key()


class TestControlBounds:
    def test_lower_must_be_strictly_below_upper(self):
        with pytest.raises(ParameterError):
            ControlBounds(np.array([0.0, 1.0]), np.array([1.0, 1.0]))

    def test_names_length_checked(self):
        with pytest.raises(ShapeError):
            ControlBounds(np.zeros(2), np.ones(2), ("only-one",))

    def test_tiled_repeats_per_step(self):
        lo, up = bounds_2().tiled(3)
        np.testing.assert_array_equal(lo, np.zeros(6))
        np.testing.assert_array_equal(up, [2000.0, 2.5] * 3)

    def test_contains_checks_layout(self):
        u = ControlVector(np.zeros(3), 3, 1)
        with pytest.raises(ShapeError):
            bounds_2().contains(u)

    def test_unit_box(self):
        box = ControlBounds.unit(4)
        np.testing.assert_array_equal(box.lower, np.zeros(4))
        np.testing.assert_array_equal(box.upper, np.ones(4))


class TestProject:
    def test_clamps_above_upper(self):
        u = ControlVector(np.array([2500.0, 1.0]), 2, 1)
        p = project(u, bounds_2())
        np.testing.assert_array_equal(p.values, [2000.0, 1.0])

    def test_clamps_below_lower(self):
        u = ControlVector(np.array([-3.0, 5.0]), 2, 1)
        p = project(u, bounds_2())
        np.testing.assert_array_equal(p.values, [0.0, 2.5])

    def test_identity_on_feasible_points(self):
        u = ControlVector(np.array([700.0, 0.5, 150.0, 2.5]), 2, 2)
        p = project(u, bounds_2())
        assert p.key() == u.key()

    @given(
        values=st.lists(
            st.floats(-1e6, 1e6, allow_nan=False), min_size=4, max_size=4
        )
    )
    def test_idempotent(self, values):
        u = ControlVector(np.array(values), 2, 2)
        once = project(u, bounds_2())
        twice = project(once, bounds_2())
        assert once.key() == twice.key()

    @given(
        a=st.lists(st.floats(-1e4, 1e4, allow_nan=False), min_size=4, max_size=4),
        b=st.lists(st.floats(-1e4, 1e4, allow_nan=False), min_size=4, max_size=4),
    )
    @settings(max_examples=50)
    def test_non_expansive_in_max_norm(self, a, b):
        box = bounds_2()
        ua = ControlVector(np.array(a), 2, 2)
        ub = ControlVector(np.array(b), 2, 2)
        before = np.max(np.abs(ua.values - ub.values))
        after = np.max(np.abs(project(ua, box).values - project(ub, box).values))
        assert after <= before + 1e-15


class TestScaling:
    def test_known_value(self):
        box = ControlBounds(np.array([0.0]), np.array([2000.0]))
        u = ControlVector(np.array([700.0]), 1, 1)
        assert scale_to_unit(u, box)[0] == pytest.approx(0.35, abs=1e-15)

    def test_bounds_map_to_cube_corners(self):
        box = bounds_2()
        lo, up = box.tiled(2)
        assert np.all(scale_to_unit(ControlVector(lo, 2, 2), box) == 0.0)
        assert np.all(scale_to_unit(ControlVector(up, 2, 2), box) == 1.0)

    def test_outside_box_raises(self):
        u = ControlVector(np.array([2000.1, 1.0]), 2, 1)
        with pytest.raises(BoundsError):
            scale_to_unit(u, bounds_2())

    def test_unscale_rejects_outside_unit_cube(self):
        with pytest.raises(BoundsError):
            unscale_from_unit(np.array([0.5, 1.1]), bounds_2())

    def test_unscale_hits_bounds_exactly_at_corners(self):
        box = bounds_2()
        top = unscale_from_unit(np.ones(4), box)
        np.testing.assert_array_equal(top.values, box.tiled(2)[1])

    @given(
        x=st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=4, max_size=4)
    )
    @settings(max_examples=100)
    def test_round_trip_unit_to_natural(self, x):
        box = bounds_2()
        x = np.array(x)
        back = scale_to_unit(unscale_from_unit(x, box), box)
        np.testing.assert_allclose(back, x, atol=1e-12)

    @given(
        frac=st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=4, max_size=4)
    )
    @settings(max_examples=100)
    def test_round_trip_natural_to_unit(self, frac):
        box = bounds_2()
        lo, up = box.tiled(2)
        vals = lo + np.array(frac) * (up - lo)
        u = ControlVector(vals, 2, 2)
        back = unscale_from_unit(scale_to_unit(u, box), box)
        np.testing.assert_allclose(back.values, vals, atol=1e-12 * np.max(up))
