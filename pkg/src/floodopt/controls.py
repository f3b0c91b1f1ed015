"""Control vectors, admissible box bounds, projection, and unit-cube scaling.

A control vector stacks one value per (control type, control step) pair with
control types varying fastest:

    [u_1^1, ..., u_Nw^1,  u_1^2, ..., u_Nw^2,  ...,  u_1^Nt, ..., u_Nw^Nt]

``ControlVector.flat_index`` is the single source of truth for this layout;
covariance blocks, well-rate extraction and CSV export all go through it
instead of re-deriving index arithmetic.  "Well" here means one controllable
quantity (an injector contributes a rate slot and a concentration slot), so
bounds are per control type and constant in time: the admissible set is a box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, ParameterError, ShapeError

__all__ = [
    "ControlVector",
    "ControlBounds",
    "project",
    "scale_to_unit",
    "unscale_from_unit",
]


@dataclass(frozen=True)
class ControlVector:
    """Immutable flat vector of well controls plus its (wells, steps) layout."""

    values: np.ndarray
    n_wells: int
    n_steps: int

    def __post_init__(self):
        if self.n_wells < 1 or self.n_steps < 1:
            raise ParameterError(
                f"control layout needs n_wells >= 1 and n_steps >= 1, "
                f"got ({self.n_wells}, {self.n_steps})"
            )
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.ndim != 1:
            raise ShapeError(f"control values must be 1-D, got shape {vals.shape}")
        if vals.size != self.n_wells * self.n_steps:
            raise ShapeError(
                f"control vector of length {vals.size} does not match "
                f"{self.n_wells} wells x {self.n_steps} steps"
            )
        if not np.all(np.isfinite(vals)):
            raise ParameterError("control values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.size

    def flat_index(self, well: int, step: int) -> int:
        """Position of control type ``well`` at control step ``step`` (0-based)."""
        if not (0 <= well < self.n_wells):
            raise ShapeError(f"well index {well} outside [0, {self.n_wells})")
        if not (0 <= step < self.n_steps):
            raise ShapeError(f"step index {step} outside [0, {self.n_steps})")
        return step * self.n_wells + well

    def as_matrix(self) -> np.ndarray:
        """View of the values as a (n_steps, n_wells) matrix."""
        return self.values.reshape(self.n_steps, self.n_wells)

    def well_series(self, well: int) -> np.ndarray:
        """The time series of one control type across all steps."""
        if not (0 <= well < self.n_wells):
            raise ShapeError(f"well index {well} outside [0, {self.n_wells})")
        return self.as_matrix()[:, well].copy()

    def with_values(self, values: np.ndarray) -> "ControlVector":
        """Same layout, new values."""
        return ControlVector(np.asarray(values, dtype=float), self.n_wells, self.n_steps)

    def key(self) -> bytes:
        """Exact-bits identity of the values, usable as a cache key."""
        return self.values.tobytes()


@dataclass(frozen=True)
class ControlBounds:
    """Per-control-type box bounds, constant across control steps."""

    lower: np.ndarray
    upper: np.ndarray
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float, copy=True)
        up = np.array(self.upper, dtype=float, copy=True)
        if lo.ndim != 1 or up.ndim != 1 or lo.size != up.size or lo.size == 0:
            raise ShapeError(
                f"bounds must be equal-length 1-D arrays, got {lo.shape} and {up.shape}"
            )
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(up))):
            raise ParameterError("bounds must be finite")
        if not np.all(lo < up):
            bad = np.nonzero(~(lo < up))[0].tolist()
            raise ParameterError(f"lower must be strictly below upper, violated at {bad}")
        if self.names is not None and len(self.names) != lo.size:
            raise ShapeError("one name per control type expected")
        lo.flags.writeable = False
        up.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        if self.names is not None:
            object.__setattr__(self, "names", tuple(self.names))

    @property
    def n_wells(self) -> int:
        return self.lower.size

    @classmethod
    def unit(cls, n_wells: int) -> "ControlBounds":
        """The [0, 1] box used for optimization in scaled coordinates."""
        return cls(np.zeros(n_wells), np.ones(n_wells))

    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def tiled(self, n_steps: int) -> tuple[np.ndarray, np.ndarray]:
        """Full-length (lower, upper) vectors matching the flat control layout."""
        if n_steps < 1:
            raise ParameterError("n_steps must be >= 1")
        return np.tile(self.lower, n_steps), np.tile(self.upper, n_steps)

    def contains(self, u: ControlVector) -> bool:
        self._check_layout(u)
        lo, up = self.tiled(u.n_steps)
        return bool(np.all(u.values >= lo) and np.all(u.values <= up))

    def _check_layout(self, u: ControlVector) -> None:
        if u.n_wells != self.n_wells:
            raise ShapeError(
                f"control vector has {u.n_wells} control types, bounds have {self.n_wells}"
            )


def project(u: ControlVector, bounds: ControlBounds) -> ControlVector:
    """Componentwise clamp of ``u`` into the admissible box.

    Idempotent and non-expansive in the max norm; feasible components are
    returned unchanged (bit-exact).
    """
    bounds._check_layout(u)
    lo, up = bounds.tiled(u.n_steps)
    return u.with_values(np.clip(u.values, lo, up))


def scale_to_unit(u: ControlVector, bounds: ControlBounds) -> np.ndarray:
    """Map an admissible control onto the unit cube, componentwise.

    Raises :class:`BoundsError` if ``u`` lies outside the box; callers should
    project first.
    """
    bounds._check_layout(u)
    lo, up = bounds.tiled(u.n_steps)
    if np.any(u.values < lo) or np.any(u.values > up):
        bad = np.nonzero((u.values < lo) | (u.values > up))[0].tolist()
        raise BoundsError(f"control outside admissible box at flat indices {bad}")
    return (u.values - lo) / (up - lo)


def unscale_from_unit(x: np.ndarray, bounds: ControlBounds) -> ControlVector:
    """Inverse of :func:`scale_to_unit`; ``x`` must lie in the unit cube.

    The result is clipped into the box to absorb last-ulp rounding, so
    ``scale_to_unit(unscale_from_unit(x))`` round-trips to ~1e-16.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ShapeError(f"scaled control must be 1-D, got shape {x.shape}")
    n_wells = bounds.n_wells
    if x.size % n_wells != 0:
        raise ShapeError(
            f"scaled control of length {x.size} does not tile {n_wells} control types"
        )
    if np.any(x < 0.0) or np.any(x > 1.0):
        bad = np.nonzero((x < 0.0) | (x > 1.0))[0].tolist()
        raise BoundsError(f"scaled control outside [0, 1] at flat indices {bad}")
    n_steps = x.size // n_wells
    lo, up = bounds.tiled(n_steps)
    vals = np.clip(lo + x * (up - lo), lo, up)
    return ControlVector(vals, n_wells, n_steps)
