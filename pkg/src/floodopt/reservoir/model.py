"""Reservoir description, economics, and deck files.

A model is a 2-D horizontal grid with per-cell porosity/permeability,
rate-controlled injector and producer wells, two incompressible phases
(water displacing oil), and a dissolved polymer component that thickens the
injected water.  Decks are YAML documents describing the grid, rock (either
explicit arrays or a seeded random-field generator), fluids, polymer model,
wells, the control schedule with its bounds, economics, and numerics.

Control layout: each injector contributes two control types (water rate in
sm3/day, polymer concentration in kg/sm3), each producer one (liquid rate in
sm3/day); types are ordered injectors first, and repeat per control step as
described in :mod:`floodopt.controls`.
"""

from __future__ import annotations

import importlib.resources
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from scipy.ndimage import gaussian_filter

from ..controls import ControlBounds, ControlVector
from ..errors import ConfigError, ParameterError, ShapeError

__all__ = [
    "DAY_SECONDS",
    "BAR",
    "MILLIDARCY",
    "WellSpec",
    "FluidParams",
    "PolymerParams",
    "NumericsParams",
    "EconParams",
    "ReservoirModel",
    "load_deck",
    "builtin_deck_path",
]

logger = logging.getLogger(__name__)

DAY_SECONDS = 86400.0
BAR = 1.0e5  # Pa
MILLIDARCY = 9.869233e-16  # m^2


@dataclass(frozen=True)
class WellSpec:
    """A vertical well completed in a single grid cell."""

    name: str
    kind: str  # "injector" | "producer"
    ix: int
    iy: int
    radius: float = 0.1  # m
    bhp_limit_bar: float | None = None

    def __post_init__(self):
        if self.kind not in ("injector", "producer"):
            raise ParameterError(f"well kind must be injector/producer, got {self.kind!r}")
        if self.radius <= 0.0:
            raise ParameterError(f"well radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class FluidParams:
    """Two-phase flow parameters (Corey relative permeabilities)."""

    mu_water: float = 5.0e-4  # Pa s
    mu_oil: float = 5.0e-3  # Pa s
    swr: float = 0.1
    sor: float = 0.1
    corey_water: float = 2.0
    corey_oil: float = 2.0
    krw_end: float = 1.0
    kro_end: float = 1.0
    initial_sw: float = 0.15

    def __post_init__(self):
        if self.mu_water <= 0 or self.mu_oil <= 0:
            raise ParameterError("viscosities must be positive")
        if not (0 <= self.swr < 1 and 0 <= self.sor < 1 and self.swr + self.sor < 1):
            raise ParameterError("residual saturations must satisfy swr + sor < 1")
        if self.corey_water < 1 or self.corey_oil < 1:
            raise ParameterError("Corey exponents must be >= 1")
        if self.krw_end <= 0 or self.kro_end <= 0:
            raise ParameterError("relative-permeability endpoints must be positive")
        if not self.swr <= self.initial_sw <= 1.0 - self.sor:
            raise ParameterError(
                f"initial water saturation {self.initial_sw} outside "
                f"[{self.swr}, {1 - self.sor}]"
            )


@dataclass(frozen=True)
class PolymerParams:
    """Polymer thickening, mixing, adsorption and pore-exclusion model.

    Water viscosity scales as mu_w (1 + viscosity_multiplier * c); partial
    mixing between polymer-rich and fresh water follows a Todd/Longstaff
    blend with exponent ``mixing_omega``.  Adsorption is linear in c up to
    ``max_adsorption`` (kg polymer per kg rock, reached at concentration
    ``max_concentration``), reduces water mobility through a factor growing
    to ``residual_resistance``, and the dead (inaccessible) pore fraction
    shrinks the transport volume of the dissolved polymer.
    """

    mixing_omega: float = 0.65
    max_adsorption: float = 7.5e-4  # kg/kg
    rock_density: float = 1980.0  # kg/m^3
    dead_pore_space: float = 0.18
    residual_resistance: float = 2.5
    viscosity_multiplier: float = 3.0  # per kg/sm3
    max_concentration: float = 2.5  # kg/sm3

    def __post_init__(self):
        if not 0.0 <= self.mixing_omega <= 1.0:
            raise ParameterError("mixing exponent must lie in [0, 1]")
        if self.max_adsorption < 0 or self.rock_density <= 0:
            raise ParameterError("adsorption parameters out of range")
        if not 0.0 <= self.dead_pore_space < 1.0:
            raise ParameterError("dead pore space must lie in [0, 1)")
        if self.residual_resistance < 1.0:
            raise ParameterError("residual resistance factor must be >= 1")
        if self.viscosity_multiplier < 0.0:
            raise ParameterError("viscosity multiplier must be >= 0")
        if self.max_concentration <= 0.0:
            raise ParameterError("maximum concentration must be positive")


@dataclass(frozen=True)
class NumericsParams:
    max_pressure_dt_days: float = 50.0
    cfl: float = 0.85
    max_substeps_per_step: int = 100_000
    initial_pressure_bar: float = 200.0

    def __post_init__(self):
        if self.max_pressure_dt_days <= 0:
            raise ParameterError("pressure window must be positive")
        if not 0.0 < self.cfl <= 1.0:
            raise ParameterError("cfl factor must lie in (0, 1]")
        if self.max_substeps_per_step < 1:
            raise ParameterError("substep cap must be >= 1")


@dataclass(frozen=True)
class EconParams:
    """Prices and costs entering the discounted cashflow.

    Volumes are at surface conditions; polymer terms are per kilogram.
    """

    oil_price: float = 500.0  # USD/sm3
    gas_price: float = 0.15  # USD/sm3 (the proxy produces no gas)
    water_injection_cost: float = 30.0  # USD/sm3
    water_production_cost: float = 30.0  # USD/sm3
    polymer_injection_cost: float = 2.5  # USD/kg
    polymer_production_cost: float = 0.5  # USD/kg
    discount_rate: float = 0.1
    discount_period_days: float = 365.0

    def __post_init__(self):
        if self.discount_rate <= -1.0:
            raise ParameterError("discount rate must be > -1")
        if self.discount_period_days <= 0.0:
            raise ParameterError("discount period must be positive")


@dataclass(frozen=True)
class ReservoirModel:
    nx: int
    ny: int
    dx: float
    dy: float
    dz: float
    porosity: np.ndarray  # (ny, nx)
    permeability: np.ndarray  # (ny, nx), m^2
    fluid: FluidParams
    polymer: PolymerParams
    numerics: NumericsParams
    wells: tuple[WellSpec, ...]
    n_steps: int
    step_days: float
    injector_rate_bounds: tuple[float, float] = (0.0, 2000.0)
    concentration_bounds: tuple[float, float] = (0.0, 2.5)
    producer_rate_bounds: tuple[float, float] = (0.0, 500.0)
    initial_water_saturation: np.ndarray | None = None
    name: str = "reservoir"

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ParameterError("grid must have at least one cell per direction")
        if min(self.dx, self.dy, self.dz) <= 0:
            raise ParameterError("cell dimensions must be positive")
        for label, arr in (("porosity", self.porosity), ("permeability", self.permeability)):
            a = np.array(arr, dtype=float, copy=True)
            if a.shape != (self.ny, self.nx):
                raise ShapeError(f"{label} must have shape (ny, nx) = {(self.ny, self.nx)}")
            if not np.all(np.isfinite(a)) or np.any(a <= 0.0):
                raise ParameterError(f"{label} must be positive and finite")
            a.flags.writeable = False
            object.__setattr__(self, label, a)
        if np.any(self.porosity >= 1.0):
            raise ParameterError("porosity must be < 1")
        if self.n_steps < 1 or self.step_days <= 0:
            raise ParameterError("control schedule must have n_steps >= 1, step_days > 0")
        if not self.injectors or not self.producers:
            raise ParameterError("need at least one injector and one producer")
        names = [w.name for w in self.wells]
        if len(set(names)) != len(names):
            raise ParameterError("well names must be unique")
        cells = [(w.ix, w.iy) for w in self.wells]
        if len(set(cells)) != len(cells):
            raise ParameterError("wells must sit in distinct cells")
        for w in self.wells:
            if not (0 <= w.ix < self.nx and 0 <= w.iy < self.ny):
                raise ParameterError(f"well {w.name} cell ({w.ix}, {w.iy}) outside grid")
        for attr, label in (
            ("injector_rate_bounds", "injector rate"),
            ("concentration_bounds", "concentration"),
            ("producer_rate_bounds", "producer rate"),
        ):
            lo, hi = (float(v) for v in getattr(self, attr))
            if not lo < hi:
                raise ParameterError(f"{label} bounds must satisfy lo < hi")
            if lo < 0.0:
                raise ParameterError(f"{label} lower bound must be >= 0")
            object.__setattr__(self, attr, (lo, hi))
        if self.initial_water_saturation is not None:
            s0 = np.array(self.initial_water_saturation, dtype=float, copy=True)
            if s0.shape != (self.ny, self.nx):
                raise ShapeError(
                    f"initial saturation must have shape (ny, nx) = {(self.ny, self.nx)}"
                )
            if not np.all(np.isfinite(s0)) or np.any(s0 < 0.0) or np.any(s0 > 1.0):
                raise ParameterError("initial saturation must lie in [0, 1]")
            s0.flags.writeable = False
            object.__setattr__(self, "initial_water_saturation", s0)

    # -- well and control layout -------------------------------------------

    @property
    def injectors(self) -> tuple[WellSpec, ...]:
        return tuple(w for w in self.wells if w.kind == "injector")

    @property
    def producers(self) -> tuple[WellSpec, ...]:
        return tuple(w for w in self.wells if w.kind == "producer")

    @property
    def n_control_types(self) -> int:
        return 2 * len(self.injectors) + len(self.producers)

    @property
    def n_controls(self) -> int:
        return self.n_control_types * self.n_steps

    def control_names(self) -> tuple[str, ...]:
        names = []
        for w in self.injectors:
            names.append(f"{w.name}:rate")
            names.append(f"{w.name}:conc")
        for w in self.producers:
            names.append(f"{w.name}:rate")
        return tuple(names)

    def control_bounds(self) -> ControlBounds:
        lo, hi = [], []
        for _ in self.injectors:
            lo.extend([self.injector_rate_bounds[0], self.concentration_bounds[0]])
            hi.extend([self.injector_rate_bounds[1], self.concentration_bounds[1]])
        for _ in self.producers:
            lo.append(self.producer_rate_bounds[0])
            hi.append(self.producer_rate_bounds[1])
        return ControlBounds(np.array(lo), np.array(hi), self.control_names())

    def constant_controls(
        self,
        injector_rate: float,
        polymer_concentration: float,
        producer_rate: float,
    ) -> ControlVector:
        """Constant-in-time schedule from one value per control type kind."""
        row = []
        for _ in self.injectors:
            row.extend([injector_rate, polymer_concentration])
        for _ in self.producers:
            row.append(producer_rate)
        values = np.tile(np.asarray(row, dtype=float), self.n_steps)
        u = ControlVector(values, self.n_control_types, self.n_steps)
        bounds = self.control_bounds()
        if not bounds.contains(u):
            raise ParameterError("constant controls violate the deck's bounds")
        return u

    def schedule(self, u: ControlVector) -> dict[str, np.ndarray]:
        """Per-step well rates from a flat control vector.

        Returns arrays over steps: injector rates (sm3/day) and concentrations
        (kg/sm3), shape (n_steps, n_injectors); producer rates (sm3/day),
        shape (n_steps, n_producers).
        """
        if u.n_wells != self.n_control_types or u.n_steps != self.n_steps:
            raise ShapeError(
                f"control layout ({u.n_wells}, {u.n_steps}) does not match the deck "
                f"({self.n_control_types}, {self.n_steps})"
            )
        mat = u.as_matrix()
        n_inj = len(self.injectors)
        inj_rates = mat[:, 0 : 2 * n_inj : 2]
        inj_concs = mat[:, 1 : 2 * n_inj : 2]
        prod_rates = mat[:, 2 * n_inj :]
        return {
            "injection_rate": inj_rates,
            "concentration": inj_concs,
            "production_rate": prod_rates,
        }

    def initial_saturation_field(self) -> np.ndarray:
        """Initial water saturation per cell (constant unless the deck overrides it)."""
        if self.initial_water_saturation is not None:
            return np.array(self.initial_water_saturation, dtype=float)
        return np.full((self.ny, self.nx), self.fluid.initial_sw)

    def cell_volume(self) -> float:
        return self.dx * self.dy * self.dz

    def pore_volume(self) -> np.ndarray:
        return self.cell_volume() * self.porosity

    def times_days(self) -> np.ndarray:
        """End time of each control step, in days."""
        return self.step_days * np.arange(1, self.n_steps + 1)


# ---------------------------------------------------------------------------
# deck files
# ---------------------------------------------------------------------------


def _field_from_spec(spec, ny: int, nx: int, *, unit: float = 1.0, what: str = "field"):
    """Grid array from a scalar, a nested list, or a generator mapping."""
    if isinstance(spec, (int, float)):
        return np.full((ny, nx), float(spec) * unit)
    if isinstance(spec, list):
        arr = np.asarray(spec, dtype=float) * unit
        if arr.shape != (ny, nx):
            raise ConfigError(
                f"{what}: expected shape ({ny}, {nx}), got {arr.shape}"
            )
        return arr
    if isinstance(spec, dict):
        kind = spec.get("generator")
        if kind != "lognormal":
            raise ConfigError(f"{what}: unknown generator {kind!r}")
        median = float(spec["median"])
        log_std = float(spec.get("log_std", 1.0))
        corr = float(spec.get("correlation_cells", 0.0))
        seed = int(spec["seed"])
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal((ny, nx))
        if corr > 0.0:
            noise = gaussian_filter(noise, sigma=corr, mode="nearest")
            noise = (noise - noise.mean()) / max(noise.std(), 1e-12)
        return np.exp(np.log(median) + log_std * noise) * unit
    raise ConfigError(f"{what}: cannot interpret {type(spec).__name__}")


def _well_from_mapping(entry: dict) -> WellSpec:
    try:
        cell = entry["cell"]
        return WellSpec(
            name=str(entry["name"]),
            kind=str(entry["kind"]),
            ix=int(cell[0]),
            iy=int(cell[1]),
            radius=float(entry.get("radius", 0.1)),
            bhp_limit_bar=(
                float(entry["bhp_limit_bar"]) if "bhp_limit_bar" in entry else None
            ),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ConfigError(f"malformed well entry {entry!r}") from exc


def _params_from(section: dict, cls, renames: dict[str, str] | None = None):
    renames = renames or {}
    kwargs = {renames.get(k, k): v for k, v in section.items()}
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad {cls.__name__} section: {exc}") from exc


def load_deck(path: str | Path) -> tuple[ReservoirModel, EconParams]:
    """Read a YAML deck into a model plus its economics."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read deck {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"deck {path} must be a mapping")
    try:
        grid = doc["grid"]
        nx, ny = int(grid["nx"]), int(grid["ny"])
        rock = doc["rock"]
        porosity = _field_from_spec(rock["porosity"], ny, nx, what="porosity")
        permeability = _field_from_spec(
            rock["permeability_md"], ny, nx, unit=MILLIDARCY, what="permeability"
        )
        initial_sw = None
        if "initial_sw" in rock:
            initial_sw = _field_from_spec(rock["initial_sw"], ny, nx, what="initial_sw")
        wells = tuple(_well_from_mapping(w) for w in doc["wells"])
        controls = doc["controls"]
        model = ReservoirModel(
            nx=nx,
            ny=ny,
            dx=float(grid["dx"]),
            dy=float(grid["dy"]),
            dz=float(grid["dz"]),
            porosity=porosity,
            permeability=permeability,
            fluid=_params_from(doc.get("fluids", {}), FluidParams),
            polymer=_params_from(
                doc.get("polymer", {}), PolymerParams, renames={"rrf": "residual_resistance"}
            ),
            numerics=_params_from(doc.get("numerics", {}), NumericsParams),
            wells=wells,
            n_steps=int(controls["n_steps"]),
            step_days=float(controls["step_days"]),
            injector_rate_bounds=tuple(controls["injector_rate_bounds"]),
            concentration_bounds=tuple(controls["concentration_bounds"]),
            producer_rate_bounds=tuple(controls["producer_rate_bounds"]),
            initial_water_saturation=initial_sw,
            name=str(doc.get("name", path.stem)),
        )
        econ = _params_from(doc.get("economics", {}), EconParams)
    except KeyError as exc:
        raise ConfigError(f"deck {path} misses required key {exc}") from exc
    except (ParameterError, ShapeError) as exc:
        raise ConfigError(f"deck {path} is invalid: {exc}") from exc
    return model, econ


def builtin_deck_path(name: str) -> Path:
    """Filesystem path of a deck shipped with the package."""
    resource = importlib.resources.files("floodopt") / "decks" / f"{name}.yaml"
    with importlib.resources.as_file(resource) as p:
        if not p.exists():
            raise ConfigError(f"no builtin deck named {name!r}")
        return Path(p)
