"""Two-phase incompressible polymer-flooding proxy on a 2-D areal grid.

Sequential solution scheme: total-velocity face fluxes come from a five-point
finite-volume pressure solve with harmonic-mean transmissibilities and are
frozen over a short "pressure window"; water saturation and dissolved polymer
are then advanced explicitly inside the window with upwind fluxes under a CFL
limit.  Wells are rate-controlled sources; per control step the injection and
production totals are balanced down to the smaller side so the incompressible
system stays consistent.  Polymer thickens water through a Todd-Longstaff
mixing rule, adsorbs onto rock (linear, capped, reversible), reduces water
mobility through a residual-resistance factor, and is excluded from a dead
fraction of the pore space (which speeds up its front relative to water).

Everything is deterministic: no randomness, no threading, pure numpy/scipy,
so identical inputs give bit-identical results.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from ..controls import ControlVector
from ..errors import ConsistencyError, ParameterError, ShapeError, SimulationError
from .model import BAR, DAY_SECONDS, ReservoirModel

__all__ = ["SimulationResult", "simulate"]

logger = logging.getLogger(__name__)

#: how far saturations may stray outside [0, 1] before the run is aborted
SATURATION_SLACK = 1e-9

#: safety factor applied to the numerically estimated fractional-flow slope
_SLOPE_MARGIN = 1.05
_SLOPE_SAMPLES = 8001


@dataclass
class SimulationResult:
    """Per-control-step totals plus final state and balance diagnostics.

    Volume totals are surface volumes (sm3 == m3 here, incompressible);
    polymer totals are kilograms.  ``bhp_bar`` columns follow the order of
    ``well_names``.  Final state arrays have shape (ny, nx).
    """

    well_names: tuple[str, ...]
    times_days: np.ndarray  # (n_steps,) end of each control step
    oil_produced: np.ndarray  # (n_steps,)
    water_produced: np.ndarray
    water_injected: np.ndarray
    gas_produced: np.ndarray  # identically zero in this proxy
    polymer_injected: np.ndarray  # kg
    polymer_produced: np.ndarray  # kg
    injection_rates: np.ndarray  # (n_steps, n_injectors) applied sm3/day
    concentrations: np.ndarray  # (n_steps, n_injectors) kg/sm3
    production_rates: np.ndarray  # (n_steps, n_producers) applied sm3/day
    bhp_bar: np.ndarray  # (n_steps, n_wells), time-averaged per step
    final_water_saturation: np.ndarray
    final_concentration: np.ndarray  # kg per m3 of accessible water
    final_adsorbed: np.ndarray  # kg polymer per kg rock
    water_balance_error: float
    polymer_balance_error: float
    n_substeps: int
    n_pressure_solves: int
    substeps_per_step: np.ndarray  # (n_steps,) int

    @property
    def total_oil_produced(self) -> float:
        return float(self.oil_produced.sum())

    @property
    def total_water_injected(self) -> float:
        return float(self.water_injected.sum())

    @property
    def total_polymer_injected(self) -> float:
        return float(self.polymer_injected.sum())


# ---------------------------------------------------------------------------
# fluid property helpers
# ---------------------------------------------------------------------------


def _relative_permeabilities(model: ReservoirModel, sw):
    f = model.fluid
    span = 1.0 - f.swr - f.sor
    se = np.clip((sw - f.swr) / span, 0.0, 1.0)
    krw = f.krw_end * se**f.corey_water
    kro = f.kro_end * (1.0 - se) ** f.corey_oil
    return krw, kro


def _effective_water_viscosity(model: ReservoirModel, conc):
    """Todd-Longstaff blend of polymer-thickened and fresh water."""
    poly = model.polymer
    mu_w = model.fluid.mu_water
    cbar = np.clip(conc / poly.max_concentration, 0.0, 1.0)
    mu_fully_mixed = mu_w * (1.0 + poly.viscosity_multiplier * cbar * poly.max_concentration)
    mu_polymer_max = mu_w * (1.0 + poly.viscosity_multiplier * poly.max_concentration)
    omega = poly.mixing_omega
    mu_polymer_eff = mu_fully_mixed**omega * mu_polymer_max ** (1.0 - omega)
    mu_water_eff = mu_fully_mixed**omega * mu_w ** (1.0 - omega)
    inverse = (1.0 - cbar) / mu_water_eff + cbar / mu_polymer_eff
    return 1.0 / inverse


def _mobilities(model: ReservoirModel, sw, conc):
    """Water/oil mobilities (without absolute permeability) and water cut."""
    poly = model.polymer
    krw, kro = _relative_permeabilities(model, sw)
    resistance = 1.0 + (poly.residual_resistance - 1.0) * np.clip(
        conc / poly.max_concentration, 0.0, 1.0
    )
    lam_w = krw / (_effective_water_viscosity(model, conc) * resistance)
    lam_o = kro / model.fluid.mu_oil
    fw = lam_w / (lam_w + lam_o)
    return lam_w, lam_o, fw


def _max_fractional_flow_slope(model: ReservoirModel) -> float:
    """Upper bound on |dfw/dsw|, taken at zero polymer (the most mobile water).

    Polymer only thickens water and adds flow resistance, which flattens the
    fractional-flow curve, so the polymer-free slope bounds every state the
    simulation can reach.
    """
    f = model.fluid
    s = np.linspace(f.swr, 1.0 - f.sor, _SLOPE_SAMPLES)
    _, _, fw = _mobilities(model, s, np.zeros_like(s))
    slope = float(np.max(np.abs(np.diff(fw) / np.diff(s))))
    return max(slope * _SLOPE_MARGIN, 1e-12)


# ---------------------------------------------------------------------------
# pressure solve
# ---------------------------------------------------------------------------


def _face_transmissibilities(model: ReservoirModel, lam_t):
    """Harmonic-mean conductances for east (ny, nx-1) and south (ny-1, nx) faces."""
    kl = model.permeability * lam_t
    ax, ay = model.dy * model.dz / model.dx, model.dx * model.dz / model.dy
    tx = ax * 2.0 * kl[:, :-1] * kl[:, 1:] / (kl[:, :-1] + kl[:, 1:])
    ty = ay * 2.0 * kl[:-1, :] * kl[1:, :] / (kl[:-1, :] + kl[1:, :])
    return tx, ty


def _solve_pressure(model: ReservoirModel, lam_t, source, step: int):
    """Cell pressures (zero mean) and signed face fluxes for given sources.

    The incompressible system is singular (pressure defined up to a constant)
    and is closed with one Lagrange-multiplier row/column pinning the mean
    pressure to zero; per-cell flux balance is preserved exactly, the datum is
    reapplied only when reporting well pressures.
    """
    ny, nx = model.ny, model.nx
    n = ny * nx
    tx, ty = _face_transmissibilities(model, lam_t)
    idx = np.arange(n).reshape(ny, nx)

    west, east = idx[:, :-1].ravel(), idx[:, 1:].ravel()
    north, south = idx[:-1, :].ravel(), idx[1:, :].ravel()
    txf, tyf = tx.ravel(), ty.ravel()

    rows = np.concatenate(
        [west, east, west, east, north, south, north, south, np.arange(n), np.full(n, n)]
    )
    cols = np.concatenate(
        [west, east, east, west, north, south, south, north, np.full(n, n), np.arange(n)]
    )
    data = np.concatenate(
        [txf, txf, -txf, -txf, tyf, tyf, -tyf, -tyf, np.ones(n), np.ones(n)]
    )
    matrix = scipy.sparse.coo_matrix((data, (rows, cols)), shape=(n + 1, n + 1)).tocsc()
    rhs = np.append(source.ravel(), 0.0)
    solution = scipy.sparse.linalg.spsolve(matrix, rhs)
    if not np.all(np.isfinite(solution)):
        raise SimulationError(
            "pressure solve produced non-finite values", step=step, reason="pressure-solve"
        )
    pressure = solution[:n].reshape(ny, nx)
    flux_x = tx * (pressure[:, :-1] - pressure[:, 1:])
    flux_y = ty * (pressure[:-1, :] - pressure[1:, :])
    return pressure, flux_x, flux_y


def _well_indices(model: ReservoirModel):
    """Peaceman well index per well (isotropic, square-grid equivalent radius)."""
    r_eq = 0.14 * np.hypot(model.dx, model.dy)
    wi = []
    for w in model.wells:
        if w.radius >= r_eq:
            raise ParameterError(
                f"well {w.name} radius {w.radius} m is not small against the "
                f"equivalent cell radius {r_eq:.3g} m"
            )
        wi.append(2.0 * np.pi * model.permeability[w.iy, w.ix] * model.dz / np.log(r_eq / w.radius))
    return np.asarray(wi)


# ---------------------------------------------------------------------------
# main driver
# ---------------------------------------------------------------------------


def _as_control_vector(model: ReservoirModel, controls) -> ControlVector:
    if isinstance(controls, ControlVector):
        return controls
    values = np.asarray(controls, dtype=float)
    if values.shape != (model.n_controls,):
        raise ShapeError(
            f"expected {model.n_controls} controls for deck {model.name!r}, "
            f"got shape {values.shape}"
        )
    return ControlVector(values, model.n_control_types, model.n_steps)


def _validate_schedule(schedule: dict) -> None:
    for key, arr in schedule.items():
        if not np.all(np.isfinite(arr)):
            raise SimulationError(f"schedule {key} contains non-finite entries", reason="controls")
        if np.any(arr < 0.0):
            raise SimulationError(f"schedule {key} contains negative entries", reason="controls")


def simulate(model: ReservoirModel, controls) -> SimulationResult:
    """Run the proxy simulator over the full control schedule.

    ``controls`` is a :class:`ControlVector` (or flat array) in the deck's
    layout: per control step, injector (rate, concentration) pairs followed by
    producer rates.  Raises :class:`SimulationError` on solver breakdown and
    :class:`ConsistencyError` if the state leaves its physical bounds.
    """
    u = _as_control_vector(model, controls)
    schedule = model.schedule(u)
    _validate_schedule(schedule)

    fluid, poly, numerics = model.fluid, model.polymer, model.numerics
    ny, nx = model.ny, model.nx
    pore_volume = model.pore_volume()
    accessible = 1.0 - poly.dead_pore_space
    c_max = poly.max_concentration
    # adsorption capacity per cell (kg of polymer at full coverage)
    rock_mass = model.cell_volume() * (1.0 - model.porosity) * poly.rock_density
    adsorption_cap = rock_mass * poly.max_adsorption

    sw = model.initial_saturation_field()
    conc = np.zeros((ny, nx))
    initial_water = float((pore_volume * sw).sum())

    slope_bound = _max_fractional_flow_slope(model)
    cfl = numerics.cfl
    conc_cfl = cfl * accessible / (1.0 + cfl * accessible)
    p_datum = numerics.initial_pressure_bar * BAR

    injectors, producers = model.injectors, model.producers
    inj_cells = (np.array([w.iy for w in injectors]), np.array([w.ix for w in injectors]))
    prod_cells = (np.array([w.iy for w in producers]), np.array([w.ix for w in producers]))
    well_cells = (np.array([w.iy for w in model.wells]), np.array([w.ix for w in model.wells]))
    well_sign = np.array([1.0 if w.kind == "injector" else -1.0 for w in model.wells])
    # positions of the injector/producer sublists within the full well list
    inj_slots = np.array([i for i, w in enumerate(model.wells) if w.kind == "injector"])
    prod_slots = np.array([i for i, w in enumerate(model.wells) if w.kind == "producer"])
    well_index = _well_indices(model)

    n_steps = model.n_steps
    step_seconds = model.step_days * DAY_SECONDS
    window_seconds = min(numerics.max_pressure_dt_days * DAY_SECONDS, step_seconds)

    oil_prod = np.zeros(n_steps)
    water_prod = np.zeros(n_steps)
    water_inj = np.zeros(n_steps)
    poly_inj = np.zeros(n_steps)
    poly_prod = np.zeros(n_steps)
    inj_applied = np.zeros((n_steps, len(injectors)))
    prod_applied = np.zeros((n_steps, len(producers)))
    bhp = np.zeros((n_steps, len(model.wells)))
    substeps = np.zeros(n_steps, dtype=int)
    n_pressure = 0

    for step in range(n_steps):
        inj_rate = schedule["injection_rate"][step] / DAY_SECONDS  # m3/s
        prod_rate = schedule["production_rate"][step] / DAY_SECONDS
        c_inj = schedule["concentration"][step]

        total_inj, total_prod = inj_rate.sum(), prod_rate.sum()
        target = min(total_inj, total_prod)
        if target <= 0.0:
            # one side is shut; incompressible flow cannot move anything
            bhp[step, :] = p_datum / BAR
            continue
        q_inj = inj_rate * (target / total_inj)
        q_prod = prod_rate * (target / total_prod)
        inj_applied[step] = q_inj * DAY_SECONDS
        prod_applied[step] = q_prod * DAY_SECONDS

        source = np.zeros((ny, nx))
        source[inj_cells] += q_inj
        source[prod_cells] -= q_prod

        elapsed = 0.0
        while elapsed < step_seconds - 1e-6:
            window_end = min(elapsed + window_seconds, step_seconds)

            lam_w, lam_o, _ = _mobilities(model, sw, conc)
            lam_t = lam_w + lam_o
            pressure, flux_x, flux_y = _solve_pressure(model, lam_t, source, step)
            n_pressure += 1

            # well pressures from the window's solve (diagnostic only)
            q_well = np.empty(len(model.wells))
            q_well[inj_slots] = q_inj
            q_well[prod_slots] = q_prod
            cell_p = pressure[well_cells] + p_datum
            drawdown = q_well / (well_index * lam_t[well_cells])
            window_bhp = (cell_p + well_sign * drawdown) / BAR
            bhp[step, :] += window_bhp * (window_end - elapsed)

            # total outflux per cell is frozen with the fluxes
            outflux = np.zeros((ny, nx))
            outflux[:, :-1] += np.maximum(flux_x, 0.0)
            outflux[:, 1:] += np.maximum(-flux_x, 0.0)
            outflux[:-1, :] += np.maximum(flux_y, 0.0)
            outflux[1:, :] += np.maximum(-flux_y, 0.0)
            outflux[prod_cells] += q_prod
            with np.errstate(divide="ignore"):
                dt_saturation = float(
                    np.min(
                        np.divide(
                            pore_volume,
                            outflux * slope_bound,
                            out=np.full((ny, nx), np.inf),
                            where=outflux > 0.0,
                        )
                    )
                )

            while elapsed < window_end - 1e-6:
                substeps[step] += 1
                if substeps[step] > numerics.max_substeps_per_step:
                    raise SimulationError(
                        f"more than {numerics.max_substeps_per_step} substeps in one "
                        f"control step (dt collapsed to "
                        f"{(window_end - elapsed) / DAY_SECONDS:.3g} days remaining)",
                        step=step,
                        reason="substep-limit",
                    )

                lam_w, lam_o, fw = _mobilities(model, sw, conc)

                fw_x = np.where(flux_x >= 0.0, fw[:, :-1], fw[:, 1:])
                fw_y = np.where(flux_y >= 0.0, fw[:-1, :], fw[1:, :])
                water_x = fw_x * flux_x
                water_y = fw_y * flux_y
                prod_fw = fw[prod_cells]
                prod_water = prod_fw * q_prod

                water_out = np.zeros((ny, nx))
                water_out[:, :-1] += np.maximum(water_x, 0.0)
                water_out[:, 1:] += np.maximum(-water_x, 0.0)
                water_out[:-1, :] += np.maximum(water_y, 0.0)
                water_out[1:, :] += np.maximum(-water_y, 0.0)
                water_out[prod_cells] += prod_water
                with np.errstate(divide="ignore"):
                    dt_concentration = float(
                        np.min(
                            np.divide(
                                pore_volume * sw,
                                water_out,
                                out=np.full((ny, nx), np.inf),
                                where=water_out > 0.0,
                            )
                        )
                    )

                dt = min(
                    cfl * dt_saturation,
                    conc_cfl * dt_concentration,
                    window_end - elapsed,
                )
                if not np.isfinite(dt) or dt <= 0.0:
                    dt = window_end - elapsed
                if dt <= 0.0:
                    raise SimulationError(
                        "time step collapsed to zero", step=step, reason="timestep-collapse"
                    )

                # water update
                net_water = np.zeros((ny, nx))
                net_water[:, :-1] -= water_x
                net_water[:, 1:] += water_x
                net_water[:-1, :] -= water_y
                net_water[1:, :] += water_y
                net_water[inj_cells] += q_inj
                net_water[prod_cells] -= prod_water
                sw_new = sw + dt * net_water / pore_volume

                # polymer update in mass form, then invert to concentration
                c_x = np.where(flux_x >= 0.0, conc[:, :-1], conc[:, 1:])
                c_y = np.where(flux_y >= 0.0, conc[:-1, :], conc[1:, :])
                poly_x = c_x * water_x
                poly_y = c_y * water_y
                net_poly = np.zeros((ny, nx))
                net_poly[:, :-1] -= poly_x
                net_poly[:, 1:] += poly_x
                net_poly[:-1, :] -= poly_y
                net_poly[1:, :] += poly_y
                net_poly[inj_cells] += c_inj * q_inj
                prod_poly = conc[prod_cells] * prod_water
                net_poly[prod_cells] -= prod_poly

                mass = (
                    accessible * pore_volume * sw * conc
                    + adsorption_cap * np.clip(conc / c_max, 0.0, 1.0)
                )
                mass_new = np.maximum(mass + dt * net_poly, 0.0)
                dissolved_coeff = accessible * pore_volume * sw_new
                kink = dissolved_coeff * c_max + adsorption_cap
                low = mass_new <= kink
                conc_new = np.zeros_like(mass_new)
                with np.errstate(divide="ignore", invalid="ignore"):
                    np.divide(
                        mass_new,
                        dissolved_coeff + adsorption_cap / c_max,
                        out=conc_new,
                        where=low & (mass_new > 0.0),
                    )
                    np.divide(
                        mass_new - adsorption_cap,
                        dissolved_coeff,
                        out=conc_new,
                        where=~low,
                    )

                if not (np.all(np.isfinite(sw_new)) and np.all(np.isfinite(conc_new))):
                    raise SimulationError(
                        "state update produced non-finite values",
                        step=step,
                        reason="non-finite-state",
                    )
                if (
                    float(sw_new.min()) < -SATURATION_SLACK
                    or float(sw_new.max()) > 1.0 + SATURATION_SLACK
                    or float(conc_new.min()) < -SATURATION_SLACK
                ):
                    raise ConsistencyError(
                        f"state left physical bounds (sw in [{sw_new.min():.12g}, "
                        f"{sw_new.max():.12g}], c_min {conc_new.min():.12g})",
                        step=step,
                        reason="state-bounds",
                    )

                water_inj[step] += q_inj.sum() * dt
                water_prod[step] += prod_water.sum() * dt
                oil_prod[step] += ((1.0 - prod_fw) * q_prod).sum() * dt
                poly_inj[step] += (c_inj * q_inj).sum() * dt
                poly_prod[step] += prod_poly.sum() * dt

                sw, conc = sw_new, conc_new
                elapsed += dt

        bhp[step, :] /= step_seconds

    logger.debug(
        "simulated %s: %d substeps, %d pressure solves",
        model.name,
        int(substeps.sum()),
        n_pressure,
    )
    adsorbed = poly.max_adsorption * np.clip(conc / c_max, 0.0, 1.0)
    final_water = float((pore_volume * sw).sum())
    water_residual = abs(
        (water_inj.sum() - water_prod.sum()) - (final_water - initial_water)
    )
    water_error = water_residual / max(water_inj.sum(), initial_water, 1.0)
    polymer_in_place = float(
        (accessible * pore_volume * sw * conc + rock_mass * adsorbed).sum()
    )
    polymer_residual = abs((poly_inj.sum() - poly_prod.sum()) - polymer_in_place)
    polymer_error = polymer_residual / max(poly_inj.sum(), polymer_in_place, 1.0)

    return SimulationResult(
        well_names=tuple(w.name for w in model.wells),
        times_days=model.times_days(),
        oil_produced=oil_prod,
        water_produced=water_prod,
        water_injected=water_inj,
        gas_produced=np.zeros(n_steps),
        polymer_injected=poly_inj,
        polymer_produced=poly_prod,
        injection_rates=inj_applied,
        concentrations=schedule["concentration"].copy(),
        production_rates=prod_applied,
        bhp_bar=bhp,
        final_water_saturation=sw,
        final_concentration=conc,
        final_adsorbed=adsorbed,
        water_balance_error=float(water_error),
        polymer_balance_error=float(polymer_error),
        n_substeps=int(substeps.sum()),
        n_pressure_solves=n_pressure,
        substeps_per_step=substeps,
    )
