"""Surrogate-accelerated ensemble optimization with full-model certification.

The driver alternates between single full-model optimizer steps (whose
perturbation ensembles double as training data), network training, and cheap
inner ensemble-optimization runs on the trained surrogate.  Every stopping and
acceptance decision is made on full-model values: an outer iterate is kept
only if the true objective improves beyond the outer tolerance, and the run
stops as soon as a full-model step fails to improve.  The inner loop never
touches the full model — an invariant this module both enforces and records
so it can be audited from the trace alone.

All optimizer arithmetic happens in unit-cube control coordinates (objective
values stay in natural units); tolerances optionally act on values rescaled
by the spread seen so far, mirroring the ensemble optimizer's convention.
"""

from __future__ import annotations

import dataclasses
import hashlib
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .controls import ControlBounds, ControlVector, scale_to_unit, unscale_from_unit
from .enopt import (
    EnOptConfig,
    ScaledControlObjective,
    _as_cached,
    derive_seed,
    enopt,
    opt_step,
)
from .errors import (
    ConfigError,
    ConsistencyError,
    ParameterError,
    StationaryEnsembleError,
    TrainingError,
)
from .surrogate import (
    NetworkArchitecture,
    TrainerConfig,
    make_surrogate,
    train_on_scaled,
)
from .trace import Trace

__all__ = [
    "AmlConfig",
    "AmlResult",
    "aml_enopt",
    "certify",
    "CertificationCheck",
    "CertificationReport",
]

logger = logging.getLogger(__name__)

VARIANTS = ("scalar", "vector")


@dataclass(frozen=True)
class AmlConfig:
    """Knobs of the surrogate-accelerated driver.

    ``outer_tolerance`` gates full-model stopping and acceptance;
    ``inner_tolerance``/``max_inner`` govern the surrogate-based runs.  The
    ensemble settings in ``enopt`` (sample size, step schedule, perturbation
    covariance) are shared by the outer full-model steps and the inner runs.
    ``variant`` selects a scalar-output network fit to the objective value or
    a vector-output network fit to the per-step components.
    """

    outer_tolerance: float = 1e-2
    inner_tolerance: float = 1e-6
    max_outer: int = 8
    max_inner: int = 30
    variant: str = "scalar"
    hidden_layers: tuple[int, ...] = (25, 25)
    activation: str = "tanh"
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    enopt: EnOptConfig = field(default_factory=EnOptConfig)
    relative_tolerances: bool = True
    accumulate_training: bool = False

    def __post_init__(self):
        if self.outer_tolerance <= 0.0 or self.inner_tolerance <= 0.0:
            raise ParameterError("tolerances must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ParameterError("iteration caps must be >= 1")
        if self.variant not in VARIANTS:
            raise ParameterError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not self.hidden_layers or any(int(h) < 1 for h in self.hidden_layers):
            raise ParameterError("hidden layers must be positive sizes")
        object.__setattr__(self, "hidden_layers", tuple(int(h) for h in self.hidden_layers))
        if self.outer_tolerance < self.inner_tolerance:
            logger.warning(
                "outer tolerance %g is below the inner tolerance %g; the inner "
                "runs will chase improvements the outer check cannot certify",
                self.outer_tolerance,
                self.inner_tolerance,
            )


@dataclass(frozen=True)
class AmlResult:
    """Final iterate plus audit data for the whole run.

    ``control`` is the last accepted iterate in natural units; ``best_*`` is
    the best full-model value ever observed (possibly an ensemble member
    rather than an iterate).  ``training_sets`` holds the per-outer-iteration
    (scaled control, target) pairs, in the order they were generated.
    """

    control: ControlVector
    value: float
    best_control: ControlVector
    best_value: float
    status: str
    outer_iterations: int
    accepted_steps: int
    fom_evaluations: int
    surrogate_evaluations: int
    trace: Trace
    training_sets: tuple[tuple[tuple[ControlVector, Any], ...], ...]


def _training_arrays(
    pairs: Sequence[tuple[ControlVector, Any]],
) -> tuple[np.ndarray, np.ndarray]:
    X = np.stack([member.values for member, _ in pairs])
    Y = np.stack([np.atleast_1d(np.asarray(target, dtype=float)) for _, target in pairs])
    return X, Y


def _digest(array: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(array).tobytes()).hexdigest()


def aml_enopt(
    J,
    u_0: ControlVector,
    cfg: AmlConfig,
    bounds: ControlBounds,
    *,
    workers: int = 1,
    trace: Trace | None = None,
    trace_fields: dict | None = None,
) -> AmlResult:
    """Run the adaptive surrogate-accelerated optimizer from ``u_0``.

    ``J`` is the expensive objective in natural units; ``u_0`` must lie inside
    ``bounds``.  Returns the last accepted iterate (never a worse one: a
    candidate that fails the full-model acceptance check is discarded and the
    run ends).  Raises :class:`TrainingError` (with the partial trace attached
    as ``exc.trace``) if a surrogate cannot be trained at all.
    """
    want_components = cfg.variant == "vector"
    if want_components and not J.has_components:
        raise ConfigError(
            "vector variant needs an objective with per-step components"
        )
    if want_components and J.delta is None:
        raise ConfigError("vector variant needs the objective's discount weights")

    J_scaled = _as_cached(ScaledControlObjective(J, bounds))
    x = ControlVector(scale_to_unit(u_0, bounds), u_0.n_wells, u_0.n_steps)
    unit_box = ControlBounds.unit(u_0.n_wells)

    n_outputs = u_0.n_steps if want_components else 1
    arch = NetworkArchitecture(
        (len(u_0), *cfg.hidden_layers, n_outputs), cfg.activation
    )

    outer_cfg = dataclasses.replace(
        cfg.enopt,
        tolerance=cfg.outer_tolerance,
        relative_tolerance=cfg.relative_tolerances,
    )
    inner_base = dataclasses.replace(
        cfg.enopt,
        tolerance=cfg.inner_tolerance,
        max_iterations=cfg.max_inner,
        relative_tolerance=cfg.relative_tolerances,
    )
    seed = cfg.enopt.rng_seed
    cov = outer_cfg.covariance_state(x)

    if trace is None:
        header = {
            "algorithm": f"aml-enopt-{cfg.variant[0]}",
            "objective": J.name,
            **(trace_fields or {}),
            "variant": cfg.variant,
            "outer_tolerance": cfg.outer_tolerance,
            "inner_tolerance": cfg.inner_tolerance,
            "relative_tolerances": cfg.relative_tolerances,
            "max_outer": cfg.max_outer,
            "max_inner": cfg.max_inner,
            "sample_size": cfg.enopt.sample_size,
            "hidden_layers": list(cfg.hidden_layers),
            "activation": cfg.activation,
            "trainer_restarts": cfg.trainer.restarts,
            "rng_seed": seed,
        }
        trace = Trace(**header)
    t_start = time.perf_counter()

    def _raw(xc: ControlVector) -> ControlVector:
        return unscale_from_unit(xc.values, bounds)

    def _optstep(x_k: ControlVector, k: int):
        return opt_step(
            J_scaled,
            x_k,
            k,
            outer_cfg,
            unit_box,
            cov,
            derive_seed(seed, 0, k),
            workers=workers,
            want_components=want_components,
        )

    status: str | None = None
    accepted = 0
    surrogate_evals = 0
    training_sets: list[tuple] = []
    k = 0

    try:
        step = _optstep(x, 0)
    except StationaryEnsembleError:
        value_0 = J_scaled.evaluate(x)
        trace.append(
            k=0,
            control=_raw(x).values.tolist(),
            objective=value_0,
            fom_evaluations=J_scaled.evaluations,
            wall_time_s=time.perf_counter() - t_start,
        )
        status = "stationary-ensemble"
        step = None
    else:
        tilde_x = step.next_control
        training_sets.append(step.training_pairs)

    while status is None:
        row: dict[str, Any] = {
            "k": k,
            "control": _raw(x).values.tolist(),
            "objective": J_scaled.evaluate(x),
            "tilde_control": _raw(tilde_x).values.tolist(),
            "tilde_objective": J_scaled.evaluate(tilde_x),
            "optstep_evaluations": step.new_evaluations,
            "optstep_failed_members": step.failed_members,
            "optstep_line_search_trials": step.line_search.trials,
            "optstep_step_scale": step.line_search.step_scale,
        }
        eps_stop = outer_cfg.effective_tolerance(J_scaled)
        stop_passed = row["tilde_objective"] > row["objective"] + eps_stop
        row["stop_tolerance"] = eps_stop
        row["stop_passed"] = stop_passed
        if not stop_passed:
            status = "fom-stationary"
        elif k >= cfg.max_outer:
            status = "max-outer"
        if status is not None:
            row["fom_evaluations"] = J_scaled.evaluations
            row["surrogate_evaluations"] = surrogate_evals
            row["wall_time_s"] = time.perf_counter() - t_start
            trace.append(**row)
            break

        # train the surrogate for this outer iteration
        if cfg.accumulate_training:
            pairs: tuple = tuple(p for ts in training_sets for p in ts)
        else:
            pairs = training_sets[-1]
        X, Y = _training_arrays(pairs)
        row["training_pairs"] = X.shape[0]
        row["training_inputs_digest"] = _digest(X)
        row["training_targets_digest"] = _digest(Y)
        trainer_cfg = dataclasses.replace(cfg.trainer, rng_seed=derive_seed(seed, 2, k))
        try:
            weights, scaling, report = train_on_scaled(X, Y, arch, trainer_cfg)
        except TrainingError as exc:
            row["training_failed"] = True
            row["wall_time_s"] = time.perf_counter() - t_start
            trace.append(**row)
            trace.finish(
                status="training-failed",
                outer_iterations=k,
                accepted_steps=accepted,
                fom_evaluations=J_scaled.evaluations,
                surrogate_evaluations=surrogate_evals,
            )
            exc.trace = trace
            raise
        row["training_loss"] = report.selected.train_loss
        row["validation_loss"] = report.selected.validation_loss
        row["selected_restart"] = report.selected_restart

        surrogate = make_surrogate(
            weights,
            arch,
            unit_box,
            scaling,
            cfg.variant,
            delta=J.delta if want_components else None,
            name=f"surrogate[{k}]",
        )

        # inner run on the surrogate only; audit the full-model counter around it
        fom_at_inner_start = J_scaled.evaluations
        inner_cfg = dataclasses.replace(inner_base, rng_seed=derive_seed(seed, 1, k))
        inner = enopt(
            surrogate,
            x,
            inner_cfg,
            unit_box,
            cov_state=cov.clone(),
            workers=1,
        )
        fom_at_inner_end = J_scaled.evaluations
        if fom_at_inner_end != fom_at_inner_start:
            raise ConsistencyError(
                "full-model evaluations occurred inside the inner surrogate run"
            )
        surrogate_evals += surrogate.evaluations
        row["inner_iterations"] = inner.iterations
        row["inner_status"] = inner.status
        row["surrogate_value"] = inner.value
        row["fom_at_inner_start"] = fom_at_inner_start
        row["fom_at_inner_end"] = fom_at_inner_end

        # full-model acceptance check of the inner result
        candidate = inner.control
        candidate_value = J_scaled.evaluate(candidate)
        eps_accept = outer_cfg.effective_tolerance(J_scaled)
        accept = candidate_value > row["objective"] + eps_accept
        row["candidate_objective"] = candidate_value
        row["acceptance_tolerance"] = eps_accept
        row["acceptance_passed"] = accept
        if not accept:
            status = "surrogate-step-rejected"
            row["fom_evaluations"] = J_scaled.evaluations
            row["surrogate_evaluations"] = surrogate_evals
            row["wall_time_s"] = time.perf_counter() - t_start
            trace.append(**row)
            break

        accepted += 1
        x = candidate
        try:
            step = _optstep(x, k + 1)
        except StationaryEnsembleError:
            status = "stationary-ensemble"
            row["fom_evaluations"] = J_scaled.evaluations
            row["surrogate_evaluations"] = surrogate_evals
            row["wall_time_s"] = time.perf_counter() - t_start
            trace.append(**row)
            break
        tilde_x = step.next_control
        training_sets.append(step.training_pairs)
        row["fom_evaluations"] = J_scaled.evaluations
        row["surrogate_evaluations"] = surrogate_evals
        row["wall_time_s"] = time.perf_counter() - t_start
        trace.append(**row)
        k += 1

    value = J_scaled.evaluate(x)
    best_value, best_scaled = J_scaled.best
    trace.finish(
        status=status,
        outer_iterations=k,
        accepted_steps=accepted,
        control=_raw(x).values.tolist(),
        objective=value,
        best_objective=best_value,
        best_control=_raw(best_scaled).values.tolist(),
        fom_evaluations=J_scaled.evaluations,
        surrogate_evaluations=surrogate_evals,
        wall_time_s=time.perf_counter() - t_start,
    )
    return AmlResult(
        control=_raw(x),
        value=value,
        best_control=_raw(best_scaled),
        best_value=best_value,
        status=status,
        outer_iterations=k,
        accepted_steps=accepted,
        fom_evaluations=J_scaled.evaluations,
        surrogate_evaluations=surrogate_evals,
        trace=trace,
        training_sets=tuple(training_sets),
    )


# ---------------------------------------------------------------------------
# trace certification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CertificationCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class CertificationReport:
    """Outcome of auditing a finished run's trace.

    ``passed`` means every recorded acceptance was a genuine full-model
    improvement, no full-model evaluation happened inside an inner run, the
    counters are monotone, and the recorded termination status matches the
    recorded decision flags.
    """

    passed: bool
    status: str
    outer_iterations: int
    accepted_steps: int
    fom_evaluations: int | None
    best_objective: float | None
    best_control: list | None
    checks: tuple[CertificationCheck, ...]

    def failures(self) -> list[CertificationCheck]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "status": self.status,
            "outer_iterations": self.outer_iterations,
            "accepted_steps": self.accepted_steps,
            "fom_evaluations": self.fom_evaluations,
            "best_objective": self.best_objective,
            "best_control": self.best_control,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail}
                for c in self.checks
            ],
        }


def _records_of(trace) -> list[dict]:
    if isinstance(trace, Trace):
        return trace.records()
    return list(trace)


def certify(trace) -> CertificationReport:
    """Audit a finished run from its trace records alone.

    Accepts a :class:`Trace` or the equivalent list of record dicts (e.g.
    parsed back from disk), so certification works on artifacts, not on
    in-process state.
    """
    records = _records_of(trace)
    header = next((r for r in records if r.get("record") == "header"), None)
    rows = [r for r in records if r.get("record") == "iteration"]
    result = next((r for r in records if r.get("record") == "result"), None)
    checks: list[CertificationCheck] = []

    def check(name: str, passed: bool, detail: str = "") -> None:
        checks.append(CertificationCheck(name, bool(passed), detail))

    check("has-header", header is not None)
    check("has-result", result is not None)
    check("has-iterations", bool(rows))
    status = (result or {}).get("status", "missing")

    # every recorded acceptance is a real improvement beyond its tolerance
    bad_accept = [
        r["k"]
        for r in rows
        if r.get("acceptance_passed")
        and not (
            r["candidate_objective"] > r["objective"] + r["acceptance_tolerance"]
        )
    ]
    check(
        "accepted-steps-improve",
        not bad_accept,
        f"acceptance flag contradicts values at k={bad_accept}" if bad_accept else "",
    )
    false_accept = [
        r["k"]
        for r in rows
        if "acceptance_passed" in r
        and not r["acceptance_passed"]
        and (r["candidate_objective"] > r["objective"] + r["acceptance_tolerance"])
    ]
    check(
        "rejections-consistent",
        not false_accept,
        f"rejection contradicts values at k={false_accept}" if false_accept else "",
    )

    # accepted chain is monotone: next row starts from the accepted candidate
    chain_breaks = []
    for prev, nxt in zip(rows, rows[1:]):
        if prev.get("acceptance_passed"):
            if nxt["objective"] != prev["candidate_objective"]:
                chain_breaks.append(nxt["k"])
    check(
        "iterate-chain-consistent",
        not chain_breaks,
        f"iterate does not match the accepted candidate at k={chain_breaks}"
        if chain_breaks
        else "",
    )

    # the inner runs never touched the full model
    leaky = [
        r["k"]
        for r in rows
        if "fom_at_inner_start" in r
        and r["fom_at_inner_end"] != r["fom_at_inner_start"]
    ]
    check(
        "no-fom-inside-inner",
        not leaky,
        f"full-model counter moved during inner run at k={leaky}" if leaky else "",
    )

    # counters are monotone
    fom_counts = [r["fom_evaluations"] for r in rows if "fom_evaluations" in r]
    check(
        "fom-counter-monotone",
        all(a <= b for a, b in zip(fom_counts, fom_counts[1:])),
    )
    sur_counts = [r["surrogate_evaluations"] for r in rows if "surrogate_evaluations" in r]
    check(
        "surrogate-counter-monotone",
        all(a <= b for a, b in zip(sur_counts, sur_counts[1:])),
    )

    # termination status matches the recorded decision flags
    last = rows[-1] if rows else {}
    if status == "fom-stationary":
        check("status-matches-flags", last.get("stop_passed") is False)
    elif status == "surrogate-step-rejected":
        check("status-matches-flags", last.get("acceptance_passed") is False)
    elif status == "max-outer":
        cap = (header or {}).get("max_outer")
        check("status-matches-flags", cap is not None and last.get("k") == cap)
    elif status in ("stationary-ensemble", "training-failed"):
        check("status-matches-flags", True)
    else:
        check("status-matches-flags", False, f"unknown status {status!r}")

    accepted = sum(1 for r in rows if r.get("acceptance_passed"))
    if result is not None and "accepted_steps" in result:
        check(
            "accepted-count-matches-result",
            result["accepted_steps"] == accepted,
            f"trace shows {accepted}, result claims {result['accepted_steps']}",
        )

    return CertificationReport(
        passed=all(c.passed for c in checks),
        status=status,
        outer_iterations=(result or {}).get("outer_iterations", len(rows)),
        accepted_steps=accepted,
        fom_evaluations=(result or {}).get("fom_evaluations"),
        best_objective=(result or {}).get("best_objective"),
        best_control=(result or {}).get("best_control"),
        checks=tuple(checks),
    )
