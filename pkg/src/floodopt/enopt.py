"""Ensemble-based ascent on black-box objectives.

One optimizer step perturbs the current control with correlated Gaussian
noise, evaluates the objective on every perturbed control, and contracts the
ensemble statistics into the sample cross-covariance between controls and
objective values.  That vector is a smoothed, preconditioned gradient
estimate; normalized by its max norm it becomes the search direction for a
backtracking line search.  The outer loop repeats steps while each accepted
iterate improves the objective by more than the tolerance.

Objectives are wrapped in two thin layers: a counting base class whose
evaluation counter is the cost metric reported everywhere, and a memoization
wrapper keyed on the exact control bits so that criterion checks and repeated
iterates never re-run an expensive model.
"""

from __future__ import annotations

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .controls import (
    ControlBounds,
    ControlVector,
    project,
    scale_to_unit,
    unscale_from_unit,
)
from .covariance import AdaptiveCovariance, PerturbationEnsemble, sample_ensemble
from .errors import (
    ParameterError,
    ShapeError,
    SimulationError,
    StationaryEnsembleError,
)
from .trace import Trace

__all__ = [
    "Objective",
    "CallableObjective",
    "CachedObjective",
    "ScaledControlObjective",
    "EnOptConfig",
    "OptStepOutcome",
    "LineSearchOutcome",
    "EnOptResult",
    "cross_covariance",
    "search_direction",
    "line_search",
    "opt_step",
    "enopt",
    "evaluate_ensemble",
    "derive_seed",
]

logger = logging.getLogger(__name__)


def derive_seed(base: int, *key: int) -> int:
    """Deterministic child seed for a structured position in the run."""
    ss = np.random.SeedSequence(entropy=int(base), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# ---------------------------------------------------------------------------
# objectives
# ---------------------------------------------------------------------------


class Objective:
    """Black-box objective with an atomic evaluation counter.

    Subclasses implement :meth:`_evaluate_full` returning the scalar value and,
    when the model exposes them, the per-step components whose discounted sum
    equals the value.  Every call on this class runs the underlying model and
    increments the counter, including repeated calls on identical controls;
    memoization is the optimizer's job (:class:`CachedObjective`).  Thread-safe.
    """

    def __init__(
        self,
        *,
        name: str = "",
        delta: np.ndarray | None = None,
        fixed_value_range: float | None = None,
    ):
        self.name = name
        self._delta = None if delta is None else np.asarray(delta, dtype=float)
        self._fixed_value_range = fixed_value_range
        self._lock = threading.Lock()
        self._count = 0
        self._vmin: float | None = None
        self._vmax: float | None = None

    # subclass hook -------------------------------------------------------
    def _evaluate_full(self, u: ControlVector) -> tuple[float, np.ndarray | None]:
        raise NotImplementedError

    # public API ----------------------------------------------------------
    def evaluate_full(self, u: ControlVector) -> tuple[float, np.ndarray | None]:
        """Value and (if available) components; one counted model run."""
        value, components = self._evaluate_full(u)
        value = float(value)
        if not np.isfinite(value):
            raise SimulationError(
                f"objective {self.name or type(self).__name__} returned a "
                f"non-finite value"
            )
        with self._lock:
            self._count += 1
            if self._vmin is None or value < self._vmin:
                self._vmin = value
            if self._vmax is None or value > self._vmax:
                self._vmax = value
        return value, components

    def evaluate(self, u: ControlVector) -> float:
        return self.evaluate_full(u)[0]

    def evaluate_components(self, u: ControlVector) -> np.ndarray:
        components = self.evaluate_full(u)[1]
        if components is None:
            raise ParameterError(
                f"objective {self.name or type(self).__name__} has no components"
            )
        return np.asarray(components, dtype=float)

    @property
    def has_components(self) -> bool:
        return False

    @property
    def delta(self) -> np.ndarray | None:
        """Discount weights tying components to the scalar value."""
        return self._delta

    @property
    def evaluations(self) -> int:
        with self._lock:
            return self._count

    def value_range(self) -> float:
        """Spread of values seen so far (or a fixed range set at construction).

        Drivers use this to express tolerances in scaled objective units.
        """
        if self._fixed_value_range is not None:
            return float(self._fixed_value_range)
        with self._lock:
            if self._vmin is None:
                return 0.0
            return self._vmax - self._vmin


class CallableObjective(Objective):
    """Objective built from plain callables on the flat control values."""

    def __init__(
        self,
        fn: Callable[[np.ndarray], float],
        *,
        components_fn: Callable[[np.ndarray], np.ndarray] | None = None,
        delta: np.ndarray | None = None,
        name: str = "",
        fixed_value_range: float | None = None,
    ):
        super().__init__(name=name, delta=delta, fixed_value_range=fixed_value_range)
        self._fn = fn
        self._components_fn = components_fn

    def _evaluate_full(self, u: ControlVector) -> tuple[float, np.ndarray | None]:
        value = float(self._fn(u.values))
        components = None
        if self._components_fn is not None:
            components = np.asarray(self._components_fn(u.values), dtype=float)
        return value, components

    @property
    def has_components(self) -> bool:
        return self._components_fn is not None


class ScaledControlObjective:
    """View of an objective that accepts unit-cube controls.

    Evaluation counter, value range and components all belong to the wrapped
    objective; this class only translates coordinates, so audits against the
    underlying model's counter see through it.
    """

    def __init__(self, inner, bounds: ControlBounds):
        self._inner = inner
        self._bounds = bounds

    def raw_control(self, x: ControlVector) -> ControlVector:
        return unscale_from_unit(x.values, self._bounds)

    def scaled_control(self, u: ControlVector) -> ControlVector:
        return ControlVector(
            scale_to_unit(u, self._bounds), u.n_wells, u.n_steps
        )

    def evaluate_full(self, x: ControlVector) -> tuple[float, np.ndarray | None]:
        return self._inner.evaluate_full(self.raw_control(x))

    def evaluate(self, x: ControlVector) -> float:
        return self.evaluate_full(x)[0]

    def evaluate_components(self, x: ControlVector) -> np.ndarray:
        return self._inner.evaluate_components(self.raw_control(x))

    @property
    def name(self) -> str:
        return self._inner.name

    @property
    def has_components(self) -> bool:
        return self._inner.has_components

    @property
    def delta(self) -> np.ndarray | None:
        return self._inner.delta

    @property
    def evaluations(self) -> int:
        return self._inner.evaluations

    def value_range(self) -> float:
        return self._inner.value_range()


class CachedObjective:
    """Memoization wrapper keyed on the exact bits of the control values.

    Fresh evaluations hit the wrapped objective (and its counter); repeated
    controls are free.  The best value ever evaluated and its control are
    tracked with a deterministic tie-break on the control bytes, so callers
    can recover the argmax even when it was an ensemble member.
    """

    def __init__(self, inner):
        self._inner = inner
        self._lock = threading.Lock()
        self._cache: dict[bytes, tuple[float, np.ndarray | None]] = {}
        self._best_value: float | None = None
        self._best_control: ControlVector | None = None

    def evaluate_full(self, u: ControlVector) -> tuple[float, np.ndarray | None]:
        key = u.key()
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        value, components = self._inner.evaluate_full(u)
        with self._lock:
            self._cache[key] = (value, components)
            if (
                self._best_value is None
                or value > self._best_value
                or (value == self._best_value and key < self._best_control.key())
            ):
                self._best_value = value
                self._best_control = u
        return value, components

    def evaluate(self, u: ControlVector) -> float:
        return self.evaluate_full(u)[0]

    def evaluate_components(self, u: ControlVector) -> np.ndarray:
        components = self.evaluate_full(u)[1]
        if components is None:
            raise ParameterError(f"objective {self.name!r} has no components")
        return np.asarray(components, dtype=float)

    def cached_value(self, u: ControlVector) -> float | None:
        with self._lock:
            hit = self._cache.get(u.key())
        return None if hit is None else hit[0]

    def __contains__(self, u: ControlVector) -> bool:
        with self._lock:
            return u.key() in self._cache

    @property
    def best(self) -> tuple[float | None, ControlVector | None]:
        with self._lock:
            return self._best_value, self._best_control

    @property
    def name(self) -> str:
        return self._inner.name

    @property
    def has_components(self) -> bool:
        return self._inner.has_components

    @property
    def delta(self) -> np.ndarray | None:
        return self._inner.delta

    @property
    def evaluations(self) -> int:
        return self._inner.evaluations

    def value_range(self) -> float:
        return self._inner.value_range()


def _as_cached(objective) -> CachedObjective:
    return objective if isinstance(objective, CachedObjective) else CachedObjective(objective)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnOptConfig:
    """Knobs of the ensemble optimizer.

    ``sigma``/``rho``/``cov_mixing`` parameterize the perturbation covariance;
    they live here because every optimizer step needs them.  When
    ``relative_tolerance`` is set, improvement thresholds are multiplied by
    the objective's value range, i.e. tolerances act on values rescaled to
    the spread seen so far rather than on raw units.
    """

    sample_size: int = 100
    tolerance: float = 1e-6
    max_iterations: int = 50
    initial_step: float = 0.3
    step_contraction: float = 0.5
    max_step_trials: int = 10
    rng_seed: int = 0
    sigma: float | tuple[float, ...] = 0.001
    rho: float = 0.9
    cov_mixing: float = 0.1
    relative_tolerance: bool = False

    def __post_init__(self):
        if self.sample_size < 2:
            raise ParameterError(f"sample_size must be >= 2, got {self.sample_size}")
        if self.tolerance < 0.0:
            raise ParameterError(f"tolerance must be >= 0, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ParameterError(
                f"max_iterations must be >= 1, got {self.max_iterations}"
            )
        if not 0.0 < self.initial_step <= 1.0:
            raise ParameterError(
                f"initial_step must lie in (0, 1], got {self.initial_step}"
            )
        if not 0.0 < self.step_contraction < 1.0:
            raise ParameterError(
                f"step_contraction must lie in (0, 1), got {self.step_contraction}"
            )
        if self.max_step_trials < 1:
            raise ParameterError(
                f"max_step_trials must be >= 1, got {self.max_step_trials}"
            )

    def effective_tolerance(self, objective) -> float:
        if self.relative_tolerance:
            return self.tolerance * objective.value_range()
        return self.tolerance

    def covariance_state(self, layout: ControlVector) -> AdaptiveCovariance:
        return AdaptiveCovariance(
            self.sigma, self.rho, self.cov_mixing, layout.n_wells, layout.n_steps
        )


# ---------------------------------------------------------------------------
# ensemble statistics
# ---------------------------------------------------------------------------


def cross_covariance(
    mean: ControlVector,
    ensemble: PerturbationEnsemble,
    values: np.ndarray,
    mean_value: float,
) -> np.ndarray:
    """Sample cross-covariance between controls and objective values.

    (1 / (N-1)) * sum_m (u_m - u_mean) (F(u_m) - F(u_mean)); for a linear
    objective this estimates the covariance matrix applied to the gradient,
    i.e. a preconditioned ascent direction.
    """
    values = np.asarray(values, dtype=float)
    n = ensemble.size
    if values.shape != (n,):
        raise ShapeError(f"expected {n} values, got shape {values.shape}")
    if n < 2:
        raise ParameterError("cross-covariance needs at least two members")
    if not np.array_equal(mean.values, ensemble.mean.values):
        raise ShapeError("mean control does not match the ensemble mean")
    deviations = ensemble.perturbation_matrix()
    return deviations.T @ (values - float(mean_value)) / (n - 1)


def search_direction(ccov: np.ndarray) -> np.ndarray:
    """Cross-covariance normalized to unit max norm."""
    ccov = np.asarray(ccov, dtype=float)
    norm = float(np.max(np.abs(ccov)))
    if norm == 0.0:
        raise StationaryEnsembleError(
            "cross-covariance is identically zero; ensemble sees a flat objective"
        )
    return ccov / norm


@dataclass(frozen=True)
class LineSearchOutcome:
    control: ControlVector
    value: float
    trials: int
    improved: bool
    step_scale: float
    tolerance_used: float


def line_search(
    F,
    u_k: ControlVector,
    d_k: np.ndarray,
    cfg: EnOptConfig,
    bounds: ControlBounds,
    *,
    value_k: float | None = None,
) -> LineSearchOutcome:
    """Backtracking step selection along ``d_k``.

    Starts at ``initial_step`` and multiplies by ``step_contraction`` until the
    projected trial improves on F(u_k) by more than the tolerance or
    ``max_step_trials`` contractions have been spent.  The final trial point is
    returned either way; the caller decides what a non-improving step means.
    """
    F = _as_cached(F)
    d_k = np.asarray(d_k, dtype=float)
    if d_k.shape != u_k.values.shape:
        raise ShapeError("direction shape does not match the control")
    if value_k is None:
        value_k = F.evaluate(u_k)
    eps = cfg.effective_tolerance(F)

    beta = cfg.initial_step
    trial = project(u_k.with_values(u_k.values + beta * d_k), bounds)
    f_trial = F.evaluate(trial)
    trials = 1
    contractions = 0
    while f_trial - value_k <= eps and contractions < cfg.max_step_trials:
        beta *= cfg.step_contraction
        trial = project(u_k.with_values(u_k.values + beta * d_k), bounds)
        f_trial = F.evaluate(trial)
        trials += 1
        contractions += 1
    return LineSearchOutcome(
        control=trial,
        value=f_trial,
        trials=trials,
        improved=f_trial - value_k > eps,
        step_scale=beta,
        tolerance_used=eps,
    )


# ---------------------------------------------------------------------------
# ensemble evaluation with failure handling
# ---------------------------------------------------------------------------


def evaluate_ensemble(
    F,
    members: Sequence[ControlVector],
    *,
    workers: int = 1,
    want_components: bool = False,
) -> tuple[np.ndarray, np.ndarray | None, int]:
    """Evaluate every member, tolerating individual simulation failures.

    Distinct controls are evaluated once each (duplicates share the result),
    optionally across a thread pool; results come back in member order, so
    parallel and sequential runs are bit-identical.  Members whose evaluation
    raised :class:`SimulationError` are assigned the worst successful value of
    this ensemble minus one value-range unit, keeping them maximally
    unattractive without distorting the scale.
    """
    F = _as_cached(F)
    if want_components and not F.has_components:
        raise ParameterError("objective exposes no components to train a vector model on")

    unique: dict[bytes, ControlVector] = {}
    for m in members:
        unique.setdefault(m.key(), m)
    keys = list(unique)

    def _one(key: bytes):
        try:
            return F.evaluate_full(unique[key]), None
        except SimulationError as exc:
            return None, exc

    if workers > 1 and len(keys) > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(keys))) as pool:
            outcomes = list(pool.map(_one, keys))
    else:
        outcomes = [_one(key) for key in keys]

    by_key = dict(zip(keys, outcomes))
    ok_values = [res[0] for res, err in outcomes if err is None]
    if not ok_values:
        raise SimulationError(
            f"all {len(keys)} distinct ensemble members failed to evaluate"
        ) from by_key[keys[0]][1]
    n_failed_unique = sum(1 for _, err in outcomes if err is not None)
    if n_failed_unique:
        logger.warning(
            "%d of %d ensemble members failed; assigning penalty values",
            n_failed_unique,
            len(keys),
        )

    vmin = min(ok_values)
    unit = F.value_range()
    penalty = vmin - (unit if unit > 0.0 else 1.0)

    penalty_components = None
    if want_components:
        # Component target for failed members: copy the worst member's
        # components and absorb the penalty shortfall into the last entry so
        # the discounted sum still equals the penalty value.
        worst = min(
            (res for res, err in outcomes if err is None), key=lambda rc: rc[0]
        )
        delta = np.asarray(F.delta, dtype=float)
        penalty_components = np.array(worst[1], dtype=float)
        penalty_components[-1] += (penalty - worst[0]) / delta[-1]

    values = np.empty(len(members))
    components: np.ndarray | None = None
    n_failed = 0
    for i, m in enumerate(members):
        res, err = by_key[m.key()]
        if err is None:
            value, comps = res
        else:
            value, comps = penalty, penalty_components
            n_failed += 1
        values[i] = value
        if want_components:
            if components is None:
                components = np.empty((len(members), np.size(comps)))
            components[i] = comps
    return values, components, n_failed


# ---------------------------------------------------------------------------
# one optimizer step
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OptStepOutcome:
    """Next iterate plus the ensemble data that produced it."""

    next_control: ControlVector
    next_value: float
    training_pairs: tuple[tuple[ControlVector, float | np.ndarray], ...]
    mean_value: float
    line_search: LineSearchOutcome
    new_evaluations: int
    failed_members: int


def opt_step(
    F,
    u_k: ControlVector,
    iteration: int,
    cfg: EnOptConfig,
    bounds: ControlBounds,
    cov_state: AdaptiveCovariance,
    rng_seed: int,
    *,
    workers: int = 1,
    want_components: bool = False,
) -> OptStepOutcome:
    """One perturb-evaluate-step cycle from ``u_k``.

    Returns the line-search result and the (control, value) pairs from the
    ensemble — exactly the data a surrogate can be trained on afterwards.
    Evaluation bookkeeping: one run per distinct ensemble member, one for the
    mean unless already cached, one per line-search trial.  Raises
    :class:`StationaryEnsembleError` when every member evaluated identically,
    which callers report as convergence at ``u_k``.
    """
    if iteration < 0:
        raise ParameterError("iteration index must be >= 0")
    F = _as_cached(F)
    if not bounds.contains(u_k):
        raise ShapeError("current iterate lies outside the admissible box")
    evals_before = F.evaluations

    cov = cov_state.current_for(u_k)
    ensemble = sample_ensemble(u_k, cov, cfg.sample_size, bounds, rng_seed)
    mean_value = F.evaluate(u_k)
    values, components, n_failed = evaluate_ensemble(
        F, ensemble.members, workers=workers, want_components=want_components
    )

    ccov = cross_covariance(u_k, ensemble, values, mean_value)
    direction = search_direction(ccov)
    ls = line_search(F, u_k, direction, cfg, bounds, value_k=mean_value)

    if want_components:
        pairs = tuple(
            (member, components[i].copy()) for i, member in enumerate(ensemble.members)
        )
    else:
        pairs = tuple(
            (member, float(values[i])) for i, member in enumerate(ensemble.members)
        )
    return OptStepOutcome(
        next_control=ls.control,
        next_value=ls.value,
        training_pairs=pairs,
        mean_value=mean_value,
        line_search=ls,
        new_evaluations=F.evaluations - evals_before,
        failed_members=n_failed,
    )


# ---------------------------------------------------------------------------
# full optimizer loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnOptResult:
    control: ControlVector
    value: float
    best_control: ControlVector
    best_value: float
    iterations: int
    status: str
    evaluations: int
    trace: Trace


def enopt(
    F,
    u_0: ControlVector,
    cfg: EnOptConfig,
    bounds: ControlBounds,
    *,
    cov_state: AdaptiveCovariance | None = None,
    workers: int = 1,
    want_components: bool = False,
    trace: Trace | None = None,
    trace_fields: dict | None = None,
    control_to_list: Callable[[ControlVector], list] | None = None,
) -> EnOptResult:
    """Iterate optimizer steps while each new iterate keeps improving.

    Termination statuses: ``improvement-below-tolerance`` (the new iterate did
    not beat the previous one by more than the tolerance — that iterate is
    still returned), ``max-iterations``, and ``stationary-ensemble`` (a step
    produced no direction; the current iterate is returned as converged).
    """
    F = _as_cached(F)
    if not bounds.contains(u_0):
        raise ShapeError("initial control lies outside the admissible box")
    if cov_state is None:
        cov_state = cfg.covariance_state(u_0)
    if control_to_list is None:
        control_to_list = lambda u: u.values.tolist()
    if trace is None:
        header = {
            "algorithm": "enopt",
            "objective": F.name,
            **(trace_fields or {}),
            "sample_size": cfg.sample_size,
            "tolerance": cfg.tolerance,
            "relative_tolerance": cfg.relative_tolerance,
            "max_iterations": cfg.max_iterations,
            "rng_seed": cfg.rng_seed,
        }
        trace = Trace(**header)
    t_start = time.perf_counter()

    def _row(k: int, u: ControlVector, value: float, step: OptStepOutcome | None):
        fields = {
            "k": k,
            "control": control_to_list(u),
            "objective": value,
            "evaluations": F.evaluations,
            "wall_time_s": time.perf_counter() - t_start,
        }
        if step is not None:
            fields.update(
                line_search_trials=step.line_search.trials,
                line_search_improved=step.line_search.improved,
                step_scale=step.line_search.step_scale,
                failed_members=step.failed_members,
            )
        return trace.append(**fields)

    status = None
    u_prev = u_0
    try:
        step = opt_step(
            F, u_0, 0, cfg, bounds, cov_state, derive_seed(cfg.rng_seed, 0),
            workers=workers, want_components=want_components,
        )
    except StationaryEnsembleError:
        value_0 = F.evaluate(u_0)
        _row(0, u_0, value_0, None)
        status = "stationary-ensemble"
        u_curr, k = u_0, 0
    else:
        _row(0, u_0, step.mean_value, None)
        u_curr, k = step.next_control, 1
        _row(1, u_curr, step.next_value, step)

    while status is None:
        eps = cfg.effective_tolerance(F)
        improved = F.evaluate(u_curr) > F.evaluate(u_prev) + eps
        trace.rows[-1]["criterion_tolerance"] = eps
        trace.rows[-1]["criterion_passed"] = improved
        if not improved:
            status = "improvement-below-tolerance"
            break
        if k >= cfg.max_iterations:
            status = "max-iterations"
            break
        try:
            step = opt_step(
                F, u_curr, k, cfg, bounds, cov_state, derive_seed(cfg.rng_seed, k),
                workers=workers, want_components=want_components,
            )
        except StationaryEnsembleError:
            status = "stationary-ensemble"
            break
        u_prev, u_curr = u_curr, step.next_control
        k += 1
        _row(k, u_curr, step.next_value, step)

    value = F.evaluate(u_curr)
    best_value, best_control = F.best
    trace.finish(
        status=status,
        iterations=k,
        control=control_to_list(u_curr),
        objective=value,
        best_objective=best_value,
        best_control=control_to_list(best_control),
        evaluations=F.evaluations,
    )
    return EnOptResult(
        control=u_curr,
        value=value,
        best_control=best_control,
        best_value=best_value,
        iterations=k,
        status=status,
        evaluations=F.evaluations,
        trace=trace,
    )
