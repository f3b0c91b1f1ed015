"""Temporally correlated control covariance: construction, adaptation, sampling.

The perturbation covariance couples the control steps of each control type
through a stationary AR(1) kernel,

    cov(u_j^i, u_j^(i+h)) = sigma_j^2 * rho^|h| / (1 - rho^2),

with zero correlation across control types.  Between optimizer iterations the
matrix is adapted by blending in a trace-preserving rank-one outer product of
the accepted step, which gradually aligns the sampling cloud with the
directions the optimizer actually moves in.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import toeplitz

from .controls import ControlBounds, ControlVector, project
from .errors import NumericalError, ParameterError, ShapeError

__all__ = [
    "CovarianceMatrix",
    "PerturbationEnsemble",
    "AdaptiveCovariance",
    "build_initial_covariance",
    "adapt_covariance",
    "sample_ensemble",
]

logger = logging.getLogger(__name__)

# Relative diagonal jitter applied when a factorization fails numerically.
JITTER_RELATIVE = 1e-12


@dataclass(frozen=True)
class CovarianceMatrix:
    """Symmetric positive semi-definite sampling covariance with an age tag."""

    entries: np.ndarray
    iteration: int = 0

    def __post_init__(self):
        ent = np.array(self.entries, dtype=float, copy=True)
        if ent.ndim != 2 or ent.shape[0] != ent.shape[1]:
            raise ShapeError(f"covariance must be square, got shape {ent.shape}")
        if not np.array_equal(ent, ent.T):
            raise ShapeError("covariance must be exactly symmetric")
        ent.flags.writeable = False
        object.__setattr__(self, "entries", ent)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.entries))


@dataclass(frozen=True)
class PerturbationEnsemble:
    """Projected Gaussian draws around a mean control."""

    mean: ControlVector
    members: tuple[ControlVector, ...]

    @property
    def size(self) -> int:
        return len(self.members)

    def member_matrix(self) -> np.ndarray:
        """Members stacked row-wise, shape (N, n_controls)."""
        return np.stack([m.values for m in self.members])

    def perturbation_matrix(self) -> np.ndarray:
        """Projected members minus the mean, shape (N, n_controls)."""
        return self.member_matrix() - self.mean.values


def _as_sigma_vector(sigmas: float | Sequence[float], n_wells: int) -> np.ndarray:
    sig = np.asarray(sigmas, dtype=float)
    if sig.ndim == 0:
        sig = np.full(n_wells, float(sig))
    if sig.shape != (n_wells,):
        raise ShapeError(f"expected {n_wells} sigmas, got shape {sig.shape}")
    if not np.all(sig > 0.0):
        raise ParameterError("perturbation sigmas must be strictly positive")
    return sig


def build_initial_covariance(
    sigmas: float | Sequence[float],
    rho: float,
    n_wells: int,
    n_steps: int,
) -> CovarianceMatrix:
    """AR(1) covariance in the flat control layout (control types fastest).

    Each control type owns an n_steps * n_steps Toeplitz block
    sigma_j^2 rho^|i-i'| / (1 - rho^2); entries between different control
    types are exactly zero.  Requires |rho| < 1.
    """
    if not -1.0 < rho < 1.0:
        raise ParameterError(f"AR(1) correlation must satisfy |rho| < 1, got {rho}")
    if n_wells < 1 or n_steps < 1:
        raise ParameterError("n_wells and n_steps must be >= 1")
    sig = _as_sigma_vector(sigmas, n_wells)
    kernel = toeplitz(rho ** np.arange(n_steps)) / (1.0 - rho * rho)
    n = n_wells * n_steps
    entries = np.zeros((n, n))
    for j in range(n_wells):
        idx = j + n_wells * np.arange(n_steps)
        entries[np.ix_(idx, idx)] = sig[j] ** 2 * kernel
    return CovarianceMatrix(entries, iteration=0)


def adapt_covariance(
    prev: CovarianceMatrix,
    step: np.ndarray | ControlVector,
    mixing: float,
) -> CovarianceMatrix:
    """Blend the previous covariance with the accepted-step direction.

    Returns (1 - mixing) * prev + mixing * s * w w^T with
    s = trace(prev) / ||w||^2, which preserves the trace exactly and keeps
    the matrix symmetric positive definite for mixing in (0, 1).  A zero
    step returns the previous entries unchanged (age still advances).
    """
    if not 0.0 < mixing < 1.0:
        raise ParameterError(f"mixing factor must lie in (0, 1), got {mixing}")
    w = step.values if isinstance(step, ControlVector) else np.asarray(step, dtype=float)
    if w.shape != (prev.n,):
        raise ShapeError(f"step of shape {w.shape} does not match covariance size {prev.n}")
    norm2 = float(w @ w)
    if norm2 == 0.0:
        return CovarianceMatrix(prev.entries, iteration=prev.iteration + 1)
    scale = prev.trace() / norm2
    entries = (1.0 - mixing) * prev.entries + (mixing * scale) * np.outer(w, w)
    return CovarianceMatrix(entries, iteration=prev.iteration + 1)


def _cholesky_with_jitter(entries: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, retrying once with a relative diagonal jitter."""
    try:
        return np.linalg.cholesky(entries)
    except np.linalg.LinAlgError:
        jitter = JITTER_RELATIVE * np.trace(entries) / entries.shape[0]
        logger.warning(
            "covariance factorization needed diagonal jitter %.3e", jitter
        )
        try:
            return np.linalg.cholesky(entries + jitter * np.eye(entries.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                "covariance is not positive definite even after jitter"
            ) from exc


def sample_ensemble(
    mean: ControlVector,
    cov: CovarianceMatrix,
    n: int,
    bounds: ControlBounds,
    rng_seed: int,
) -> PerturbationEnsemble:
    """Draw ``n`` Gaussian controls around ``mean`` and project them into the box.

    Sampling uses a dedicated generator seeded with ``rng_seed``, so identical
    arguments reproduce the ensemble bit-for-bit.
    """
    if n < 2:
        raise ParameterError(f"ensemble size must be >= 2, got {n}")
    if cov.n != len(mean):
        raise ShapeError(
            f"covariance size {cov.n} does not match control length {len(mean)}"
        )
    chol = _cholesky_with_jitter(cov.entries)
    rng = np.random.default_rng(rng_seed)
    draws = mean.values + rng.standard_normal((n, cov.n)) @ chol.T
    members = tuple(
        project(mean.with_values(row), bounds) for row in draws
    )
    return PerturbationEnsemble(mean=mean, members=members)


class AdaptiveCovariance:
    """Covariance state threaded through successive optimizer steps.

    The first mean it sees gets the stationary AR(1) matrix; afterwards each
    new mean adapts the matrix with the step from the previous mean.  A lock
    guards the tiny mutable state so drivers may share instances safely.
    """

    def __init__(
        self,
        sigmas: float | Sequence[float],
        rho: float,
        mixing: float,
        n_wells: int,
        n_steps: int,
    ):
        if not 0.0 < mixing < 1.0:
            raise ParameterError(f"mixing factor must lie in (0, 1), got {mixing}")
        self._sigmas = _as_sigma_vector(sigmas, n_wells)
        self._rho = float(rho)
        self._mixing = float(mixing)
        self._n_wells = int(n_wells)
        self._n_steps = int(n_steps)
        self._cov: CovarianceMatrix | None = None
        self._last_mean: np.ndarray | None = None
        self._lock = threading.Lock()

    def current_for(self, mean: ControlVector) -> CovarianceMatrix:
        """Covariance to sample around ``mean``, adapting from the last mean."""
        if len(mean) != self._n_wells * self._n_steps:
            raise ShapeError("mean control does not match the covariance layout")
        with self._lock:
            if self._cov is None:
                self._cov = build_initial_covariance(
                    self._sigmas, self._rho, self._n_wells, self._n_steps
                )
            elif self._last_mean is not None and not np.array_equal(
                mean.values, self._last_mean
            ):
                self._cov = adapt_covariance(
                    self._cov, mean.values - self._last_mean, self._mixing
                )
            self._last_mean = mean.values.copy()
            return self._cov

    def clone(self) -> "AdaptiveCovariance":
        """Independent copy; adaptations of the clone do not feed back."""
        with self._lock:
            twin = AdaptiveCovariance(
                self._sigmas, self._rho, self._mixing, self._n_wells, self._n_steps
            )
            twin._cov = self._cov
            twin._last_mean = None if self._last_mean is None else self._last_mean.copy()
            return twin

    @property
    def matrix(self) -> CovarianceMatrix | None:
        with self._lock:
            return self._cov
