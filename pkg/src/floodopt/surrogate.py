"""Feedforward network surrogates for expensive reservoir objectives.

The network maps a control vector (scaled to the unit cube by the control
bounds) either to the scalar discounted objective or to the vector of
per-step cashflow components, whose discounted sum reproduces the scalar.
Outputs are min/max scaled over the training targets.  Hidden layers apply
an elementwise activation; the output layer is affine.

Training minimizes the summed squared error with a limited-memory
quasi-Newton loop (two-loop recursion, strong Wolfe line search).  One
parameter update is an epoch; after each epoch the validation loss decides
early stopping, and several restarts from independent initializations
compete on the combined train+validation loss.  Everything is seeded, so a
given training set and configuration reproduce the same network bit-for-bit.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .controls import ControlBounds, ControlVector, scale_to_unit
from .enopt import Objective, derive_seed
from .errors import ParameterError, ShapeError, TrainingError

__all__ = [
    "ACTIVATIONS",
    "NetworkArchitecture",
    "NetworkWeights",
    "OutputScaling",
    "TrainerConfig",
    "TrainingReport",
    "NeuralSurrogate",
    "forward",
    "mse_loss",
    "loss_gradient",
    "initialize_weights",
    "train",
    "train_on_scaled",
    "discount_vector",
    "make_surrogate",
    "save_network",
    "load_network",
]

logger = logging.getLogger(__name__)


def _relu(z):
    return np.maximum(z, 0.0)


def _relu_prime(z):
    return (z > 0.0).astype(float)


def _tanh_prime(z):
    t = np.tanh(z)
    return 1.0 - t * t


# activation -> (function, derivative)
ACTIVATIONS: dict[str, tuple[Callable, Callable]] = {
    "tanh": (np.tanh, _tanh_prime),
    "relu": (_relu, _relu_prime),
}


@dataclass(frozen=True)
class NetworkArchitecture:
    """Layer widths from input to output plus the hidden activation."""

    layer_sizes: tuple[int, ...]
    activation: str = "tanh"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 3:
            raise ParameterError(
                "network needs at least one hidden layer "
                f"(>= 3 layer sizes), got {sizes}"
            )
        if any(s < 1 for s in sizes):
            raise ParameterError(f"layer sizes must be positive, got {sizes}")
        if self.activation not in ACTIVATIONS:
            raise ParameterError(
                f"unknown activation {self.activation!r}; "
                f"choose from {sorted(ACTIVATIONS)}"
            )
        object.__setattr__(self, "layer_sizes", sizes)

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    @property
    def n_layers(self) -> int:
        """Number of affine maps."""
        return len(self.layer_sizes) - 1


class NetworkWeights:
    """Matrices and bias vectors for each affine layer."""

    def __init__(self, matrices: Sequence[np.ndarray], biases: Sequence[np.ndarray]):
        if len(matrices) != len(biases):
            raise ShapeError("need one bias vector per weight matrix")
        self.matrices = [np.array(w, dtype=float) for w in matrices]
        self.biases = [np.array(b, dtype=float) for b in biases]
        for i, (w, b) in enumerate(zip(self.matrices, self.biases)):
            if w.ndim != 2 or b.ndim != 1 or b.size != w.shape[0]:
                raise ShapeError(f"layer {i}: matrix {w.shape} and bias {b.shape} mismatch")
            if i > 0 and w.shape[1] != self.matrices[i - 1].shape[0]:
                raise ShapeError(f"layer {i} input does not match layer {i - 1} output")

    @property
    def n_parameters(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.matrices, self.biases))

    def architecture_sizes(self) -> tuple[int, ...]:
        return (self.matrices[0].shape[1], *(w.shape[0] for w in self.matrices))

    def flatten(self) -> np.ndarray:
        chunks = []
        for w, b in zip(self.matrices, self.biases):
            chunks.append(w.ravel())
            chunks.append(b)
        return np.concatenate(chunks)

    @classmethod
    def from_flat(cls, flat: np.ndarray, arch: NetworkArchitecture) -> "NetworkWeights":
        flat = np.asarray(flat, dtype=float)
        expected = sum(
            (n_in + 1) * n_out
            for n_in, n_out in zip(arch.layer_sizes[:-1], arch.layer_sizes[1:])
        )
        if flat.size != expected:
            raise ShapeError(
                f"flat vector of length {flat.size} does not match architecture "
                f"{arch.layer_sizes} ({expected} parameters)"
            )
        matrices, biases, pos = [], [], 0
        for n_in, n_out in zip(arch.layer_sizes[:-1], arch.layer_sizes[1:]):
            matrices.append(flat[pos : pos + n_in * n_out].reshape(n_out, n_in))
            pos += n_in * n_out
            biases.append(flat[pos : pos + n_out].copy())
            pos += n_out
        return cls(matrices, biases)

    def copy(self) -> "NetworkWeights":
        return NetworkWeights(
            [w.copy() for w in self.matrices], [b.copy() for b in self.biases]
        )


def initialize_weights(arch: NetworkArchitecture, rng: np.random.Generator) -> NetworkWeights:
    """He-style initialization: weight variance 2/fan_in, zero biases."""
    matrices, biases = [], []
    for n_in, n_out in zip(arch.layer_sizes[:-1], arch.layer_sizes[1:]):
        matrices.append(rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_out, n_in)))
        biases.append(np.zeros(n_out))
    return NetworkWeights(matrices, biases)


def _forward_cached(
    weights: NetworkWeights, X: np.ndarray, activation: str
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """All pre-activations and activations, batch-first."""
    act, _ = ACTIVATIONS[activation]
    n_layers = len(weights.matrices)
    pre, post = [], [X]
    for i, (w, b) in enumerate(zip(weights.matrices, weights.biases)):
        z = post[-1] @ w.T + b
        pre.append(z)
        post.append(act(z) if i < n_layers - 1 else z)  # output layer is affine
    return pre, post


def forward(weights: NetworkWeights, x: np.ndarray, activation: str = "tanh") -> np.ndarray:
    """Network outputs for a single input vector or a batch of rows."""
    if activation not in ACTIVATIONS:
        raise ParameterError(f"unknown activation {activation!r}")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != weights.matrices[0].shape[1]:
        raise ShapeError(
            f"input shape {x.shape} does not match network input size "
            f"{weights.matrices[0].shape[1]}"
        )
    out = _forward_cached(weights, X, activation)[1][-1]
    return out[0] if single else out


def mse_loss(
    weights: NetworkWeights,
    inputs: np.ndarray,
    targets: np.ndarray,
    activation: str = "tanh",
) -> float:
    """Summed squared error over the set (no averaging)."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if inputs.shape[0] != targets.shape[0]:
        raise ShapeError("inputs and targets must pair up")
    pred = forward(weights, inputs, activation)
    diff = pred - targets
    return float(np.sum(diff * diff))


def loss_gradient(
    weights: NetworkWeights,
    inputs: np.ndarray,
    targets: np.ndarray,
    activation: str = "tanh",
) -> tuple[float, NetworkWeights]:
    """Loss and its exact reverse-mode gradient in weight space."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if inputs.shape[0] != targets.shape[0]:
        raise ShapeError("inputs and targets must pair up")
    _, act_prime = ACTIVATIONS[activation]

    pre, post = _forward_cached(weights, inputs, activation)
    diff = post[-1] - targets
    loss = float(np.sum(diff * diff))

    n_layers = len(weights.matrices)
    grad_w = [np.empty_like(w) for w in weights.matrices]
    grad_b = [np.empty_like(b) for b in weights.biases]
    delta = 2.0 * diff  # d loss / d output
    for i in range(n_layers - 1, -1, -1):
        if i < n_layers - 1:
            delta = delta * act_prime(pre[i])
        grad_w[i] = delta.T @ post[i]
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ weights.matrices[i]
    return loss, NetworkWeights(grad_w, grad_b)


# ---------------------------------------------------------------------------
# output scaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OutputScaling:
    """Componentwise min/max scaling of raw targets onto [0, 1].

    Components with zero spread are mapped to 0.5 and unscaled back to their
    constant value, so a flat target cannot blow up the scaling.
    """

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float)).copy()
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float)).copy()
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ShapeError("scaling lo/hi must be 1-D arrays of equal length")
        if np.any(hi < lo):
            raise ParameterError("scaling requires hi >= lo")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_targets(cls, targets: np.ndarray) -> "OutputScaling":
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        return cls(targets.min(axis=0), targets.max(axis=0))

    @property
    def span(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def degenerate(self) -> np.ndarray:
        return self.span == 0.0

    def scale(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        span = np.where(self.degenerate, 1.0, self.span)
        scaled = (y - self.lo) / span
        return np.where(self.degenerate, 0.5, scaled)

    def unscale(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        raw = self.lo + s * self.span
        return np.where(self.degenerate, self.lo, raw)


def discount_vector(
    discount_rate: float, period_days: float, times_days: np.ndarray
) -> np.ndarray:
    """Per-step discount factors (1 + rate)^(-t_i / period)."""
    if discount_rate <= -1.0:
        raise ParameterError("discount rate must be > -1")
    if period_days <= 0.0:
        raise ParameterError("discount period must be positive")
    times = np.asarray(times_days, dtype=float)
    return (1.0 + discount_rate) ** (-times / period_days)


# ---------------------------------------------------------------------------
# limited-memory quasi-Newton training
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainerConfig:
    restarts: int = 15
    max_epochs: int = 1000
    patience: int = 10
    validation_fraction: float = 0.1
    memory: int = 10
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    max_line_search: int = 25
    gradient_tolerance: float = 1e-12
    rng_seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ParameterError("need at least one restart")
        if self.max_epochs < 1:
            raise ParameterError("need at least one epoch")
        if self.patience < 1:
            raise ParameterError("patience must be >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ParameterError("validation fraction must lie in (0, 1)")
        if self.memory < 1:
            raise ParameterError("quasi-Newton memory must be >= 1")
        if not 0.0 < self.wolfe_c1 < self.wolfe_c2 < 1.0:
            raise ParameterError("need 0 < c1 < c2 < 1 for the Wolfe conditions")


@dataclass
class RestartStats:
    restart: int
    train_loss: float
    validation_loss: float
    epochs: int
    last_improvement_epoch: int
    stopped_early: bool
    diverged: bool

    @property
    def combined_loss(self) -> float:
        return self.train_loss + self.validation_loss


@dataclass
class TrainingReport:
    restarts: list[RestartStats]
    selected_restart: int
    n_train: int
    n_validation: int

    def _ok(self) -> list[RestartStats]:
        return [r for r in self.restarts if not r.diverged]

    @property
    def selected(self) -> RestartStats:
        return self.restarts[self.selected_restart]

    def summary(self) -> dict:
        ok = self._ok()
        train = [r.train_loss for r in ok]
        val = [r.validation_loss for r in ok]
        sel = self.selected
        return {
            "restarts": len(self.restarts),
            "diverged_restarts": len(self.restarts) - len(ok),
            "selected_restart": self.selected_restart,
            "train_loss": sel.train_loss,
            "validation_loss": sel.validation_loss,
            "train_loss_min": min(train),
            "train_loss_max": max(train),
            "train_loss_mean": float(np.mean(train)),
            "validation_loss_min": min(val),
            "validation_loss_max": max(val),
            "validation_loss_mean": float(np.mean(val)),
            "train_loss_per_sample": sel.train_loss / self.n_train,
            "validation_loss_per_sample": sel.validation_loss / self.n_validation,
        }


def _two_loop_direction(
    grad: np.ndarray, pairs: list[tuple[np.ndarray, np.ndarray, float]]
) -> np.ndarray:
    """Limited-memory inverse-Hessian product (descent direction is -result)."""
    q = grad.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    if pairs:
        s, y, _ = pairs[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return q


def _strong_wolfe(
    fun_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x: np.ndarray,
    f0: float,
    g0: np.ndarray,
    p: np.ndarray,
    c1: float,
    c2: float,
    alpha_init: float,
    max_iter: int,
) -> tuple[float, float, np.ndarray] | None:
    """Step length satisfying the strong Wolfe conditions, or None.

    Bracketing doubles the step until the sufficient-decrease condition fails
    or the slope turns; a bisection zoom then narrows the bracket.
    """
    dphi0 = float(g0 @ p)
    if dphi0 >= 0.0:
        return None

    def phi(alpha: float) -> tuple[float, float, np.ndarray]:
        f, g = fun_grad(x + alpha * p)
        return f, float(g @ p), g

    def zoom(
        a_lo, f_lo, d_lo, a_hi, f_hi
    ) -> tuple[float, float, np.ndarray] | None:
        for _ in range(max_iter):
            a = 0.5 * (a_lo + a_hi)
            f, d, g = phi(a)
            if not np.isfinite(f):
                a_hi, f_hi = a, f
                continue
            if f > f0 + c1 * a * dphi0 or f >= f_lo:
                a_hi, f_hi = a, f
            else:
                if abs(d) <= -c2 * dphi0:
                    return a, f, g
                if d * (a_hi - a_lo) >= 0.0:
                    a_hi, f_hi = a_lo, f_lo
                a_lo, f_lo, d_lo = a, f, d
            if abs(a_hi - a_lo) < 1e-16:
                break
        return None

    a_prev, f_prev, d_prev = 0.0, f0, dphi0
    alpha = alpha_init
    for i in range(max_iter):
        f, d, g = phi(alpha)
        if not np.isfinite(f):
            alpha *= 0.5
            continue
        if f > f0 + c1 * alpha * dphi0 or (i > 0 and f >= f_prev):
            return zoom(a_prev, f_prev, d_prev, alpha, f)
        if abs(d) <= -c2 * dphi0:
            return alpha, f, g
        if d >= 0.0:
            return zoom(alpha, f, d, a_prev, f_prev)
        a_prev, f_prev, d_prev = alpha, f, d
        alpha = min(2.0 * alpha, 1e6)
    return None


def _run_restart(
    arch: NetworkArchitecture,
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_val: np.ndarray,
    y_val: np.ndarray,
    cfg: TrainerConfig,
    seed: int,
    restart_index: int,
) -> tuple[NetworkWeights | None, RestartStats]:
    rng = np.random.default_rng(seed)
    weights = initialize_weights(arch, rng)
    flat = weights.flatten()

    def fun_grad(vec: np.ndarray) -> tuple[float, np.ndarray]:
        w = NetworkWeights.from_flat(vec, arch)
        loss, grad = loss_gradient(w, x_train, y_train, arch.activation)
        return loss, grad.flatten()

    def val_loss(vec: np.ndarray) -> float:
        return mse_loss(NetworkWeights.from_flat(vec, arch), x_val, y_val, arch.activation)

    f, g = fun_grad(flat)
    if not np.isfinite(f):
        return None, RestartStats(restart_index, np.inf, np.inf, 0, 0, False, True)

    val_prev = val_loss(flat)
    best_combined = f + val_prev
    best_flat = flat.copy()
    best_stats = (f, val_prev)
    last_improvement = 0
    pairs: list[tuple[np.ndarray, np.ndarray, float]] = []
    epochs = 0
    stopped_early = False
    diverged = False

    for epoch in range(1, cfg.max_epochs + 1):
        if np.max(np.abs(g)) < cfg.gradient_tolerance:
            break
        p = -_two_loop_direction(g, pairs)
        if g @ p >= 0.0:  # memory went stale; fall back to steepest descent
            pairs.clear()
            p = -g
        alpha_init = 1.0 if pairs else min(1.0, 1.0 / max(np.linalg.norm(g), 1e-12))
        hit = _strong_wolfe(
            fun_grad, flat, f, g, p, cfg.wolfe_c1, cfg.wolfe_c2,
            alpha_init, cfg.max_line_search,
        )
        if hit is None and pairs:
            # the quasi-Newton direction can defeat the Wolfe search near kinks
            # (relu) or after a stale memory; drop the history and retry once
            # along the raw gradient before giving up on the restart
            pairs.clear()
            p = -g
            alpha_init = min(1.0, 1.0 / max(np.linalg.norm(g), 1e-12))
            hit = _strong_wolfe(
                fun_grad, flat, f, g, p, cfg.wolfe_c1, cfg.wolfe_c2,
                alpha_init, cfg.max_line_search,
            )
        if hit is None:
            break
        alpha, f_new, g_new = hit
        step = alpha * p
        y_diff = g_new - g
        sy = float(step @ y_diff)
        if sy > 1e-10 * np.linalg.norm(step) * np.linalg.norm(y_diff):
            pairs.append((step, y_diff, 1.0 / sy))
            if len(pairs) > cfg.memory:
                pairs.pop(0)
        flat = flat + step
        f, g = f_new, g_new
        epochs = epoch
        if not (np.isfinite(f) and np.all(np.isfinite(g))):
            diverged = True
            break

        v = val_loss(flat)
        if f + v < best_combined:
            best_combined = f + v
            best_flat = flat.copy()
            best_stats = (f, v)
        # early stopping: quit after `patience` consecutive epochs in which the
        # validation loss did not decrease relative to the previous epoch
        if v < val_prev:
            last_improvement = epoch
        elif epoch - last_improvement >= cfg.patience:
            val_prev = v
            stopped_early = True
            break
        val_prev = v

    stats = RestartStats(
        restart=restart_index,
        train_loss=best_stats[0],
        validation_loss=best_stats[1],
        epochs=epochs,
        last_improvement_epoch=last_improvement,
        stopped_early=stopped_early,
        diverged=diverged,
    )
    if diverged and not np.all(np.isfinite(best_flat)):
        return None, stats
    return NetworkWeights.from_flat(best_flat, arch), stats


def train_on_scaled(
    inputs_scaled: np.ndarray,
    targets_raw: np.ndarray,
    arch: NetworkArchitecture,
    cfg: TrainerConfig,
) -> tuple[NetworkWeights, OutputScaling, TrainingReport]:
    """Train on unit-cube inputs and raw targets (scaled internally).

    The validation split is a seeded permutation; restarts draw independent
    initializations from seeds derived per restart index.  The returned
    weights are those of the restart snapshot with the smallest combined
    train+validation loss.
    """
    X = np.atleast_2d(np.asarray(inputs_scaled, dtype=float))
    Y = np.asarray(targets_raw, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n = X.shape[0]
    if Y.shape[0] != n:
        raise ShapeError("inputs and targets must pair up")
    if n < 10:
        raise ParameterError(f"need at least 10 training pairs, got {n}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise ParameterError("training data must be finite")
    if X.shape[1] != arch.n_inputs:
        raise ShapeError(
            f"architecture expects {arch.n_inputs} inputs, data has {X.shape[1]}"
        )
    if Y.shape[1] != arch.n_outputs:
        raise ShapeError(
            f"architecture expects {arch.n_outputs} outputs, data has {Y.shape[1]}"
        )

    scaling = OutputScaling.from_targets(Y)
    Y_scaled = scaling.scale(Y)

    split_rng = np.random.default_rng(derive_seed(cfg.rng_seed, 0))
    perm = split_rng.permutation(n)
    n_val = int(np.clip(round(cfg.validation_fraction * n), 1, n - 1))
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    x_train, y_train = X[train_idx], Y_scaled[train_idx]
    x_val, y_val = X[val_idx], Y_scaled[val_idx]

    candidates: list[tuple[NetworkWeights, RestartStats]] = []
    stats_all: list[RestartStats] = []
    for r in range(cfg.restarts):
        weights, stats = _run_restart(
            arch, x_train, y_train, x_val, y_val, cfg,
            derive_seed(cfg.rng_seed, 1, r), r,
        )
        stats_all.append(stats)
        if weights is not None:
            candidates.append((weights, stats))
        else:
            logger.warning("training restart %d diverged and was discarded", r)

    if not candidates:
        raise TrainingError("every training restart diverged")
    best_weights, best_stats = min(candidates, key=lambda ws: ws[1].combined_loss)
    report = TrainingReport(
        restarts=stats_all,
        selected_restart=best_stats.restart,
        n_train=len(train_idx),
        n_validation=len(val_idx),
    )
    return best_weights, scaling, report


def train(
    pairs: Sequence[tuple[ControlVector, float | np.ndarray]],
    arch: NetworkArchitecture,
    cfg: TrainerConfig,
    bounds: ControlBounds,
) -> tuple[NetworkWeights, OutputScaling, TrainingReport]:
    """Train on raw (control, target) pairs; controls must be admissible."""
    if len(pairs) < 10:
        raise ParameterError(f"need at least 10 training pairs, got {len(pairs)}")
    X = np.stack([scale_to_unit(u, bounds) for u, _ in pairs])
    targets = [np.atleast_1d(np.asarray(t, dtype=float)) for _, t in pairs]
    Y = np.stack(targets)
    return train_on_scaled(X, Y, arch, cfg)


# ---------------------------------------------------------------------------
# trained network as an objective
# ---------------------------------------------------------------------------


class NeuralSurrogate(Objective):
    """Objective backed by a trained network.

    The scalar variant predicts the discounted objective directly; the vector
    variant predicts per-step components and exposes them, with the value
    defined as their discounted sum.  The value range implied by the output
    scaling is fixed at construction so relative tolerances on this objective
    are stable within one optimization run.
    """

    def __init__(
        self,
        weights: NetworkWeights,
        arch: NetworkArchitecture,
        bounds: ControlBounds,
        scaling: OutputScaling,
        variant: str,
        delta: np.ndarray | None = None,
        name: str = "surrogate",
    ):
        if variant not in ("scalar", "vector"):
            raise ParameterError(f"variant must be 'scalar' or 'vector', got {variant!r}")
        if variant == "scalar":
            if arch.n_outputs != 1:
                raise ParameterError("scalar variant needs exactly one output")
            fixed_range = float(scaling.span[0])
            delta_arr = None
        else:
            if delta is None:
                raise ParameterError("vector variant needs discount weights")
            delta_arr = np.asarray(delta, dtype=float)
            if delta_arr.shape != (arch.n_outputs,):
                raise ShapeError(
                    f"discount weights of shape {delta_arr.shape} do not match "
                    f"{arch.n_outputs} outputs"
                )
            fixed_range = float(delta_arr @ scaling.span)
        super().__init__(name=name, delta=delta_arr, fixed_value_range=fixed_range)
        if weights.architecture_sizes() != arch.layer_sizes:
            raise ShapeError("weights do not match the declared architecture")
        self.weights = weights
        self.arch = arch
        self.bounds = bounds
        self.scaling = scaling
        self.variant = variant

    def _evaluate_full(self, u: ControlVector) -> tuple[float, np.ndarray | None]:
        x = scale_to_unit(u, self.bounds)
        raw = self.scaling.unscale(forward(self.weights, x, self.arch.activation))
        if self.variant == "scalar":
            return float(raw[0]), None
        return float(self.delta @ raw), raw

    @property
    def has_components(self) -> bool:
        return self.variant == "vector"


def make_surrogate(
    weights: NetworkWeights,
    arch: NetworkArchitecture,
    bounds: ControlBounds,
    scaling: OutputScaling,
    variant: str,
    delta: np.ndarray | None = None,
    name: str = "surrogate",
) -> NeuralSurrogate:
    """Package a trained network as an objective the optimizer can drive."""
    return NeuralSurrogate(weights, arch, bounds, scaling, variant, delta, name)


SERIALIZATION_VERSION = 1


def save_network(path: str | Path, surrogate: NeuralSurrogate) -> None:
    """Self-describing JSON dump of a trained surrogate."""
    payload = {
        "format_version": SERIALIZATION_VERSION,
        "name": surrogate.name,
        "variant": surrogate.variant,
        "activation": surrogate.arch.activation,
        "layer_sizes": list(surrogate.arch.layer_sizes),
        "matrices": [w.tolist() for w in surrogate.weights.matrices],
        "biases": [b.tolist() for b in surrogate.weights.biases],
        "input_lower": surrogate.bounds.lower.tolist(),
        "input_upper": surrogate.bounds.upper.tolist(),
        "input_names": list(surrogate.bounds.names) if surrogate.bounds.names else None,
        "output_lo": surrogate.scaling.lo.tolist(),
        "output_hi": surrogate.scaling.hi.tolist(),
        "delta": None if surrogate.delta is None else surrogate.delta.tolist(),
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_network(path: str | Path) -> NeuralSurrogate:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format_version") != SERIALIZATION_VERSION:
        raise ParameterError(
            f"unsupported network file version {payload.get('format_version')!r}"
        )
    arch = NetworkArchitecture(tuple(payload["layer_sizes"]), payload["activation"])
    weights = NetworkWeights(
        [np.array(w) for w in payload["matrices"]],
        [np.array(b) for b in payload["biases"]],
    )
    names = payload.get("input_names")
    bounds = ControlBounds(
        np.array(payload["input_lower"]),
        np.array(payload["input_upper"]),
        tuple(names) if names else None,
    )
    scaling = OutputScaling(np.array(payload["output_lo"]), np.array(payload["output_hi"]))
    delta = payload.get("delta")
    return NeuralSurrogate(
        weights,
        arch,
        bounds,
        scaling,
        payload["variant"],
        None if delta is None else np.array(delta),
        payload.get("name", "surrogate"),
    )
