"""Ensemble optimization of well controls with adaptive neural surrogates.

The package couples three layers:

* a gradient-free ensemble optimizer (``enopt``) driven by temporally
  correlated control perturbations (``covariance``) over box-constrained
  control vectors (``controls``),
* feedforward-network surrogates of the expensive objective (``surrogate``)
  and the outer loop that alternates full-model steps with cheap surrogate
  optimization runs (``aml``),
* a desk-scale two-phase polymer-flooding reservoir proxy with a discounted
  net-present-value objective (``reservoir``) plus a command-line front end
  (``cli``).
"""

__version__ = "0.1.0"

from .controls import (
    ControlBounds,
    ControlVector,
    project,
    scale_to_unit,
    unscale_from_unit,
)
from .covariance import (
    AdaptiveCovariance,
    CovarianceMatrix,
    PerturbationEnsemble,
    adapt_covariance,
    build_initial_covariance,
    sample_ensemble,
)
from .enopt import (
    CachedObjective,
    CallableObjective,
    EnOptConfig,
    EnOptResult,
    Objective,
    ScaledControlObjective,
    cross_covariance,
    derive_seed,
    enopt,
    line_search,
    opt_step,
    search_direction,
)
from .surrogate import (
    NetworkArchitecture,
    NetworkWeights,
    NeuralSurrogate,
    OutputScaling,
    TrainerConfig,
    discount_vector,
    forward,
    load_network,
    loss_gradient,
    make_surrogate,
    mse_loss,
    save_network,
    train,
)
from .aml import AmlConfig, AmlResult, aml_enopt, certify
from .reservoir import (
    EconParams,
    ReservoirModel,
    SimulationResult,
    WellSpec,
    analytic_objectives,
    builtin_deck_path,
    load_deck,
    make_fom_objective,
    npv,
    simulate,
)
