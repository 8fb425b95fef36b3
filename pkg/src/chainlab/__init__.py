"""chainlab: a simulation lab for two coupled growth chains.

Pure deterministic kernels for the exponential logistic (Ricker) map and
its coupled two-chain form, continuous-time counterparts, bifurcation
sweeps, seeded stochastic regime shocks, and a set of causal-direction
detectors (lagged correlation, Granger, convergent cross mapping, and
do-style interventions).
"""

from .bifurcation import (BifurcationDiagram, SweepSpec, attractor_census,
                          default_param_rule, quantize, scaled_param_rule,
                          sweep)
from .causality import (CausalGraphHypothesis, CausalReport,
                        DetectorThresholds, EmbeddingSpec, adjudicate, ccm,
                        granger, intervene, interventional_shift,
                        lagged_xcorr)
from .dynamics import (ChainParams, ChainState, LVParams, Trajectory,
                       integrate_lv, integrate_ode, lv_invariant,
                       lyapunov_exponent, regenerate, simulate,
                       step_coupled, step_logistic_map, step_ricker)
from .errors import (ChainLabError, ConfigError, DegenerateSeriesError,
                     DomainViolationError, InsufficientNeighborsError,
                     NonFiniteError, SingularDesignError)
from .perturbation import (AppliedEvent, ExplicitSchedule,
                           PerturbationSchedule, generate_schedule,
                           simulate_perturbed)

__version__ = "0.1.0"

__all__ = [
    "AppliedEvent",
    "BifurcationDiagram",
    "CausalGraphHypothesis",
    "CausalReport",
    "ChainLabError",
    "ChainParams",
    "ChainState",
    "ConfigError",
    "DegenerateSeriesError",
    "DetectorThresholds",
    "DomainViolationError",
    "EmbeddingSpec",
    "ExplicitSchedule",
    "InsufficientNeighborsError",
    "LVParams",
    "NonFiniteError",
    "PerturbationSchedule",
    "SingularDesignError",
    "SweepSpec",
    "Trajectory",
    "adjudicate",
    "attractor_census",
    "ccm",
    "default_param_rule",
    "generate_schedule",
    "granger",
    "integrate_lv",
    "integrate_ode",
    "intervene",
    "interventional_shift",
    "lagged_xcorr",
    "lv_invariant",
    "lyapunov_exponent",
    "quantize",
    "regenerate",
    "scaled_param_rule",
    "simulate",
    "simulate_perturbed",
    "step_coupled",
    "step_logistic_map",
    "step_ricker",
    "sweep",
    "__version__",
]
