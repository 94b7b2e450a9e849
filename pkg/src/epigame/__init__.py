"""Best-response epidemic game on a weighted complete graph.

Agents pick actions in [0, 1] to maximize a myopic utility; actions times
viral exposure above an immunity threshold cause infection.  The package
provides exact single-epoch mechanics, deterministic and seeded trajectory
runs, an exact finite-horizon enumerator, the catalogue of closed-form
limiting laws for the homogeneous preset, and a comparison/report harness.
"""

from .model import (
    EpochRecord,
    ModelConfig,
    State,
    UtilityCurve,
    ValidationError,
    best_response,
    epoch_step,
    exposure,
    infection_update,
    utility,
)
from .dynamics import (
    AgentSequence,
    EmpiricalLaw,
    Trajectory,
    first_hit_stats,
    is_absorbing,
    monte_carlo,
    run_dvsp,
    run_svsp_sample,
)
from .enumeration import (
    StateDistribution,
    SupportCapExceeded,
    absorbed_mass,
    advance,
    enumerate_exact,
    marginal_infected_size,
)
from .theory import (
    ActionProfileClass,
    Law,
    Regime,
    RegimeThresholds,
    UncoveredRegimeError,
    action_law,
    classify_action_profile,
    classify_regime,
    eta,
    eta_series,
    infected_law,
    predict_action_limit,
    stirling2,
    thresholds,
)
from .analysis import ComparisonRow, build_table, tv_distance, tv_series

__version__ = "0.1.0"

__all__ = [
    "AgentSequence",
    "ActionProfileClass",
    "ComparisonRow",
    "EmpiricalLaw",
    "EpochRecord",
    "Law",
    "ModelConfig",
    "Regime",
    "RegimeThresholds",
    "State",
    "StateDistribution",
    "SupportCapExceeded",
    "Trajectory",
    "UncoveredRegimeError",
    "UtilityCurve",
    "ValidationError",
    "absorbed_mass",
    "action_law",
    "advance",
    "best_response",
    "build_table",
    "classify_action_profile",
    "classify_regime",
    "enumerate_exact",
    "epoch_step",
    "eta",
    "eta_series",
    "exposure",
    "first_hit_stats",
    "infected_law",
    "infection_update",
    "is_absorbing",
    "marginal_infected_size",
    "monte_carlo",
    "predict_action_limit",
    "run_dvsp",
    "run_svsp_sample",
    "stirling2",
    "thresholds",
    "tv_distance",
    "tv_series",
    "utility",
]
