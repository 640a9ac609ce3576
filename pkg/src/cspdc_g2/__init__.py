"""Heralded g2 of SPDC and cascaded-SPDC single-photon sources.

Three independent models of the same experiment:

* :mod:`cspdc_g2.analytic`  closed-form low-rate approximations,
* :mod:`cspdc_g2.detstate`  exact detector-state (transition matrix) model,
* :mod:`cspdc_g2.montecarlo` window-by-window Monte Carlo oracle,

plus :mod:`cspdc_g2.optsweep` for minimisation over the pair rate, plateau
and threshold searches and parameter sweeps.
"""

from .analytic import (
    advantage_threshold,
    advantage_threshold_identical,
    cspdc_rates,
    f_factor,
    g2_cspdc,
    g2_cspdc_min,
    g2_spdc,
    g2_spdc_min,
    improvement_ratio,
    perfect_g2_detector_limits,
    spdc_rates,
)
from .core import (
    ConfigError,
    DetectorSpec,
    DomainError,
    EstimationError,
    ExperimentConfig,
    FigureOfMerit,
    G2Error,
    G2Result,
    Model,
    RateSet,
    ResourceError,
    SourceKind,
    identical_detectors,
)
from .detstate import MatrixModel, event_probability, final_state, g2_matrix
from .montecarlo import SimulationPlan, g2_estimate, g2_montecarlo, simulate
from .optsweep import minimize_g2, plateau, sweep, threshold_crossing

__version__ = "0.1.0"
