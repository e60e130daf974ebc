"""Fatigue-modulated STDP.

A single leaky integrate-and-fire neuron learns through additive STDP while
each synapse's transmitted strength is reduced by short-term fatigue.  The
fatigue makes learning follow fine spike coincidences rather than raw input
rate.  The package bundles the simulation engine, input generators,
covariance analytics, a rate-level theory of the learning outcome, station
data ingestion and a command-line harness.
"""

__version__ = "0.1.0"

from .analytics import (
    CovMatrix,
    SeparationReport,
    cov_with_mean_input,
    normalized_cov,
    separation_metrics,
    uncentered_cov,
)
from .core import (
    NeuronConfig,
    NeuronState,
    SimClock,
    SimResult,
    SpikeRaster,
    calibrate_threshold,
    integrate_step,
    pilot_rate,
    run_simulation,
)
from .datagen import (
    ProcessSpec,
    empirical_correlation,
    generate_correlated_binary,
    generate_weatherlike,
    reference_synthetic_spec,
)
from .exceptions import (
    CalibrationError,
    ConflictError,
    DegenerateConditionError,
    DimensionError,
    FSTDPError,
    InvalidInputError,
    InvalidSpecError,
    ParseError,
    UndefinedCorrelationError,
    ValidationError,
)
from .plasticity import (
    FatigueParams,
    KernelParams,
    Mode,
    PlasticityConfig,
    SynapseState,
    efficacy,
    stdp_kernel,
)
from .theory import TheoryParams, causal_P, learning_condition, p_i, q_i

__all__ = [name for name in dir() if not name.startswith("_")]
