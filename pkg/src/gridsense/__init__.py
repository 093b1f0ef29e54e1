"""State estimation for power distribution networks from mixed-resolution phasor measurements."""

from .baselines import MetricsReport, compute_metrics, lmmse_estimate
from .bench import AggregateReport, RunConfig, emit_report, load_scenario, run_scenario
from .exceptions import *  # noqa: F401,F403
from .gamp import Estimate, Hyperparams, SolverOptions, run
from .measurements import (
    PRIORS,
    MeasurementSet,
    Scenario,
    StatePrior,
    apply_resolution_profile,
    sample_state,
    selection_for_k,
    simulate_measurements,
)
from .network import (
    NetworkModel,
    assemble_topology,
    builtin_network,
    load_network,
    validate_network,
)
from .quantization import Full, Quantized, QuantizerSpec, quantize, quantize_complex

__version__ = "0.1.0"
