"""Direct multipath SLAM: particle-based belief propagation on raw radio snapshots.

The agent position, the virtual anchors behind each physical anchor and the
noise variance are tracked directly from sampled received signals, without
an intermediate channel estimator or data association.

Modules
-------
geometry     floor plans, mirror-image virtual anchors, specular ray tracing
signal       delay grid, contribution vectors, synthetic signals, matched filter
likelihood   complex Gaussian log-densities via Cholesky factors
models       state transitions, birth cells and the inference parameters
engine       one belief-propagation step: predict, propose, update, resample, declare
evaluation   RMSE, CDF, GOSPA, track loss and CSV writers
config       YAML scenario files
runner       seeded Monte Carlo runs
outputs      output directories: run records, metric CSVs, manifest
"""
from .config import ScenarioConfig, load_config
from .engine import Beliefs, DegeneracyError, PriorConfig, StepEstimates, initialize_beliefs, step
from .evaluation import detect_track_loss, empirical_cdf, gospa, rmse_per_step
from .geometry import Environment, Surface, ground_truth_features
from .likelihood import NumericalError
from .models import ModelConfig
from .outputs import emit_outputs, load_outputs
from .runner import RunRecord, run_all, run_experiment
from .signal import AmplitudeModel, SignalSpec, contribution_vector, matched_filter_spectrum, synthesize_received

__version__ = "0.1.0"

__all__ = [
    "AmplitudeModel", "Beliefs", "DegeneracyError", "Environment", "ModelConfig", "NumericalError",
    "PriorConfig", "RunRecord", "ScenarioConfig", "SignalSpec", "StepEstimates", "Surface",
    "contribution_vector", "detect_track_loss", "emit_outputs", "empirical_cdf", "ground_truth_features",
    "gospa", "initialize_beliefs", "load_config", "load_outputs", "matched_filter_spectrum",
    "rmse_per_step", "run_all", "run_experiment", "step", "synthesize_received",
]
