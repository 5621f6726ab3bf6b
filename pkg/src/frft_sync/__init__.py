"""Joint chromatic-dispersion, frequency-offset and timing-offset estimation
from a dual-chirp training sequence using the fractional Fourier transform."""

from .frft_core import ComplexSignal, ChirpSpec, MultCounter, chirp, frft, frft_many
from .framing import FrameConfig, Modulation, TrainingSequence, assemble_frame, generate_ts
from .channel import ChannelConfig, add_awgn, apply_cd, apply_fo, apply_to, resample
from .estimator import (
    DegenerateGeometryError,
    EstimationError,
    JointEstimate,
    SearchConfig,
    TSNotFoundError,
    estimate,
    find_two_peaks,
    solve_joint,
)
from .baselines import complexity_report, traditional_estimate
from .api import JointEstimator, TraditionalEstimator
from .harness import SweepConfig, TrialConfig, compare_methods, run_sweep, run_trial

__version__ = "0.1.0"

__all__ = [
    "ComplexSignal", "ChirpSpec", "MultCounter", "chirp", "frft", "frft_many",
    "FrameConfig", "Modulation", "TrainingSequence", "assemble_frame", "generate_ts",
    "ChannelConfig", "add_awgn", "apply_cd", "apply_fo", "apply_to", "resample",
    "DegenerateGeometryError", "EstimationError", "JointEstimate", "SearchConfig",
    "TSNotFoundError", "estimate", "find_two_peaks", "solve_joint",
    "complexity_report", "traditional_estimate",
    "JointEstimator", "TraditionalEstimator",
    "SweepConfig", "TrialConfig", "compare_methods", "run_sweep", "run_trial",
]
