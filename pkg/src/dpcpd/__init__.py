"""Differentially private nonparametric change-point detection."""

from .core import (
    ChangePointModelParams,
    DetectionConfig,
    DetectionResult,
    Direction,
    Gaussian,
    check_series,
    search_range,
    validate_config,
)
from .drift import DriftModelParams, DriftPNCPD, PairDifference, detect_drift, generate_drift, pair_difference
from .exceptions import ConfigError, DomainError, EmptyError, HaltedError, LengthError, ScaleError, StateError
from .mechanisms import AboveThreshold, LaplaceSampler, report_max
from .offline import (
    PNCPD,
    AccuracyBoundInputs,
    accuracy_bound_nonprivate,
    accuracy_bound_private,
    detect_nonprivate,
    detect_pncpd,
)
from .online import OnlineConfig, OnlineDetector, OnlinePNCPD, min_window_size, threshold_bounds
from .rank_stats import WindowStatEngine, sensitivity_offline, sensitivity_window, v_stat_bruteforce, v_stats_all
from .simulation import AccuracyCurve, ExperimentSpec, generate_changepoint, run_experiment, separation_probability

__version__ = "0.1.0"
