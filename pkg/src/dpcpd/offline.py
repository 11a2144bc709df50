"""Offline private change-point detection and its accuracy bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .core import (
    DetectionConfig,
    DetectionResult,
    Direction,
    check_series,
    validate_config,
)
from .exceptions import DomainError
from .mechanisms import LaplaceSampler, report_max
from .rank_stats import sensitivity_offline, v_stats_all

__all__ = [
    "detect_nonprivate",
    "detect_pncpd",
    "AccuracyBoundInputs",
    "accuracy_bound_nonprivate",
    "accuracy_bound_private",
    "PNCPD",
]


def _oriented_scores(x: np.ndarray, gamma: float, direction: Direction):
    pairs = v_stats_all(x, gamma)
    ks = np.array([k for k, _ in pairs])
    stats = np.array([v for _, v in pairs])
    # argmin runs through the same argmax path on the negated statistic
    oriented = stats if direction is Direction.ARGMAX else -stats
    return ks, stats, oriented


def detect_nonprivate(series, gamma: float, direction=Direction.ARGMAX) -> DetectionResult:
    """Exact argmax (or argmin) of ``V(k)`` over the gamma-constrained range."""
    cfg = DetectionConfig(epsilon=math.inf, gamma=gamma, direction=direction)
    x = check_series(series)
    validate_config(cfg, x.shape[0])
    ks, _, oriented = _oriented_scores(x, cfg.gamma, cfg.direction)
    return DetectionResult(k_hat=int(ks[int(np.argmax(oriented))]))


def detect_pncpd(
    series,
    cfg: DetectionConfig,
    sampler: Optional[LaplaceSampler] = None,
    *,
    return_scores: bool = False,
) -> DetectionResult:
    """Private change-point estimate: noisy argmax of ``V(k)``.

    Each ``V(k)`` gets independent ``Lap(2 / (epsilon * gamma * n))`` noise.
    ``sampler`` overrides ``cfg.seed`` when given. ``return_scores`` attaches
    every noisy score to the result, which leaks far more than ``k_hat``.
    """
    x = check_series(series)
    n = x.shape[0]
    validate_config(cfg, n)
    ks, stats, oriented = _oriented_scores(x, cfg.gamma, cfg.direction)
    if sampler is None and cfg.private:
        sampler = LaplaceSampler(cfg.seed)
    idx, noisy = report_max(
        oriented,
        sensitivity_offline(cfg.gamma, n),
        cfg.epsilon,
        noise_multiplier=2,
        sampler=sampler,
        return_noisy=True,
    )
    scores = None
    if return_scores:
        sign = 1.0 if cfg.direction is Direction.ARGMAX else -1.0
        scores = tuple(
            (int(k), float(v), float(sign * z)) for k, v, z in zip(ks, stats, noisy)
        )
    return DetectionResult(k_hat=int(ks[idx]), noisy_scores=scores)


@dataclass(frozen=True)
class AccuracyBoundInputs:
    """Parameters of the accuracy bounds.

    ``a`` is the separation probability ``Pr[x0 > x1]``; for an argmin
    setting pass its reflection ``|a - 1/2| + 1/2``.
    """

    a: float
    gamma: float
    beta: float
    epsilon: float = math.inf

    def __post_init__(self):
        if not 0.5 < self.a < 1.0:
            raise DomainError(f"a must lie in (1/2, 1), got {self.a}")
        if not 0.0 < self.gamma < 0.5:
            raise DomainError(f"gamma must lie in (0, 1/2), got {self.gamma}")
        if not 0.0 < self.beta < 1.0:
            raise DomainError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be > 0, got {self.epsilon}")


def _geometric_tail_alpha(rate: float, log_term: float) -> float:
    # smallest alpha with 2 exp(-rate alpha) / (1 - exp(-rate)) <= beta-share
    return (log_term - math.log(-math.expm1(-rate))) / rate


def accuracy_bound_nonprivate(inp: AccuracyBoundInputs) -> float:
    """Additive error ``alpha`` guaranteed with probability ``1 - beta``, no noise."""
    gap = inp.a - 0.5
    rate = 2.0 * inp.gamma**4 * gap**2 / 13.0
    return _geometric_tail_alpha(rate, math.log(2.0 / inp.beta))


def accuracy_bound_private(inp: AccuracyBoundInputs) -> float:
    """Additive error of the private detector: max of the data and noise terms."""
    if math.isinf(inp.epsilon):
        raise DomainError("accuracy_bound_private needs a finite epsilon")
    gap = inp.a - 0.5
    log4b = math.log(4.0 / inp.beta)
    data_term = _geometric_tail_alpha(inp.gamma**4 * gap**2 / 26.0, log4b)
    noise_term = _geometric_tail_alpha(inp.epsilon * inp.gamma * gap / 8.0, log4b)
    return max(data_term, noise_term)


class PNCPD(BaseEstimator):
    """Estimator wrapper around :func:`detect_pncpd`.

    Parameters
    ----------
    epsilon : float, default=1.0
        Privacy parameter; ``math.inf`` gives the non-private estimate.
    gamma : float, default=0.1
        Restricts the search to ``ceil(gamma n)..floor((1-gamma) n)``.
    direction : {"argmax", "argmin"}, default="argmax"
    random_state : int or None
        Seed for the Laplace noise.
    return_scores : bool, default=False
        Keep the noisy scores in ``noisy_scores_`` (privacy-violating).

    Attributes
    ----------
    changepoint_ : int
        1-based index of the last pre-change observation.
    n_samples_ : int
    """

    def __init__(
        self,
        epsilon=1.0,
        gamma=0.1,
        direction="argmax",
        random_state=None,
        return_scores=False,
    ):
        self.epsilon = epsilon
        self.gamma = gamma
        self.direction = direction
        self.random_state = random_state
        self.return_scores = return_scores

    def _config(self) -> DetectionConfig:
        return DetectionConfig(
            epsilon=self.epsilon,
            gamma=self.gamma,
            direction=self.direction,
            seed=self.random_state,
        )

    def fit(self, X, y=None):
        x = check_series(X)
        result = detect_pncpd(x, self._config(), return_scores=self.return_scores)
        self.changepoint_ = result.k_hat
        self.n_samples_ = x.shape[0]
        self.noisy_scores_ = result.noisy_scores
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        """Fit, then label each observation 0 (pre-change) or 1 (post-change)."""
        self.fit(X)
        return self.segment_labels()

    def segment_labels(self) -> np.ndarray:
        check_is_fitted(self, "changepoint_")
        labels = np.zeros(self.n_samples_, dtype=int)
        labels[self.changepoint_ :] = 1
        return labels
