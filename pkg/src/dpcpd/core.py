"""Shared domain vocabulary: series validation, configs, results, models.

Indexing convention: every change-point index that leaves this package
(``k_hat``, ``k_star``, ``trigger_k``) is 1-based, so ``k`` means "the cut
falls after the k-th observation". Arrays are stored 0-based internally.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Protocol, Tuple

import numpy as np

from .exceptions import ConfigError

__all__ = [
    "Direction",
    "DetectionConfig",
    "DetectionResult",
    "ChangePointModelParams",
    "Gaussian",
    "Sampler",
    "check_series",
    "search_range",
    "validate_config",
]


class Direction(str, enum.Enum):
    """Which extreme of the statistic marks the change.

    ``ARGMAX`` fits pre-change values that tend to exceed post-change values
    (``Pr[x0 > x1] > 1/2``); ``ARGMIN`` fits the opposite.
    """

    ARGMAX = "argmax"
    ARGMIN = "argmin"

    @classmethod
    def coerce(cls, value) -> "Direction":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigError(
                "direction", f"direction must be 'argmax' or 'argmin', got {value!r}"
            ) from None


def check_series(values, *, min_length: int = 2) -> np.ndarray:
    """Validate a univariate series and return it as a float64 array."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.reshape(-1)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D series, got shape {arr.shape}")
    if arr.shape[0] < min_length:
        raise ValueError(f"series needs at least {min_length} values, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("series contains NaN or infinite values")
    return arr


def search_range(gamma: float, n: int) -> Tuple[int, int]:
    """Inclusive 1-based bounds ``(ceil(gamma*n), floor((1-gamma)*n))``."""
    # Round before ceil/floor so 0.1 * 200 = 20.000000000000004 stays 20.
    lo = math.ceil(round(gamma * n, 9))
    hi = math.floor(round((1.0 - gamma) * n, 9))
    return lo, hi


@dataclass(frozen=True)
class DetectionConfig:
    """Privacy and search parameters for one detection.

    ``epsilon=math.inf`` is the non-private baseline: no noise is drawn.
    """

    epsilon: float = 1.0
    gamma: float = 0.1
    direction: Direction = Direction.ARGMAX
    seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction.coerce(self.direction))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def private(self) -> bool:
        return not math.isinf(self.epsilon)


def validate_config(cfg: DetectionConfig, n: int, online: bool = False) -> None:
    """Raise :class:`ConfigError` unless ``cfg`` is usable on ``n`` points."""
    eps = cfg.epsilon
    if math.isnan(eps) or eps <= 0 or eps == -math.inf:
        raise ConfigError("epsilon", f"epsilon must be > 0 or inf, got {eps}")
    if not (0.0 < cfg.gamma < 0.5):
        raise ConfigError("gamma", f"gamma must lie in (0, 1/2), got {cfg.gamma}")
    if online and not cfg.gamma < 0.25:
        raise ConfigError(
            "gamma_online", f"online detection requires gamma < 1/4, got {cfg.gamma}"
        )
    if n < 2:
        raise ConfigError("n", f"need at least 2 observations, got {n}")
    lo, hi = search_range(cfg.gamma, n)
    # k = n would leave no post-change points, so the usable range stops at n-1.
    if lo < 1 or hi > n - 1 or lo > hi:
        raise ConfigError(
            "empty_range",
            f"search range [{lo}, {hi}] is empty for gamma={cfg.gamma}, n={n}",
        )


@dataclass(frozen=True)
class DetectionResult:
    """Output of a detector.

    ``noisy_scores`` holds ``(k, V(k), V(k) + Z_k)`` triples only when a
    caller asked for diagnostics; releasing them spends more privacy than
    releasing ``k_hat`` alone.
    """

    k_hat: int
    noisy_scores: Optional[Tuple[Tuple[int, float, float], ...]] = None


class Sampler(Protocol):
    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray: ...


@dataclass(frozen=True)
class Gaussian:
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.sigma < 0 or not math.isfinite(self.sigma):
            raise ValueError(f"sigma must be finite and >= 0, got {self.sigma}")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.sigma == 0:
            return np.full(size, float(self.mu))
        return rng.normal(self.mu, self.sigma, size)


@dataclass(frozen=True)
class ChangePointModelParams:
    """``x_1..x_{k_star}`` from ``pre``, ``x_{k_star+1}..x_n`` from ``post``."""

    n: int
    k_star: int
    pre: Sampler = field(default_factory=Gaussian)
    post: Sampler = field(default_factory=lambda: Gaussian(5.0, 1.0))

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if not 1 <= self.k_star <= self.n:
            raise ValueError(f"k_star must lie in [1, n], got {self.k_star}")
