"""Streaming private change-point detection.

A window of the latest ``n`` points slides over the stream. Its midpoint
statistic ``U(k)`` feeds an AboveThreshold test run at ``epsilon/2``; once
the test fires, the detector waits ``ceil(gamma n)`` more points and runs
the offline detector at ``epsilon/2`` on the latest ``n`` points. The two
halves compose to ``epsilon`` overall.

Stream positions are 1-based. The window "centred at k" covers
``k - n/2 + 1 .. k + n/2``, so the first scan happens at ``k = n/2 + 1``,
when point ``n + 1`` arrives.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, List, Optional, Union

import numpy as np
from sklearn.base import BaseEstimator

from .core import DetectionConfig, DetectionResult, Direction, validate_config
from .exceptions import ConfigError, DomainError, StateError
from .mechanisms import AboveThreshold, Answer, LaplaceSampler
from .offline import detect_pncpd
from .rank_stats import WindowStatEngine, sensitivity_window

__all__ = [
    "OnlineConfig",
    "Phase",
    "NeedMoreData",
    "Scanned",
    "Triggered",
    "Result",
    "NoChangeDetected",
    "OnlineDetector",
    "online_push",
    "OnlinePNCPD",
    "ThresholdBounds",
    "threshold_bounds",
    "min_window_size",
]


@dataclass(frozen=True)
class OnlineConfig:
    n: int = 500
    epsilon: float = 1.0
    gamma: float = 0.1
    threshold: float = 0.8
    seed: Optional[int] = None

    def validate(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or self.n < 4 or self.n % 2:
            raise ConfigError("n", f"window size must be an even integer >= 4, got {self.n}")
        if not math.isfinite(self.threshold):
            raise ConfigError("threshold", f"threshold must be finite, got {self.threshold}")
        validate_config(
            DetectionConfig(epsilon=self.epsilon, gamma=self.gamma), self.n, online=True
        )

    @property
    def wait(self) -> int:
        """Points to wait after a trigger before the finishing call."""
        return math.ceil(round(self.gamma * self.n, 9))


class Phase(enum.Enum):
    WARMUP = "warmup"
    SCANNING = "scanning"
    WAITING = "waiting"
    DONE = "done"


@dataclass(frozen=True)
class NeedMoreData:
    t: int


@dataclass(frozen=True)
class Scanned:
    """The window centred at ``k`` was tested and did not fire."""

    k: int


@dataclass(frozen=True)
class Triggered:
    k: int


@dataclass(frozen=True)
class Result:
    """Final estimate; ``result.k_hat`` is a global stream index."""

    result: DetectionResult
    trigger_k: int
    window_start: int


@dataclass(frozen=True)
class NoChangeDetected:
    reason: str
    points_seen: int


Event = Union[NeedMoreData, Scanned, Triggered, Result]


class OnlineDetector:
    """Single-stream detector state. Push points in order; not thread-safe."""

    def __init__(self, cfg: OnlineConfig, sampler: Optional[LaplaceSampler] = None):
        cfg.validate()
        self.cfg = cfg
        self.sampler = sampler if sampler is not None else LaplaceSampler(cfg.seed)
        self.phase = Phase.WARMUP
        self.t = 0
        self.engine = WindowStatEngine(cfg.n)
        self._recent: deque = deque(maxlen=cfg.n)
        self.remaining: Optional[int] = None
        self.trigger_k: Optional[int] = None
        self.outcome: Optional[Result] = None
        # noisy threshold is drawn here, once
        self._test = AboveThreshold(
            cfg.threshold, sensitivity_window(cfg.n), cfg.epsilon / 2.0, self.sampler
        )

    @property
    def noisy_threshold(self) -> float:
        return self._test.noisy_threshold

    def push(self, x: float) -> Event:
        if self.phase is Phase.DONE:
            raise StateError("detector already produced its result")
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"stream value must be finite, got {x}")
        self.t += 1
        self._recent.append(x)
        n = self.cfg.n

        if self.phase is Phase.WARMUP:
            if self.t == n:
                self.engine.warm(list(self._recent))
                self.phase = Phase.SCANNING
            return NeedMoreData(self.t)

        if self.phase is Phase.SCANNING:
            k = self.t - n // 2
            u = self.engine.push(x)
            if self._test.step(u) is Answer.TOP:
                self.phase = Phase.WAITING
                self.trigger_k = k
                self.remaining = self.cfg.wait
                return Triggered(k)
            return Scanned(k)

        self.remaining -= 1
        if self.remaining > 0:
            return NeedMoreData(self.t)
        return self._finish()

    def _finish(self) -> Result:
        cfg = self.cfg
        finishing = DetectionConfig(
            epsilon=cfg.epsilon / 2.0, gamma=cfg.gamma, direction=Direction.ARGMAX
        )
        offline = detect_pncpd(np.asarray(self._recent), finishing, self.sampler)
        start = self.t - cfg.n + 1
        self.outcome = Result(
            result=DetectionResult(k_hat=start - 1 + offline.k_hat),
            trigger_k=self.trigger_k,
            window_start=start,
        )
        self.phase = Phase.DONE
        return self.outcome

    def close(self) -> Union[Result, NoChangeDetected]:
        """Outcome at end of stream."""
        if self.outcome is not None:
            return self.outcome
        if self.phase is Phase.WARMUP:
            return NoChangeDetected("warmup incomplete", self.t)
        if self.phase is Phase.WAITING:
            return NoChangeDetected("stream ended while waiting after trigger", self.t)
        return NoChangeDetected("no trigger before end of stream", self.t)

    def run(self, stream: Iterable[float]) -> Union[Result, NoChangeDetected]:
        for x in stream:
            if isinstance(self.push(x), Result):
                break
        return self.close()


def online_push(state: OnlineDetector, x: float) -> Event:
    return state.push(x)


class OnlinePNCPD(BaseEstimator):
    """Estimator wrapper around :class:`OnlineDetector`.

    ``partial_fit`` feeds more points to the same stream; ``fit`` starts over.
    After a result, ``changepoint_`` holds the global 1-based estimate and
    ``trigger_index_`` the window centre that fired. Points pushed after the
    result are ignored.
    """

    def __init__(self, window_size=500, epsilon=1.0, gamma=0.1, threshold=0.8, random_state=None):
        self.window_size = window_size
        self.epsilon = epsilon
        self.gamma = gamma
        self.threshold = threshold
        self.random_state = random_state

    def _reset(self):
        cfg = OnlineConfig(
            n=self.window_size,
            epsilon=self.epsilon,
            gamma=self.gamma,
            threshold=self.threshold,
            seed=self.random_state,
        )
        self.detector_ = OnlineDetector(cfg)
        self.events_: List[Event] = []
        self.changepoint_ = None
        self.trigger_index_ = None

    def partial_fit(self, X, y=None):
        if not hasattr(self, "detector_"):
            self._reset()
        for x in np.asarray(X, dtype=np.float64).reshape(-1):
            if self.detector_.phase is Phase.DONE:
                break
            event = self.detector_.push(x)
            if not isinstance(event, (NeedMoreData, Scanned)):
                self.events_.append(event)
            if isinstance(event, Triggered):
                self.trigger_index_ = event.k
            elif isinstance(event, Result):
                self.changepoint_ = event.result.k_hat
        return self

    def fit(self, X, y=None):
        self._reset()
        return self.partial_fit(X)


@dataclass(frozen=True)
class ThresholdBounds:
    t_lower: float
    t_upper: float

    @property
    def feasible(self) -> bool:
        return self.t_lower < self.t_upper


def _check_bound_domain(a: float, beta: float, epsilon: float) -> None:
    if not 0.5 < a < 1.0:
        raise DomainError(f"a must lie in (1/2, 1), got {a}")
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta must lie in (0, 1), got {beta}")
    if not epsilon > 0:
        raise DomainError(f"epsilon must be > 0 or inf, got {epsilon}")


def threshold_bounds(n: int, k_star: float, a: float, beta: float, epsilon: float) -> ThresholdBounds:
    """Threshold interval ``[T_L, T_U]`` of the online accuracy guarantee.

    Logarithms are natural. ``epsilon=inf`` drops the AboveThreshold terms.
    """
    _check_bound_domain(a, beta, epsilon)
    if n < 2 or n % 2:
        raise DomainError(f"n must be even and >= 2, got {n}")
    excess = k_star - n / 2.0
    if not excess > 0:
        raise DomainError(f"k_star must exceed n/2 = {n / 2}, got {k_star}")
    priv_l = priv_u = 0.0
    if not math.isinf(epsilon):
        priv_l = 32.0 * math.log(excess / beta) / (n * epsilon)
        priv_u = 32.0 * math.log(8.0 * excess / beta) / (n * epsilon)
    t_lower = 0.5 + math.sqrt(2.0 / n * math.log(8.0 * excess / beta)) + priv_l
    t_upper = a - math.sqrt(2.0 / n * math.log(8.0 / beta)) - priv_u
    return ThresholdBounds(t_lower, t_upper)


def min_window_size(a: float, k_star: float, beta: float, epsilon: float) -> int:
    """Smallest even window size for which ``[T_L, T_U]`` is guaranteed non-empty."""
    _check_bound_domain(a, beta, epsilon)
    if not k_star > 0:
        raise DomainError(f"k_star must be positive, got {k_star}")
    log_k = math.log(8.0 * k_star / beta)
    root = math.sqrt(2.0 * log_k) + math.sqrt(2.0 * math.log(8.0 / beta))
    if not math.isinf(epsilon):
        root += 64.0 / epsilon * log_k
    bound = root**2 / (a - 0.5) ** 2
    n = math.floor(bound) + 1
    return n + (n % 2)
