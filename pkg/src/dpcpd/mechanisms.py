"""Laplace noise, Report Noisy Max and AboveThreshold.

The generator is numpy's PCG64, a statistical PRNG. Floating-point Laplace
sampling is also open to known precision attacks, so these mechanisms are
meant for research reproduction, not adversarial deployment.
"""

from __future__ import annotations

import enum
import math
from typing import Optional, Sequence

import numpy as np

from .exceptions import EmptyError, HaltedError, ScaleError

__all__ = [
    "LaplaceSampler",
    "laplace_sample",
    "report_max",
    "AboveThreshold",
    "Answer",
]

_TWO_POW_MINUS_53 = 2.0 ** -53


class LaplaceSampler:
    """Seeded Laplace source using the inverse CDF of one open-interval uniform.

    Draws are deterministic given the seed and the sequence of calls. Uniforms
    are pulled from the generator in blocks, so single draws stay cheap.
    """

    _BLOCK = 4096

    def __init__(self, seed=None):
        if isinstance(seed, np.random.Generator):
            self.rng = seed
        else:
            self.rng = np.random.default_rng(seed)
        self._block = np.empty(0)
        self._pos = 0

    def _uniforms(self, size: int) -> np.ndarray:
        # (k + 0.5) / 2**53 is never exactly 0 or 1
        k = self.rng.integers(0, 2**53, size=size, dtype=np.int64)
        return (k + 0.5) * _TWO_POW_MINUS_53

    @staticmethod
    def _inverse_cdf(u, scale):
        centred = u - 0.5
        return -scale * np.sign(centred) * np.log1p(-2.0 * np.abs(centred))

    def _take(self, size: int) -> np.ndarray:
        parts = []
        while size > 0:
            if self._pos >= self._block.shape[0]:
                self._block = self._uniforms(self._BLOCK)
                self._pos = 0
            chunk = self._block[self._pos : self._pos + size]
            self._pos += chunk.shape[0]
            size -= chunk.shape[0]
            parts.append(chunk)
        return np.concatenate(parts) if len(parts) != 1 else parts[0]

    def sample(self, scale: float) -> float:
        _check_scale(scale)
        if self._pos >= self._block.shape[0]:
            self._block = self._uniforms(self._BLOCK)
            self._pos = 0
        centred = float(self._block[self._pos]) - 0.5
        self._pos += 1
        return -scale * math.copysign(1.0, centred) * math.log1p(-2.0 * abs(centred))

    def sample_many(self, scale: float, size: int) -> np.ndarray:
        _check_scale(scale)
        if size == 0:
            return np.empty(0)
        return self._inverse_cdf(self._take(size), scale)


def _check_scale(scale: float) -> None:
    if not scale > 0 or math.isinf(scale):
        raise ScaleError(f"Laplace scale must be finite and > 0, got {scale}")


def laplace_sample(sampler: LaplaceSampler, scale: float) -> float:
    return sampler.sample(scale)


def report_max(
    values: Sequence[float],
    sensitivity: float,
    epsilon: float,
    noise_multiplier: int = 1,
    sampler: Optional[LaplaceSampler] = None,
    *,
    return_noisy: bool = False,
):
    """Index (0-based) of the largest ``values[i] + Lap(mult * sensitivity / epsilon)``.

    With ``epsilon=inf`` no noise is drawn and the plain argmax is returned,
    ties going to the lowest index. ``noise_multiplier=2`` is needed when the
    queries are not monotone in the data.
    """
    vals = np.asarray(values, dtype=np.float64)
    if vals.ndim != 1 or vals.shape[0] == 0:
        raise EmptyError("report_max needs at least one query answer")
    if not sensitivity > 0:
        raise ScaleError(f"sensitivity must be > 0, got {sensitivity}")
    if noise_multiplier not in (1, 2):
        raise ValueError(f"noise_multiplier must be 1 or 2, got {noise_multiplier}")
    if math.isinf(epsilon):
        noisy = vals.copy()
    else:
        if not epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {epsilon}")
        if sampler is None:
            sampler = LaplaceSampler()
        scale = noise_multiplier * sensitivity / epsilon
        noisy = vals + sampler.sample_many(scale, vals.shape[0])
    idx = int(np.argmax(noisy))
    if return_noisy:
        return idx, noisy
    return idx


class Answer(enum.Enum):
    TOP = "top"
    BOTTOM = "bottom"


class AboveThreshold:
    """Sparse-vector threshold test that halts at its first Top.

    The noisy threshold ``T + Lap(2*delta/epsilon)`` is drawn once here;
    every query gets fresh ``Lap(4*delta/epsilon)`` noise.
    """

    def __init__(
        self,
        threshold: float,
        sensitivity: float,
        epsilon: float,
        sampler: Optional[LaplaceSampler] = None,
    ):
        if not sensitivity > 0:
            raise ScaleError(f"sensitivity must be > 0, got {sensitivity}")
        if not (epsilon > 0):
            raise ValueError(f"epsilon must be > 0 or inf, got {epsilon}")
        self.threshold = float(threshold)
        self.sensitivity = float(sensitivity)
        self.epsilon = float(epsilon)
        self.sampler = sampler if sampler is not None else LaplaceSampler()
        self.halted = False
        self.queries = 0
        if math.isinf(self.epsilon):
            self.noisy_threshold = self.threshold
        else:
            self.noisy_threshold = self.threshold + self.sampler.sample(
                2.0 * self.sensitivity / self.epsilon
            )

    def step(self, answer: float) -> Answer:
        if self.halted:
            raise HaltedError("AboveThreshold already halted after a Top answer")
        self.queries += 1
        noisy = float(answer)
        if not math.isinf(self.epsilon):
            noisy += self.sampler.sample(4.0 * self.sensitivity / self.epsilon)
        if noisy > self.noisy_threshold:
            self.halted = True
            return Answer.TOP
        return Answer.BOTTOM
