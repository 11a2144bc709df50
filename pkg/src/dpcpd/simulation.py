"""Monte Carlo harness: synthetic data, repeated detection, accuracy curves.

Every trial draws its data and its noise from ``SeedSequence([base_seed,
trial])``, so trials are independent of execution order and can run in a
process pool without changing any result.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.special import ndtr

from .core import ChangePointModelParams, DetectionConfig, Gaussian, Sampler
from .drift import DriftModelParams, detect_drift, generate_drift
from .mechanisms import LaplaceSampler
from .offline import detect_nonprivate, detect_pncpd
from .online import NoChangeDetected, OnlineConfig, OnlineDetector

__all__ = [
    "generate_changepoint",
    "separation_probability",
    "AccuracyCurve",
    "ExperimentSpec",
    "TrialRecord",
    "ExperimentResult",
    "run_experiment",
    "DETECTORS",
]

DETECTORS = ("nonprivate", "pncpd", "online", "drift")


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def generate_changepoint(params: ChangePointModelParams, seed=None) -> np.ndarray:
    rng = _rng(seed)
    pre = params.pre.sample(rng, params.k_star)
    post = params.post.sample(rng, params.n - params.k_star)
    return np.concatenate([pre, post]).astype(np.float64)


def separation_probability(
    pre: Sampler,
    post: Sampler,
    *,
    draws: int = 10**6,
    seed=0,
    return_stderr: bool = False,
):
    """``a = Pr[x0 > x1]`` for ``x0 ~ pre`` and ``x1 ~ post``.

    Gaussian pairs use the closed form (standard error 0); anything else is
    estimated from ``draws`` independent pairs.
    """
    if isinstance(pre, Gaussian) and isinstance(post, Gaussian):
        scale = math.hypot(pre.sigma, post.sigma)
        diff = pre.mu - post.mu
        if scale == 0:
            a = 1.0 if diff > 0 else 0.0
        else:
            a = float(ndtr(diff / scale))
        se = 0.0
    else:
        rng = _rng(seed)
        hits = pre.sample(rng, draws) > post.sample(rng, draws)
        a = float(np.mean(hits))
        se = math.sqrt(a * (1.0 - a) / draws)
    return (a, se) if return_stderr else a


@dataclass(frozen=True)
class AccuracyCurve:
    """Empirical ``beta(alpha) = Pr[|k_hat - k_star| > alpha]``."""

    alphas: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.betas) > 0):
            raise ValueError("accuracy curve must be non-increasing in alpha")

    @classmethod
    def from_errors(cls, errors: Sequence[float], max_alpha: int) -> "AccuracyCurve":
        err = np.asarray(errors, dtype=np.float64)
        alphas = np.arange(max_alpha + 1)
        betas = (err[None, :] > alphas[:, None]).mean(axis=1)
        return cls(alphas, betas)

    def beta(self, alpha: int) -> float:
        return float(self.betas[int(alpha)])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["alpha", "beta"])
            for a, b in zip(self.alphas, self.betas):
                w.writerow([int(a), repr(float(b))])

    def to_svg(self, path, title: str = "") -> None:
        """Step plot of the curve on a fixed 0..1 vertical axis."""
        width, height, pad = 480, 320, 40
        amax = max(int(self.alphas[-1]), 1)

        def sx(a):
            return pad + (width - 2 * pad) * a / amax

        def sy(b):
            return height - pad - (height - 2 * pad) * b

        pts = []
        for a, b in zip(self.alphas, self.betas):
            pts.append(f"{sx(a):.2f},{sy(b):.2f}")
        svg = [
            f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" '
            f'width="{width}" height="{height}">',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
            f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
            f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
            f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle" font-size="12">alpha (0..{amax})</text>',
            f'<text x="12" y="{height / 2}" font-size="12" transform="rotate(-90 12 {height / 2})" '
            'text-anchor="middle">beta</text>',
            f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="13">{_xml_escape(title)}</text>',
            f'<polyline fill="none" stroke="#d95f02" stroke-width="2" points="{" ".join(pts)}"/>',
            "</svg>",
        ]
        Path(path).write_text("\n".join(svg) + "\n")


def _xml_escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


@dataclass(frozen=True)
class ExperimentSpec:
    """One Monte Carlo experiment.

    ``model`` is a :class:`ChangePointModelParams` for the ``nonprivate``,
    ``pncpd`` and ``online`` detectors and a :class:`DriftModelParams` for
    ``drift``. ``cfg`` is a :class:`DetectionConfig`, or an
    :class:`OnlineConfig` for ``online`` (where ``model.n`` is the stream
    length and ``cfg.n`` the window size).
    """

    model: Union[ChangePointModelParams, DriftModelParams]
    detector: str
    cfg: Union[DetectionConfig, OnlineConfig]
    trials: int = 1000
    base_seed: int = 0

    def __post_init__(self):
        if self.detector not in DETECTORS:
            raise ValueError(f"detector must be one of {DETECTORS}, got {self.detector!r}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.base_seed < 0:
            raise ValueError("base_seed must be non-negative")
        want_drift = self.detector == "drift"
        if want_drift != isinstance(self.model, DriftModelParams):
            raise ValueError("the drift detector pairs with DriftModelParams, and only it")
        want_online = self.detector == "online"
        if want_online != isinstance(self.cfg, OnlineConfig):
            raise ValueError("the online detector pairs with OnlineConfig, and only it")
        if want_online:
            self.cfg.validate()


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    k_star: int
    k_hat: Optional[int]
    error: float
    trigger_k: Optional[int] = None
    false_alarm: bool = False
    miss: bool = False

    @property
    def correct_window(self) -> bool:
        return self.k_hat is not None and not (self.false_alarm or self.miss)


@dataclass
class ExperimentResult:
    curve: AccuracyCurve
    records: List[TrialRecord] = field(default_factory=list)

    @property
    def false_alarm_rate(self) -> float:
        return float(np.mean([r.false_alarm for r in self.records]))

    @property
    def miss_rate(self) -> float:
        return float(np.mean([r.miss for r in self.records]))

    def errors(self) -> np.ndarray:
        return np.array([r.error for r in self.records])

    def write_trials_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "k_star", "k_hat", "error", "trigger_k", "false_alarm", "miss"])
            for r in self.records:
                w.writerow(
                    [
                        r.trial,
                        r.k_star,
                        "" if r.k_hat is None else r.k_hat,
                        "inf" if math.isinf(r.error) else int(r.error),
                        "" if r.trigger_k is None else r.trigger_k,
                        int(r.false_alarm),
                        int(r.miss),
                    ]
                )


def trial_seeds(base_seed: int, trial: int):
    data_ss, noise_ss = np.random.SeedSequence([base_seed, trial]).spawn(2)
    return np.random.default_rng(data_ss), LaplaceSampler(np.random.default_rng(noise_ss))


def run_trial(spec: ExperimentSpec, trial: int) -> TrialRecord:
    data_rng, sampler = trial_seeds(spec.base_seed, trial)
    model, cfg = spec.model, spec.cfg
    k_star = model.k_star

    if spec.detector == "drift":
        x = generate_drift(model, data_rng)
        k_hat = detect_drift(x, cfg, sampler).k_hat
        return TrialRecord(trial, k_star, k_hat, float(abs(k_hat - k_star)))

    x = generate_changepoint(model, data_rng)
    if spec.detector == "nonprivate":
        k_hat = detect_nonprivate(x, cfg.gamma, cfg.direction).k_hat
        return TrialRecord(trial, k_star, k_hat, float(abs(k_hat - k_star)))
    if spec.detector == "pncpd":
        k_hat = detect_pncpd(x, cfg, sampler).k_hat
        return TrialRecord(trial, k_star, k_hat, float(abs(k_hat - k_star)))

    outcome = OnlineDetector(cfg, sampler).run(x)
    if isinstance(outcome, NoChangeDetected):
        return TrialRecord(trial, k_star, None, math.inf, miss=True)
    trig = outcome.trigger_k
    k_hat = outcome.result.k_hat
    # the windows that straddle the change are those centred in (k* - n/2, k*]
    return TrialRecord(
        trial,
        k_star,
        k_hat,
        float(abs(k_hat - k_star)),
        trigger_k=trig,
        false_alarm=trig <= k_star - cfg.n // 2,
        miss=trig > k_star,
    )


def _run_chunk(args):
    spec, trials = args
    return [run_trial(spec, t) for t in trials]


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> ExperimentResult:
    """Run ``spec.trials`` independent trials; ``alpha`` spans ``0..model.n``."""
    trials = list(range(spec.trials))
    if jobs > 1 and spec.trials > 1:
        chunks = [trials[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(_run_chunk, [(spec, c) for c in chunks])
            records = sorted((r for part in parts for r in part), key=lambda r: r.trial)
    else:
        records = [run_trial(spec, t) for t in trials]
    curve = AccuracyCurve.from_errors([r.error for r in records], spec.model.n)
    return ExperimentResult(curve, records)
