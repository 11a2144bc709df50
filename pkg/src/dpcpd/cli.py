"""Command-line front end.

Subcommands: ``detect-offline``, ``detect-online``, ``thresholds`` and
``simulate``. Exit status is 0 on success (a stream without a detected change
counts as success), 2 on usage, configuration or parse errors, 1 otherwise.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import secrets
import sys
from pathlib import Path
from typing import Iterator, List, Optional

import numpy as np

from .core import ChangePointModelParams, DetectionConfig, Gaussian, check_series
from .drift import DriftModelParams, detect_drift
from .exceptions import ConfigError, DomainError, LengthError, StateError
from .offline import detect_pncpd
from .online import (
    NoChangeDetected,
    OnlineConfig,
    OnlineDetector,
    Result,
    Scanned,
    Triggered,
    min_window_size,
    threshold_bounds,
)
from .simulation import ExperimentSpec, run_experiment, separation_probability

SEED_ENV = "DP_CPD_SEED"


class UsageError(Exception):
    """Bad input the user can fix; maps to exit status 2."""


def _parse_number(text: str) -> float:
    # float() is locale-independent; reject what it accepts beyond plain decimals
    stripped = text.strip()
    if not stripped or "_" in stripped:
        raise ValueError(text)
    value = float(stripped)
    if not math.isfinite(value):
        raise ValueError(text)
    return value


def read_csv_series(path, window: Optional[slice] = None) -> np.ndarray:
    """Read one observation per row: a lone value column or ``timestamp,value``.

    A first row that does not parse as a number is treated as a header.
    ``window`` slices the data rows (0-based, end-exclusive) before validation.
    """
    values: List[float] = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            cell = row[0] if len(row) == 1 else row[1]
            try:
                values.append(_parse_number(cell))
            except ValueError:
                if lineno == 1:
                    continue
                raise UsageError(f"{path}: row {lineno}: not a finite number: {cell!r}") from None
    if window is not None:
        values = values[window]
    if len(values) < 2:
        raise UsageError(f"{path}: need at least 2 observations, got {len(values)}")
    return check_series(values)


def _parse_window(text: str) -> slice:
    try:
        start, end = text.split(":")
        return slice(int(start) if start else None, int(end) if end else None)
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must look like START:END, got {text!r}") from None


def _parse_epsilon(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"epsilon must be a number or 'inf', got {text!r}") from None
    if math.isnan(value) or value <= 0:
        raise argparse.ArgumentTypeError(f"epsilon must be > 0 or inf, got {text!r}")
    return value


def _parse_gaussian(text: str) -> Gaussian:
    try:
        mu, sigma = (float(p) for p in text.split(","))
        return Gaussian(mu, sigma)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MU,SIGMA, got {text!r}") from None


def _eps_json(eps: float):
    return "inf" if math.isinf(eps) else eps


def resolve_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return secrets.randbits(63)


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def cmd_detect_offline(args) -> int:
    x = read_csv_series(args.input, args.window)
    seed = resolve_seed(args.seed)
    cfg = DetectionConfig(args.epsilon, args.gamma, args.direction, seed)
    if args.drift:
        k_hat = detect_drift(x, cfg, inverse=args.transform).k_hat
    else:
        k_hat = detect_pncpd(x, cfg).k_hat
    doc = {
        "k_hat": k_hat,
        "n": int(x.shape[0]),
        "epsilon": _eps_json(cfg.epsilon),
        "gamma": cfg.gamma,
        "direction": cfg.direction.value,
        "seed": seed,
    }
    if args.format == "csv":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(list(doc))
        w.writerow(list(doc.values()))
    else:
        _emit(doc)
    return 0


def _stdin_values() -> Iterator[float]:
    for lineno, line in enumerate(sys.stdin, start=1):
        if not line.strip():
            continue
        try:
            yield _parse_number(line)
        except ValueError:
            raise UsageError(f"stdin line {lineno}: not a finite number: {line.strip()!r}") from None


def cmd_detect_online(args) -> int:
    seed = resolve_seed(args.seed)
    cfg = OnlineConfig(args.n, args.epsilon, args.gamma, args.threshold, seed)
    detector = OnlineDetector(cfg)
    stream = _stdin_values() if args.input == "-" else iter(read_csv_series(args.input).tolist())
    for x in stream:
        event = detector.push(x)
        if isinstance(event, Scanned) and args.verbose:
            _emit({"event": "scan", "k": event.k})
        elif isinstance(event, Triggered):
            _emit({"event": "trigger", "k": event.k})
        elif isinstance(event, Result):
            break
    outcome = detector.close()
    common = {
        "n": cfg.n,
        "epsilon": _eps_json(cfg.epsilon),
        "gamma": cfg.gamma,
        "threshold": cfg.threshold,
        "seed": seed,
    }
    if isinstance(outcome, NoChangeDetected):
        _emit({"event": "no_change", "reason": outcome.reason, "points_seen": outcome.points_seen, **common})
    else:
        _emit(
            {
                "event": "result",
                "k_hat": outcome.result.k_hat,
                "trigger_k": outcome.trigger_k,
                "window_start": outcome.window_start,
                **common,
            }
        )
    return 0


def cmd_thresholds(args) -> int:
    if args.a is not None:
        a = args.a
    elif args.pre is not None and args.post is not None:
        a = separation_probability(args.pre, args.post)
    else:
        raise UsageError("give --a, or both --pre and --post")
    bounds = threshold_bounds(args.n, args.kstar, a, args.beta, args.epsilon)
    _emit(
        {
            "a": a,
            "n": args.n,
            "k_star": args.kstar,
            "beta": args.beta,
            "epsilon": _eps_json(args.epsilon),
            "t_lower": bounds.t_lower,
            "t_upper": bounds.t_upper,
            "feasible": bounds.feasible,
            "min_window_size": min_window_size(a, args.kstar, args.beta, args.epsilon),
        }
    )
    return 0


_SIM_DEFAULTS = {
    "detector": "pncpd",
    "n": 200,
    "kstar": 100,
    "pre": [0.0, 1.0],
    "post": [5.0, 1.0],
    "epsilon": 1.0,
    "gamma": 0.1,
    "direction": "argmax",
    "trials": 1000,
    "seed": None,
    "window": 500,
    "threshold": 0.8,
    "eta": 1.0,
    "xi0": 0.0,
    "xi1": 5.0,
    "noise_sigma": 1.0,
}


def _simulation_settings(args) -> dict:
    settings = dict(_SIM_DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(loaded) - set(settings)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        settings.update(loaded)
    for key in _SIM_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    if isinstance(settings["epsilon"], str):
        settings["epsilon"] = _parse_epsilon(settings["epsilon"])
    return settings


def build_spec(settings: dict) -> ExperimentSpec:
    seed = resolve_seed(settings["seed"])
    settings["seed"] = seed
    detector = settings["detector"]

    def gauss(v):
        return v if isinstance(v, Gaussian) else Gaussian(*v)

    if detector == "drift":
        model = DriftModelParams(
            n=settings["n"],
            t_star=settings["kstar"],
            eta=settings["eta"],
            xi0=settings["xi0"],
            xi1=settings["xi1"],
            noise=Gaussian(0.0, settings["noise_sigma"]),
        )
    else:
        model = ChangePointModelParams(
            settings["n"], settings["kstar"], gauss(settings["pre"]), gauss(settings["post"])
        )
    if detector == "online":
        cfg = OnlineConfig(
            settings["window"], settings["epsilon"], settings["gamma"], settings["threshold"]
        )
    else:
        cfg = DetectionConfig(settings["epsilon"], settings["gamma"], settings["direction"])
    return ExperimentSpec(model, detector, cfg, settings["trials"], seed)


def cmd_simulate(args) -> int:
    settings = _simulation_settings(args)
    try:
        spec = build_spec(settings)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid experiment: {exc}") from None
    result = run_experiment(spec, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = ["accuracy_curve.csv", "raw_trials.csv"]
    result.curve.to_csv(out / files[0])
    result.write_trials_csv(out / files[1])
    if args.svg:
        title = f"{spec.detector} eps={_eps_json(settings['epsilon'])} trials={spec.trials}"
        result.curve.to_svg(out / "curve.svg", title)
        files.append("curve.svg")
    summary = {
        "detector": spec.detector,
        "trials": spec.trials,
        "seed": spec.base_seed,
        "epsilon": _eps_json(settings["epsilon"]),
        "files": files,
    }
    if spec.detector == "online":
        summary["false_alarm_rate"] = result.false_alarm_rate
        summary["miss_rate"] = result.miss_rate
    _emit(summary)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpcpd", description="Differentially private nonparametric change-point detection."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect-offline", help="estimate one change-point in a CSV series")
    p.add_argument("input", help="CSV file: value column or timestamp,value")
    p.add_argument("--epsilon", type=_parse_epsilon, default=1.0, help="privacy parameter, 'inf' for none")
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--direction", choices=["argmax", "argmin"], default="argmax")
    p.add_argument("--seed", type=int)
    p.add_argument("--window", type=_parse_window, help="0-based START:END row slice; k_hat is relative to it")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--drift", action="store_true", help="detect a slope change via pair differencing")
    p.add_argument("--transform", default="identity", help="inverse transform for --drift")
    p.set_defaults(func=cmd_detect_offline)

    p = sub.add_parser("detect-online", help="stream points through the online detector")
    p.add_argument("input", help="CSV file, or '-' for one number per line on stdin")
    p.add_argument("--n", type=int, default=500, help="window size (even)")
    p.add_argument("--epsilon", type=_parse_epsilon, default=1.0)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--threshold", type=float, default=0.8)
    p.add_argument("--seed", type=int)
    p.add_argument("--verbose", action="store_true", help="also print non-firing scans")
    p.set_defaults(func=cmd_detect_online)

    p = sub.add_parser("thresholds", help="advisory threshold interval for the online detector")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kstar", type=int, required=True, help="estimate of the change time")
    p.add_argument("--a", type=float, help="separation probability Pr[x0 > x1]")
    p.add_argument("--pre", type=_parse_gaussian, help="pre-change Gaussian MU,SIGMA")
    p.add_argument("--post", type=_parse_gaussian, help="post-change Gaussian MU,SIGMA")
    p.add_argument("--beta", type=float, default=0.4)
    p.add_argument("--epsilon", type=_parse_epsilon, default=math.inf)
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("simulate", help="Monte Carlo accuracy curve")
    p.add_argument("--config", help="JSON file with experiment settings; flags override it")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--detector", choices=["nonprivate", "pncpd", "online", "drift"])
    p.add_argument("--n", type=int, help="series length (stream length for online)")
    p.add_argument("--kstar", type=int, help="true change index (t* for drift)")
    p.add_argument("--pre", type=lambda s: [float(v) for v in s.split(",")], help="MU,SIGMA")
    p.add_argument("--post", type=lambda s: [float(v) for v in s.split(",")], help="MU,SIGMA")
    p.add_argument("--epsilon", type=_parse_epsilon)
    p.add_argument("--gamma", type=float)
    p.add_argument("--direction", choices=["argmax", "argmin"])
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--window", type=int, help="online window size")
    p.add_argument("--threshold", type=float, help="online threshold")
    p.add_argument("--eta", type=float)
    p.add_argument("--xi0", type=float)
    p.add_argument("--xi1", type=float)
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--svg", action="store_true", help="also write curve.svg")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, DomainError, LengthError, StateError, ValueError, OSError) as exc:
        print(f"dpcpd {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"dpcpd {args.command}: internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
