"""Acceptance criteria, each at its stated tolerance and time budget.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines as they happen; they are also repeated in the terminal summary.
"""

import math
import os
import time
from fractions import Fraction

import numpy as np
from scipy.special import ndtr

from dpcpd.cli import main
from dpcpd.core import ChangePointModelParams, DetectionConfig, Direction, Gaussian, search_range
from dpcpd.drift import DriftModelParams
from dpcpd.mechanisms import LaplaceSampler
from dpcpd.offline import detect_nonprivate, detect_pncpd
from dpcpd.online import OnlineConfig, threshold_bounds
from dpcpd.rank_stats import u_numerator_bruteforce, v_numerator_bruteforce, v_numerators_all
from dpcpd.simulation import ExperimentSpec, run_experiment

JOBS = max(1, min(8, os.cpu_count() or 1))
GAUSS_STEP = ChangePointModelParams(200, 100, Gaussian(0, 1), Gaussian(5, 1))


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def random_gamma(rng, n):
    # keep the search range non-empty
    while True:
        g = float(rng.uniform(1e-3, 0.5))
        lo, hi = search_range(g, n)
        if 1 <= lo <= hi <= n - 1:
            return g


def random_series(rng, n):
    if rng.random() < 0.5:
        return rng.integers(0, 4, n).astype(float)
    return rng.normal(size=n)


def test_criterion_01_oracle_equivalence(report):
    rng = np.random.default_rng(101)
    mismatches = 0
    with Timer() as t:
        for _ in range(500):
            n = int(rng.integers(4, 51))
            x = random_series(rng, n)
            g = random_gamma(rng, n)
            for k, num in v_numerators_all(x, g):
                mismatches += num != v_numerator_bruteforce(x, k)
    ok = mismatches == 0 and t.elapsed < 10
    report(1, ok, f"oracle equivalence: {mismatches} mismatches, {t.elapsed:.1f}s (< 10s)")
    assert ok


def test_criterion_02_sensitivity(report):
    rng = np.random.default_rng(202)
    worst_v = worst_u = Fraction(0)
    ok = True
    with Timer() as t:
        for _ in range(200):
            n = int(rng.integers(2, 21)) * 2
            x = random_series(rng, n)
            y = x.copy()
            y[rng.integers(n)] = rng.normal() * 3
            g = random_gamma(rng, n)
            bound_v = 1 / (Fraction(g) * n)
            for (k, a), (_, b) in zip(v_numerators_all(x, g), v_numerators_all(y, g)):
                d = Fraction(abs(a - b), k * (n - k))
                worst_v = max(worst_v, d / bound_v)
                ok &= d <= bound_v
            du = Fraction(4 * abs(u_numerator_bruteforce(x) - u_numerator_bruteforce(y)), n * n)
            worst_u = max(worst_u, du * n / 2)
            ok &= du <= Fraction(2, n)
    ok = ok and t.elapsed < 10
    report(2, ok, f"sensitivity: max dV/bound {float(worst_v):.3f}, max dU/bound {float(worst_u):.3f}, {t.elapsed:.1f}s")
    assert ok


def test_criterion_03_laplace(report):
    b = 1.5
    with Timer() as t:
        z = LaplaceSampler(303).sample_many(b, 10**6)
        mean_ok = abs(z.mean()) <= 0.01 * b
        var_ok = abs(z.var() / (2 * b * b) - 1) <= 0.05
        probs = np.array([0.01, 0.25, 0.5, 0.75, 0.99])
        # Laplace(0, b) quantiles
        q = np.where(probs < 0.5, b * np.log(2 * probs), -b * np.log(2 * (1 - probs)))
        cdf_err = np.abs((z[:, None] <= q[None, :]).mean(axis=0) - probs).max()
    ok = mean_ok and var_ok and cdf_err <= 0.01 and t.elapsed < 5
    report(
        3,
        ok,
        f"laplace: mean/b {z.mean() / b:+.4f}, var ratio {z.var() / (2 * b * b):.4f}, "
        f"max quantile error {cdf_err:.4f}, {t.elapsed:.1f}s",
    )
    assert ok


def test_criterion_04_nonprivate_baseline(report):
    spec = ExperimentSpec(GAUSS_STEP, "nonprivate", DetectionConfig(math.inf, 0.1, "argmin"), trials=1000, base_seed=4)
    with Timer() as t:
        res = run_experiment(spec, jobs=JOBS)
    hit = 1 - res.curve.beta(5)
    ok = hit >= 0.95 and t.elapsed < 30
    report(4, ok, f"non-private: Pr[|k-k*| <= 5] = {hit:.3f} (>= 0.95), {t.elapsed:.1f}s")
    assert ok


def _pncpd_beta(model, eps, alpha, seed):
    spec = ExperimentSpec(model, "pncpd", DetectionConfig(eps, 0.1, "argmin"), trials=1000, base_seed=seed)
    return run_experiment(spec, jobs=JOBS).curve.beta(alpha)


def test_criterion_05_private_offline(report):
    weak = ChangePointModelParams(200, 100, Gaussian(0, 1), Gaussian(1, 1))
    with Timer() as t:
        b20 = _pncpd_beta(GAUSS_STEP, 1.0, 20, 51)
        b50_weak = _pncpd_beta(weak, 0.1, 50, 52)
        b10_hi = _pncpd_beta(GAUSS_STEP, 5.0, 10, 53)
        b10_lo = _pncpd_beta(GAUSS_STEP, 0.1, 10, 54)
    parts = {
        "eps=1 beta(20) <= 0.2": b20 <= 0.2,
        "eps=0.1 mu1=1 beta(50) <= 0.9": b50_weak <= 0.9,
        "beta(10) eps=5 <= eps=0.1 + 0.05": b10_hi <= b10_lo + 0.05,
    }
    ok = all(parts.values()) and t.elapsed < 120
    report(
        5,
        ok,
        f"private offline: beta(20)={b20:.3f}, weak beta(50)={b50_weak:.3f}, "
        f"beta(10) eps5={b10_hi:.3f} vs eps0.1={b10_lo:.3f}; failed parts: "
        f"{[k for k, v in parts.items() if not v] or 'none'}, {t.elapsed:.1f}s",
    )
    assert ok


def test_criterion_06_threshold_bounds(report):
    a = float(ndtr(5 / math.sqrt(2)))
    want = {1.0: (1.28, 0.16), 5.0: (0.80, 0.74), 10.0: (0.74, 0.81), math.inf: (0.69, 0.89)}
    with Timer() as t:
        got = {e: threshold_bounds(500, 5000, a, 0.4, e) for e in want}
    worst = max(max(abs(got[e].t_lower - lo), abs(got[e].t_upper - hi)) for e, (lo, hi) in want.items())
    ok = worst <= 0.1 and t.elapsed < 1
    shown = ", ".join(f"eps={e}: ({b.t_lower:.2f}, {b.t_upper:.2f})" for e, b in got.items())
    report(6, ok, f"threshold bounds: {shown}; max deviation {worst:.3f} (<= 0.1)")
    assert ok


def test_criterion_07_online(report):
    model = ChangePointModelParams(5600, 5000, Gaussian(5, 1), Gaussian(0, 1))
    cfg = OnlineConfig(n=500, epsilon=10.0, gamma=0.1, threshold=0.8)
    with Timer() as t:
        res = run_experiment(ExperimentSpec(model, "online", cfg, trials=200, base_seed=7), jobs=JOBS)
    recs = res.records
    bad = np.mean([r.false_alarm or r.miss or r.error > 50 for r in recs])
    good = [r for r in recs if r.correct_window]
    cond = np.mean([r.error > 25 for r in good]) if good else 1.0
    ok = bad <= 0.2 and cond <= 0.1 and t.elapsed < 300
    report(
        7,
        ok,
        f"online: false alarm {res.false_alarm_rate:.3f}, miss {res.miss_rate:.3f}, "
        f"combined bad {bad:.3f} (<= 0.2), conditional Pr[err > 25] {cond:.3f} (<= 0.1), {t.elapsed:.1f}s",
    )
    assert ok


def test_criterion_08_drift(report):
    spec = ExperimentSpec(
        DriftModelParams(n=200, t_star=100, eta=1, xi0=0, xi1=5),
        "drift",
        DetectionConfig(5.0, 0.1, "argmin"),
        trials=1000,
        base_seed=8,
    )
    with Timer() as t:
        b10 = run_experiment(spec, jobs=JOBS).curve.beta(10)
    ok = b10 <= 0.2 and t.elapsed < 60
    report(8, ok, f"drift: beta(10) = {b10:.3f} (<= 0.2), {t.elapsed:.1f}s")
    assert ok


def test_criterion_09_reduction_identity(report):
    rng = np.random.default_rng(909)
    mismatches = 0
    with Timer() as t:
        for i in range(100):
            n = int(rng.integers(4, 200))
            x = random_series(rng, n)
            g = random_gamma(rng, n)
            d = Direction.ARGMAX if i % 2 else Direction.ARGMIN
            a = detect_pncpd(x, DetectionConfig(math.inf, g, d)).k_hat
            mismatches += a != detect_nonprivate(x, g, d).k_hat
    ok = mismatches == 0 and t.elapsed < 5
    report(9, ok, f"reduction identity: {mismatches} mismatches over 100 inputs, {t.elapsed:.1f}s")
    assert ok


def test_criterion_10_cli_determinism(report, tmp_path, capsys, monkeypatch):
    import io

    series = tmp_path / "x.csv"
    rng = np.random.default_rng(10)
    series.write_text("\n".join(repr(float(v)) for v in np.r_[rng.normal(3, 1, 60), rng.normal(0, 1, 60)]) + "\n")
    commands = {
        "detect-offline": ["detect-offline", str(series), "--epsilon", "1", "--seed", "5"],
        "detect-online": ["detect-online", "-", "--n", "20", "--epsilon", "3", "--seed", "5", "--verbose"],
        "thresholds": ["thresholds", "--n", "500", "--kstar", "5000", "--pre", "5,1", "--post", "0,1", "--epsilon", "10"],
        "simulate": ["simulate", "--out", "OUT", "--trials", "20", "--epsilon", "1", "--seed", "5", "--svg"],
    }
    differing = []
    with Timer() as t:
        for name, argv in commands.items():
            outputs = []
            for rep in range(2):
                out_dir = tmp_path / f"{name}-{rep}"
                args = [str(out_dir) if a == "OUT" else a for a in argv]
                monkeypatch.setattr("sys.stdin", io.StringIO(series.read_text()))
                code = main(args)
                blob = capsys.readouterr().out.encode()
                if out_dir.exists():
                    blob += b"".join(p.read_bytes() for p in sorted(out_dir.iterdir()))
                outputs.append((code, blob))
            if outputs[0] != outputs[1] or outputs[0][0] != 0:
                differing.append(name)
    ok = not differing and t.elapsed < 10
    report(10, ok, f"CLI determinism: {len(commands) - len(differing)}/{len(commands)} subcommands identical, {t.elapsed:.1f}s")
    assert ok
