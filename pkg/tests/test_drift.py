import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpcpd.core import DetectionConfig, Gaussian
from dpcpd.drift import (
    DriftModelParams,
    DriftPNCPD,
    PairDifference,
    detect_drift,
    drift_mean,
    generate_drift,
    odd_power_inverse,
    pair_difference,
    stream_pair_differences,
)
from dpcpd.exceptions import LengthError

NOISELESS = Gaussian(0.0, 0.0)


def test_pair_difference_examples():
    assert pair_difference([1, 3, 2, 6]).tolist() == [2.0, 4.0]
    assert pair_difference([7.5] * 10).tolist() == [0.0] * 5
    with pytest.raises(LengthError):
        pair_difference([1, 2, 3])


def test_zero_noise_drift_path():
    p = DriftModelParams(n=4, t_star=2, eta=1, xi0=0, xi1=5, noise=NOISELESS)
    assert generate_drift(p, seed=0).tolist() == [1.0, 1.0, 6.0, 11.0]


@pytest.mark.parametrize("t_star, expected", [(101, 99), (100, 99), (51, 49)])
def test_nearly_noiseless_increasing_drift_recovered(t_star, expected):
    # a hair of noise breaks the ties that make a flat-segment V identically zero
    p = DriftModelParams(n=200, t_star=t_star, noise=Gaussian(0.0, 1e-3))
    x = generate_drift(p, seed=0)
    cfg = DetectionConfig(epsilon=math.inf, gamma=0.1, direction="argmin")
    t_hat = detect_drift(x, cfg).k_hat
    assert t_hat == expected
    assert abs(t_hat - t_star) <= 2


def test_exactly_noiseless_increase_is_degenerate():
    # strict ties: no left value exceeds any right value, so every V(k) is 0
    x = generate_drift(DriftModelParams(n=200, t_star=101, noise=NOISELESS))
    cfg = DetectionConfig(epsilon=math.inf, gamma=0.1, direction="argmin")
    assert detect_drift(x, cfg).k_hat == 2 * 10 - 1


@pytest.mark.parametrize("t_star", [101, 100])
def test_noiseless_decreasing_drift_recovered(t_star):
    p = DriftModelParams(n=200, t_star=t_star, xi0=5, xi1=0, noise=NOISELESS)
    cfg = DetectionConfig(epsilon=math.inf, gamma=0.1, direction="argmax")
    assert detect_drift(generate_drift(p), cfg).k_hat == 99


def test_straddling_pair_for_odd_change():
    y = pair_difference(generate_drift(DriftModelParams(n=200, t_star=101, noise=NOISELESS)))
    assert np.all(y[:50] == 0) and np.all(y[50:] == 5)


def test_decreasing_slope_uses_argmax():
    p = DriftModelParams(n=200, t_star=121, xi0=3, xi1=-2, noise=NOISELESS)
    cfg = DetectionConfig(epsilon=math.inf, gamma=0.1, direction="argmax")
    assert detect_drift(generate_drift(p), cfg).k_hat == 119


def test_segment_means_of_differences():
    p = DriftModelParams(n=20_000, t_star=10_001, xi0=0.5, xi1=5.0)
    y = pair_difference(generate_drift(p, seed=4))
    # difference noise has variance 2
    se = math.sqrt(2 / 5000)
    assert abs(y[:5000].mean() - 0.5) < 4 * se
    assert abs(y[5000:].mean() - 5.0) < 4 * se


def test_drift_mean_is_continuous_at_change():
    p = DriftModelParams(n=10, t_star=4, eta=2.0, xi0=1.0, xi1=3.0)
    m = drift_mean(p)
    assert m[3] == 2.0
    assert np.allclose(np.diff(m), [1, 1, 1, 3, 3, 3, 3, 3, 3])


@pytest.mark.parametrize(
    "inverse, forward",
    [("exp", np.exp), ("log", np.log), ("power3", lambda v: v**3), ("identity", lambda v: v)],
)
def test_inverse_transforms_undo_forward(inverse, forward):
    base = np.array([0.5, 1.5, 2.0, 4.0, 1.0, 1.25])
    x = forward(base)
    assert np.allclose(pair_difference(x, inverse), base[1::2] - base[0::2])


def test_transform_errors():
    with pytest.raises(ValueError):
        pair_difference([1.0, 2.0], "power2")
    with pytest.raises(ValueError):
        pair_difference([1.0, 2.0], "sqrt")
    with pytest.raises(ValueError):
        pair_difference([-1.0, 2.0], "exp")


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40).map(lambda v: v[: len(v) - len(v) % 2] or [0.0, 0.0]))
@settings(max_examples=60)
def test_stream_and_batch_differencing_agree(values):
    batch = pair_difference(values)
    streamed = list(stream_pair_differences(iter(values)))
    assert np.array_equal(batch, np.array(streamed))


def test_stream_drops_trailing_odd_point():
    assert list(stream_pair_differences([1.0, 4.0, 9.0])) == [3.0]


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=10))
def test_odd_power_inverse_roundtrip(values):
    v = np.array(values)
    assert np.allclose(odd_power_inverse(5)(v**5), v, atol=1e-9)


def test_estimator_and_transformer():
    x = generate_drift(DriftModelParams(n=200, t_star=101, noise=Gaussian(0.0, 1e-3)), seed=0)
    est = DriftPNCPD(epsilon=math.inf, gamma=0.1).fit(x)
    assert est.changepoint_ == 99
    assert PairDifference().fit_transform([1, 3, 2, 6]).tolist() == [2.0, 4.0]
    assert PairDifference(inverse="exp").fit_transform(np.exp([1, 3, 2, 6])) == pytest.approx([2.0, 4.0])


def test_drift_params_validation():
    with pytest.raises(ValueError):
        DriftModelParams(n=5)
    with pytest.raises(ValueError):
        DriftModelParams(n=10, t_star=11)
