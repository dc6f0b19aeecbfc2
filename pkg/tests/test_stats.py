import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special, stats as sps

from wignerfluct.stats import (
    correlation,
    covariance_estimate,
    ks_critical,
    ks_statistic,
    ks_threshold,
    loglog_slope,
    mean_estimate,
    variance_estimate,
)


def test_ks_optimal_placement():
    M = 200
    q = special.ndtri((np.arange(1, M + 1) - 0.5) / M)
    assert ks_statistic(q, special.ndtr) == pytest.approx(1 / (2 * M), abs=1e-12)


def test_ks_single_median():
    assert ks_statistic([0.0], special.ndtr) == pytest.approx(0.5)


def test_ks_normal_draws():
    x = np.random.default_rng(1).standard_normal(100_000)
    assert ks_statistic(x, special.ndtr) <= ks_critical(x.size)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=50))
def test_ks_matches_scipy(xs):
    ours = ks_statistic(xs, special.ndtr)
    ref = sps.kstest(xs, "norm").statistic
    assert ours == pytest.approx(ref, abs=1e-12)


def test_thresholds():
    assert ks_critical(10_000) == pytest.approx(0.0163)
    assert ks_threshold(5000) == pytest.approx(1.5 * 1.63 / np.sqrt(5000))


def test_estimates():
    rng = np.random.default_rng(2)
    x = rng.normal(1.0, 2.0, 100_000)
    m = mean_estimate(x)
    assert abs(m.estimate - 1.0) <= 5 * m.stderr
    v = variance_estimate(x)
    assert abs(v.estimate - 4.0) <= 5 * v.stderr
    assert v.stderr == pytest.approx(4.0 * np.sqrt(2 / x.size), rel=0.05)
    assert v.zscore(4.0) == pytest.approx((v.estimate - 4.0) / v.stderr)
    y = 0.5 * x + rng.normal(size=x.size)
    c = covariance_estimate(x, y)
    assert abs(c.estimate - 2.0) <= 5 * c.stderr
    assert correlation(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1])


def test_loglog_exact_power():
    N = np.array([250, 500, 1000, 2000])
    fit = loglog_slope(N, 3.0 * N ** -1.0)
    assert fit.slope == pytest.approx(-1.0, abs=1e-12)
    assert fit.ci_low <= -1.0 <= fit.ci_high


def test_loglog_weighted_interval():
    N = np.array([250, 500, 1000, 2000])
    y = 2.0 / N * np.array([1.05, 0.97, 1.02, 0.99])
    fit = loglog_slope(N, y, 0.05 * y)
    assert abs(fit.slope + 1.0) < 0.1
    assert fit.ci_high - fit.ci_low > 0
    with pytest.raises(ValueError):
        loglog_slope(N, -y)
