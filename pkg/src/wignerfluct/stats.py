"""Monte Carlo statistics: KS distance, moment estimates with standard errors, log-log fits."""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np
from scipy import stats as sps

__all__ = [
    "ks_statistic",
    "ks_critical",
    "ks_threshold",
    "Estimate",
    "mean_estimate",
    "variance_estimate",
    "covariance_estimate",
    "correlation",
    "skewness",
    "SlopeFit",
    "loglog_slope",
]

KS_C99 = 1.63
KS_SLACK = 1.5


def ks_statistic(samples, cdf) -> float:
    """Exact sup distance between the empirical CDF of ``samples`` and ``cdf``.

    The supremum is attained at a sample point, approached either from the
    left or from the right, so only ``2M`` comparisons are needed.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    M = x.size
    if M == 0:
        raise ValueError("no samples")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, M + 1)
    return float(max(np.max(i / M - F), np.max(F - (i - 1) / M)))


def ks_critical(M: int) -> float:
    """Asymptotic Kolmogorov critical value at level 0.01."""
    return KS_C99 / sqrt(M)


def ks_threshold(M: int, slack: float = KS_SLACK) -> float:
    return slack * ks_critical(M)


@dataclass(frozen=True)
class Estimate:
    estimate: float
    stderr: float

    def zscore(self, predicted: float) -> float:
        if self.stderr == 0.0:
            return 0.0 if self.estimate == predicted else float(np.sign(self.estimate - predicted) * np.inf)
        return (self.estimate - predicted) / self.stderr


def mean_estimate(x) -> Estimate:
    x = np.asarray(x, dtype=float).ravel()
    return Estimate(float(x.mean()), float(x.std(ddof=1) / sqrt(x.size)) if x.size > 1 else 0.0)


def covariance_estimate(x, y) -> Estimate:
    """Sample covariance; the standard error treats products of deviations as i.i.d."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    M = x.size
    prod = (x - x.mean()) * (y - y.mean())
    est = prod.sum() / (M - 1)
    return Estimate(float(est), float(prod.std(ddof=1) / sqrt(M)))


def variance_estimate(x) -> Estimate:
    return covariance_estimate(x, x)


def correlation(x, y) -> float:
    return float(np.corrcoef(np.asarray(x, dtype=float).ravel(), np.asarray(y, dtype=float).ravel())[0, 1])


def skewness(x) -> float:
    return float(sps.skew(np.asarray(x, dtype=float).ravel()))


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    stderr: float
    ci_low: float
    ci_high: float

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "stderr": self.stderr,
                "ci": [self.ci_low, self.ci_high]}


def loglog_slope(N, y, y_err=None, level: float = 0.95) -> SlopeFit:
    """Least-squares slope of ``log y`` against ``log N``.

    With ``y_err`` the fit is weighted by the delta-method variance
    ``(y_err / y)^2`` of ``log y``; the interval is Student-t with
    ``len(N) - 2`` degrees of freedom.
    """
    lx = np.log(np.asarray(N, dtype=float))
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("log-log fit needs positive values")
    ly = np.log(y)
    w = np.ones_like(ly) if y_err is None else (y / np.maximum(np.asarray(y_err, dtype=float), 1e-300)) ** 2
    W = w.sum()
    xm, ym = (w * lx).sum() / W, (w * ly).sum() / W
    sxx = (w * (lx - xm) ** 2).sum()
    slope = (w * (lx - xm) * (ly - ym)).sum() / sxx
    intercept = ym - slope * xm
    dof = lx.size - 2
    if dof > 0:
        resid = ly - (intercept + slope * lx)
        s2 = (w * resid ** 2).sum() / dof
        se = sqrt(s2 / sxx)
        if y_err is not None:
            # never report less uncertainty than the propagated sampling error
            se = max(se, sqrt(1.0 / sxx))
        tq = sps.t.ppf(0.5 + level / 2, dof)
    else:
        se, tq = (sqrt(1.0 / sxx) if y_err is not None else 0.0), 1.96
    return SlopeFit(float(slope), float(intercept), float(se), float(slope - tq * se), float(slope + tq * se))
