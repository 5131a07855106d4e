"""Small statistics helpers shared by the experiment drivers and tests."""

from __future__ import annotations

import math

import numpy as np


def fsum_mean(values) -> float:
    """Order-independent exact mean (compensated summation)."""
    values = list(values)
    return math.fsum(values) / len(values)


def mean_se(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    m = fsum_mean(arr)
    se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else math.inf
    return m, se


def slope_fit(x, y, y_se=None) -> tuple[float, float]:
    """Straight-line slope with standard error.

    With per-point errors: weighted least squares, slope variance from the
    weights.  Without: ordinary least squares, slope variance from residuals.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if y_se is not None:
        w = 1.0 / np.asarray(y_se, dtype=float) ** 2
        xbar = np.sum(w * x) / np.sum(w)
        sxx = np.sum(w * (x - xbar) ** 2)
        slope = np.sum(w * (x - xbar) * y) / sxx
        return float(slope), float(1.0 / math.sqrt(sxx))
    xbar = x.mean()
    sxx = np.sum((x - xbar) ** 2)
    slope = float(np.sum((x - xbar) * (y - y.mean())) / sxx)
    resid = y - y.mean() - slope * (x - xbar)
    dof = max(len(x) - 2, 1)
    return slope, float(math.sqrt(np.sum(resid**2) / dof / sxx))


def gelman_rubin(chains) -> float:
    """Potential scale reduction factor across chains of equal length."""
    chains = [np.asarray(c, dtype=float) for c in chains]
    n = min(len(c) for c in chains)
    chains = [c[:n] for c in chains]
    m = len(chains)
    means = np.array([c.mean() for c in chains])
    variances = np.array([c.var(ddof=1) for c in chains])
    w = variances.mean()
    b = n * means.var(ddof=1)
    var_hat = (n - 1) / n * w + b / n
    return float(math.sqrt(var_hat / w)) if w > 0 else math.inf


def ks_distance(samples, grid_x, cdf_values) -> float:
    """Kolmogorov-Smirnov distance of samples against a tabulated CDF."""
    samples = np.sort(np.asarray(samples, dtype=float))
    cdf_at_samples = np.interp(samples, grid_x, cdf_values)
    n = len(samples)
    emp_hi = np.arange(1, n + 1) / n
    emp_lo = np.arange(0, n) / n
    return float(max(np.abs(emp_hi - cdf_at_samples).max(),
                     np.abs(emp_lo - cdf_at_samples).max()))


def quadrature_cdf(log_density, lo: float, hi: float, n: int = 20001):
    """Normalized CDF table of exp(log_density) on [lo, hi] by trapezoid rule."""
    x = np.linspace(lo, hi, n)
    dens = np.exp(log_density(x) - np.max(log_density(x)))
    cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) * 0.5 * (x[1] - x[0]))])
    cdf /= cdf[-1]
    return x, cdf
