"""Renormalization constants and the Wick-ordered complex exponential field.

The frequency-truncated free field has pointwise variance sigma(N) growing
like log(N)/2pi; multiplying exp(i beta Psi_N) by the compensator
gamma(N) = exp(beta^2 sigma(N)/2) produces a field with exact unit mean whose
two-point function is the exponentiated truncated Green function.  These
identities are what the estimators in this module measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fourier import (
    TWO_PI,
    CutoffProfile,
    FourierField,
    GridSpec,
    cutoff_weights,
    hermitian_point_values,
    smooth_sup_norm_of_coef,
)
from .sampling import RngStream, sample_mu


def truncated_variance(cutoff: int, profile: CutoffProfile | None = None) -> float:
    """Pointwise variance of the projected free field: (1/4pi^2) sum chi^2 <n>^{-2}.

    A full lattice sum; the profile truncates it at |n| < cutoff intrinsically.
    """
    _, w = cutoff_weights(cutoff, profile)
    return float(math.fsum(w))


def wick_factor(cutoff: int, beta_sq: float, profile: CutoffProfile | None = None) -> float:
    """Mean-one compensator exp(beta_sq * sigma / 2) for the phase exponential."""
    if beta_sq < 0:
        raise ValueError("beta_sq must be >= 0")
    return math.exp(0.5 * beta_sq * truncated_variance(cutoff, profile))


@dataclass(frozen=True)
class RenormConstants:
    """Cutoff, coupling exponent, and the derived renormalization pair."""

    cutoff: int
    beta_sq: float
    sigma: float
    gamma: float

    @classmethod
    def compute(cls, cutoff: int, beta_sq: float,
                profile: CutoffProfile | None = None) -> "RenormConstants":
        sigma = truncated_variance(cutoff, profile)
        return cls(cutoff, beta_sq, sigma, math.exp(0.5 * beta_sq * sigma))

    @classmethod
    def for_grid(cls, grid: GridSpec) -> "RenormConstants":
        return cls.compute(grid.cutoff, grid.beta_sq, grid.profile)


@dataclass
class ChaosField:
    """Renormalized phase field gamma * exp(i beta Psi_N) on the grid.

    Every point has modulus exactly gamma; all randomness is in the phase.
    """

    grid: GridSpec
    values: np.ndarray
    constants: RenormConstants
    t: float = 0.0


def wick_exponential(psi: FourierField, constants: RenormConstants,
                     band_tol: float = 1e-10) -> ChaosField:
    """Build the renormalized exponential from an already-projected field.

    Rejects inputs carrying energy outside the projector support |n| < cutoff.
    """
    grid = psi.grid
    outside = grid.projector_multiplier(constants.cutoff) == 0.0
    leak = float(np.abs(psi.coef[outside]).max()) if outside.any() else 0.0
    scale = max(float(np.abs(psi.coef).max()), 1.0)
    if leak > band_tol * scale:
        raise ValueError(
            f"field is not band-limited to |n| < {constants.cutoff} "
            f"(max coefficient outside support: {leak:.3e})"
        )
    beta = math.sqrt(constants.beta_sq)
    values = constants.gamma * np.exp(1j * beta * hermitian_point_values(psi.coef))
    return ChaosField(grid, values, constants)


def chaos_coefficients(field: ChaosField) -> np.ndarray:
    """Mode coefficients of the complex grid field (same basis as FourierField)."""
    m = field.grid.m_points
    return np.fft.fft2(field.values) * (TWO_PI / m**2)


def chaos_smooth_sup_norm(field: ChaosField, alpha: float) -> float:
    """Grid sup of the Bessel-smoothed complex field (W^{-alpha,inf} proxy)."""
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    return smooth_sup_norm_of_coef(field.grid, chaos_coefficients(field), alpha)


def sample_stationary_chaos(grid: GridSpec, constants: RenormConstants,
                            gen: np.random.Generator) -> ChaosField:
    """Chaos field over one stationary draw of the truncated free field."""
    psi = sample_mu(grid, 1.0, gen).project(constants.cutoff)
    return wick_exponential(psi, constants)


def mean_one_estimate(grid: GridSpec, constants: RenormConstants,
                      samples: int, rng: RngStream):
    """Monte Carlo E[Theta] via per-sample spatial means.

    Returns (complex mean, componentwise standard errors (se_re, se_im)).
    The exact value is 1: the compensator cancels the Gaussian characteristic
    function of the phase.
    """
    means = np.empty(samples, dtype=np.complex128)
    for r in range(samples):
        gen = rng.replica_stream(r).generator()
        theta = sample_stationary_chaos(grid, constants, gen)
        means[r] = theta.values.mean()
    se_re = float(means.real.std(ddof=1) / math.sqrt(samples))
    se_im = float(means.imag.std(ddof=1) / math.sqrt(samples))
    return complex(means.mean()), (se_re, se_im)


def mean_one_sweep(cutoff: int, beta_sq_list, samples: int, rng: RngStream,
                   grid_ratio: int = 4, profile: CutoffProfile | None = None):
    """Mean-one estimates for several couplings at one cutoff, sharing field draws.

    Returns {beta_sq: (complex mean, (se_re, se_im))}.
    """
    profile = profile or CutoffProfile()
    grid = GridSpec(grid_ratio * cutoff, cutoff, beta_sq_list[0], 1.0, profile)
    consts = {b: RenormConstants.compute(cutoff, b, profile) for b in beta_sq_list}
    means = {b: np.empty(samples, dtype=np.complex128) for b in beta_sq_list}
    for r in range(samples):
        gen = rng.replica_stream(r).generator()
        psi_vals = hermitian_point_values(sample_mu(grid, 1.0, gen).coef * grid.chi)
        for b in beta_sq_list:
            beta = math.sqrt(b)
            means[b][r] = (consts[b].gamma * np.exp(1j * beta * psi_vals)).mean()
    out = {}
    for b in beta_sq_list:
        se = (float(means[b].real.std(ddof=1) / math.sqrt(samples)),
              float(means[b].imag.std(ddof=1) / math.sqrt(samples)))
        out[b] = (complex(means[b].mean()), se)
    return out


def two_point_estimate(grid: GridSpec, constants: RenormConstants,
                       separations, samples: int, rng: RngStream):
    """Monte Carlo E[Theta(x+r) conj(Theta(x))] at grid-snapped separations.

    Returns rows (distance, complex estimate, (se_re, se_im)).  The exact
    value is exp(beta_sq * truncated_green(r, cutoff)).
    """
    m = grid.m_points
    step = TWO_PI / m
    offsets = [(int(round(p[0] / step)) % m, int(round(p[1] / step)) % m)
               for p in separations]
    acc = np.empty((samples, len(offsets)), dtype=np.complex128)
    for r in range(samples):
        gen = rng.replica_stream(r).generator()
        theta = sample_stationary_chaos(grid, constants, gen)
        fhat = np.fft.fft2(theta.values)
        corr = np.fft.ifft2(np.conj(fhat) * fhat) / (m * m)
        # corr[r] = (1/M^2) sum_x Theta(x + r) conj(Theta(x))
        acc[r] = [corr[i, j] for (i, j) in offsets]
    rows = []
    for k, (i, j) in enumerate(offsets):
        dist = math.hypot(min(i, m - i), min(j, m - j)) * step
        est = complex(acc[:, k].mean())
        se = (float(acc[:, k].real.std(ddof=1) / math.sqrt(samples)),
              float(acc[:, k].imag.std(ddof=1) / math.sqrt(samples)))
        rows.append((dist, est, se))
    return rows


def regularity_scan(beta_sq: float, alphas, cutoffs, samples: int, rng: RngStream,
                    grid_ratio: int = 4, profile: CutoffProfile | None = None,
                    coupling: float = 1.0):
    """Mean smoothed sup norms of the chaos field across (alpha, cutoff).

    Also reports the increment norms ||Theta_{2N} - Theta_N|| on shared
    randomness, the direct witness of the convergence threshold
    alpha > beta_sq / 4pi.

    Returns (rows, increment_rows) where rows are
    (alpha, cutoff, mean_norm, se) and increment_rows are
    (alpha, cutoff_low, mean_increment_norm, se).
    """
    profile = profile or CutoffProfile()
    cutoffs = sorted(cutoffs)
    # single master grid: all cutoffs representable, shared noise across N
    master = GridSpec(grid_ratio * max(cutoffs), max(cutoffs), beta_sq, coupling, profile)
    consts = {n: RenormConstants.compute(n, beta_sq, profile) for n in cutoffs}
    norms = {(a, n): np.empty(samples) for a in alphas for n in cutoffs}
    incs = {(a, n): np.empty(samples) for a in alphas for n in cutoffs[:-1]}
    for r in range(samples):
        gen = rng.replica_stream(r).generator()
        base = sample_mu(master, 1.0, gen)
        theta_by_n = {}
        for n in cutoffs:
            theta = wick_exponential(base.project(n), consts[n])
            theta_by_n[n] = chaos_coefficients(theta)
            for a in alphas:
                norms[(a, n)][r] = smooth_sup_norm_of_coef(master, theta_by_n[n], a)
        for lo, hi in zip(cutoffs[:-1], cutoffs[1:]):
            diff = theta_by_n[hi] - theta_by_n[lo]
            for a in alphas:
                incs[(a, lo)][r] = smooth_sup_norm_of_coef(master, diff, a)
    rows = [(a, n, float(norms[(a, n)].mean()),
             float(norms[(a, n)].std(ddof=1) / math.sqrt(samples)))
            for a in alphas for n in cutoffs]
    inc_rows = [(a, n, float(incs[(a, n)].mean()),
                 float(incs[(a, n)].std(ddof=1) / math.sqrt(samples)))
                for a in alphas for n in cutoffs[:-1]]
    return rows, inc_rows
