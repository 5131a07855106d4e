"""Gaussian measures on the torus and exact per-mode linear stochastic flows.

The free-field family mu_s has independent mode coefficients g_n / <n>^s with
g_n standard complex Gaussian (real on the self-conjugate zero mode).  The
linear damped-wave and heat flows driven by space-time white noise are
integrated exactly in law: per mode the one-step update is
new = A(h) old + xi with xi drawn from the exact transition covariance Q(h),
so every stationarity statement can be tested free of time-discretization
bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .fourier import TWO_PI, FourierField, GridSpec, _reverse_index


@dataclass(frozen=True)
class RngStream:
    """Reproducible, splittable random stream.

    Streams with distinct (seed, replica, branch) are statistically
    independent; an identical triple reproduces the identical sample path
    bit for bit.  Backed by the counter-based Philox generator keyed through
    a seed sequence, so replicas never share state.
    """

    seed: int
    replica: int = 0
    branch: tuple = ()

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.replica, *self.branch))
        return np.random.Generator(np.random.Philox(seq))

    def replica_stream(self, index: int) -> "RngStream":
        return RngStream(self.seed, index, self.branch)

    def split(self, *tags: int) -> "RngStream":
        return RngStream(self.seed, self.replica, self.branch + tags)


def white_fields(grid: GridSpec, gen: np.random.Generator, count: int) -> np.ndarray:
    """Stack of independent Hermitian complex Gaussian mode arrays, (count, M, M).

    E|g(n)|^2 = 1 for every representable mode; the zero mode is real with
    variance 1 (the self-conjugate bookkeeping that makes grid-space
    variances come out right).  Nyquist lines are zeroed.
    """
    m = grid.m_points
    z = gen.standard_normal((2 * count, m, m))
    a = z[0::2] + 1j * z[1::2]
    rev = _reverse_index(m)
    g = 0.5 * (a + np.conj(a[:, rev][:, :, rev]))
    g[:, m // 2, :] = 0.0
    g[:, :, m // 2] = 0.0
    return g


def white_coefficients(grid: GridSpec, gen: np.random.Generator) -> np.ndarray:
    """One Hermitian complex Gaussian mode array with unit variance per mode."""
    return white_fields(grid, gen, 1)[0]


def sample_mu(grid: GridSpec, s: float, rng: RngStream | np.random.Generator) -> FourierField:
    """Draw a field from the Gaussian measure with mode variances <n>^{-2s}."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    coef = white_coefficients(grid, gen) * grid.bracket_sq ** (-0.5 * s)
    return FourierField(grid, coef)


@dataclass
class PhaseState:
    """Position/velocity pair of the second-order dynamics."""

    u: FourierField
    v: FourierField
    t: float = 0.0

    def copy(self) -> "PhaseState":
        return PhaseState(self.u.copy(), self.v.copy(), self.t)


def sample_phase_pair(grid: GridSpec, rng: RngStream | np.random.Generator) -> PhaseState:
    """Independent (u, v) with u ~ mu_1 and v ~ mu_0 (the Gaussian phase law)."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    u = sample_mu(grid, 1.0, gen)
    v = sample_mu(grid, 0.0, gen)
    return PhaseState(u, v, 0.0)


@dataclass
class LinearStepTables:
    """Exact one-step data of the linear flow at step h, per mode.

    wave model (damping 1, stiffness <n>^2, forcing intensity 2):
        A(h) = exp(h [[0, 1], [-<n>^2, -1]]) entries a11..a22;
        w1 = (1 - a11)/<n>^2 is the position-row Duhamel weight of a
        left-frozen drift (the velocity-row weight is a12 itself);
        (l11, l21, l22) is the Cholesky factor of the exact noise covariance
        Q(h) = Vinf - A Vinf A^T with Vinf = diag(<n>^{-2}, 1).

    heat model (drift -(1/2)<n>^2, forcing intensity 1):
        a = exp(-<n>^2 h / 2), w = 2 (1 - a)/<n>^2, l = sqrt(Q) with
        Q = <n>^{-2} (1 - a^2).
    """

    grid: GridSpec
    model: str
    h: float
    a11: np.ndarray | None = None
    a12: np.ndarray | None = None
    a21: np.ndarray | None = None
    a22: np.ndarray | None = None
    w1: np.ndarray | None = None
    l11: np.ndarray | None = None
    l21: np.ndarray | None = None
    l22: np.ndarray | None = None
    a: np.ndarray | None = None
    w: np.ndarray | None = None
    l: np.ndarray | None = None


def build_linear_tables(grid: GridSpec, h: float, model: str = "wave") -> LinearStepTables:
    """Precompute the exact per-mode propagator and noise factor for step h."""
    if not h > 0:
        raise ValueError(f"step size must be > 0, got {h}")
    om_sq = grid.bracket_sq
    if model == "wave":
        om_t = np.sqrt(om_sq - 0.25)  # = sqrt(3/4 + |n|^2)
        decay = math.exp(-0.5 * h)
        c = np.cos(om_t * h)
        s = np.sin(om_t * h)
        a12 = decay * s / om_t
        a11 = decay * c + 0.5 * a12
        a21 = -om_sq * a12
        a22 = decay * c - 0.5 * a12
        v1 = 1.0 / om_sq
        # exact transition covariance from stationarity of diag(v1, 1)
        q11 = v1 - (a11**2 * v1 + a12**2)
        q12 = -(a11 * a21 * v1 + a12 * a22)
        q22 = 1.0 - (a21**2 * v1 + a22**2)
        l11 = np.sqrt(np.maximum(q11, 0.0))
        l21 = np.divide(q12, l11, out=np.zeros_like(q12), where=l11 > 0)
        l22 = np.sqrt(np.maximum(q22 - l21**2, 0.0))
        w1 = (1.0 - a11) / om_sq
        return LinearStepTables(
            grid, model, h, a11=a11, a12=a12, a21=a21, a22=a22,
            w1=w1, l11=l11, l21=l21, l22=l22,
        )
    if model == "heat":
        a = np.exp(-0.5 * om_sq * h)
        w = 2.0 * (1.0 - a) / om_sq
        q = (1.0 - a**2) / om_sq
        return LinearStepTables(grid, model, h, a=a, w=w, l=np.sqrt(q))
    raise ValueError(f"model must be 'wave' or 'heat', got {model!r}")


def draw_wave_noise(tables: LinearStepTables, gen: np.random.Generator):
    """One step's stochastic-convolution increment (nu, nv) for the wave flow."""
    z = white_fields(tables.grid, gen, 2)
    nu = tables.l11 * z[0]
    nv = tables.l21 * z[0] + tables.l22 * z[1]
    return nu, nv


def draw_heat_noise(tables: LinearStepTables, gen: np.random.Generator) -> np.ndarray:
    return tables.l * white_coefficients(tables.grid, gen)


_ZERO_DRIFT: dict[int, np.ndarray] = {}


def _zero_drift(m: int) -> np.ndarray:
    if m not in _ZERO_DRIFT:
        _ZERO_DRIFT[m] = np.zeros((m, m), dtype=np.complex128)
    return _ZERO_DRIFT[m]


def wave_step_with_noise(state: PhaseState, tables: LinearStepTables,
                         drift: np.ndarray, nu: np.ndarray, nv: np.ndarray) -> PhaseState:
    """Advance the pair one step given explicit drift and noise arrays."""
    m = tables.grid.m_points
    out_u = np.empty((m, m), dtype=np.complex128)
    out_v = np.empty((m, m), dtype=np.complex128)
    kernels.wave_step(
        state.u.coef, state.v.coef,
        tables.a11, tables.a12, tables.a21, tables.a22, tables.w1,
        drift, nu, nv, out_u, out_v,
    )
    return PhaseState(
        FourierField(tables.grid, out_u),
        FourierField(tables.grid, out_v),
        state.t + tables.h,
    )


def evolve_linear(state: PhaseState, tables: LinearStepTables,
                  rng: RngStream | np.random.Generator) -> PhaseState:
    """Exact-in-law one-step update of the linear damped-wave flow."""
    if tables.model != "wave":
        raise ValueError("evolve_linear needs wave-model tables")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    nu, nv = draw_wave_noise(tables, gen)
    return wave_step_with_noise(state, tables, _zero_drift(tables.grid.m_points), nu, nv)


def stationary_correlation(field_values: np.ndarray) -> np.ndarray:
    """Circular spatial autocorrelation (1/M^2) sum_x f(x+r) f(x) for all offsets r."""
    m = field_values.shape[0]
    fhat = np.fft.fft2(field_values)
    return np.fft.ifft2(fhat * np.conj(fhat)).real / (m * m)


def estimate_covariance(grid: GridSpec, separations, samples: int,
                        rng: RngStream, settle_steps: int = 2, settle_h: float = 0.7):
    """Monte Carlo stationary covariance of the truncated wave field.

    Draws the Gaussian phase pair, lets the exact linear flow run a few steps
    (exercising the integrator; the law is unchanged), projects, and averages
    spatially.  Separations are snapped to grid offsets.

    Returns rows (separation_distance, estimate, standard_error).
    """
    if samples < 100:
        raise ValueError("need at least 100 samples")
    m = grid.m_points
    step = TWO_PI / m
    offsets = []
    for p in separations:
        i = int(round(p[0] / step)) % m
        j = int(round(p[1] / step)) % m
        offsets.append((i, j))
    tables = build_linear_tables(grid, settle_h, "wave")
    acc = np.zeros((samples, len(offsets)))
    for r in range(samples):
        gen = rng.replica_stream(r).generator()
        state = sample_phase_pair(grid, gen)
        for _ in range(settle_steps):
            state = evolve_linear(state, tables, gen)
        corr = stationary_correlation(state.u.project().point_values())
        acc[r] = [corr[i, j] for (i, j) in offsets]
    rows = []
    for k, (i, j) in enumerate(offsets):
        dist = math.hypot(min(i, m - i), min(j, m - j)) * step
        est = float(acc[:, k].mean())
        se = float(acc[:, k].std(ddof=1) / math.sqrt(samples))
        rows.append((dist, est, se))
    return rows
