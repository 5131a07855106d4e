"""Tilted Gaussian measure on the torus: density, sampler, and partition function.

The target is the Gaussian free field reweighted by exp(R(u)) with
R(u) = coupling * (gamma/beta) * integral cos(beta P_N u) dx, the
renormalized cosine integral.  Sampling uses a preconditioned Crank-Nicolson
chain (reference measure = the free field itself, so acceptance depends only
on R).  The log partition function is estimated two independent ways: direct
importance sampling under the free field, and a variational bound over
deterministic drift controls.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.special import logsumexp

from .chaos import RenormConstants
from .fourier import FourierField, GridSpec, hermitian_point_values
from .sampling import RngStream, sample_mu


def log_weight(u: FourierField, constants: RenormConstants) -> float:
    """Renormalized cosine integral R(u): log-density of the tilt against the free field.

    Grid trapezoidal quadrature (exact for band-limited integrands up to
    aliasing): coupling * (gamma/beta) * cell_area * sum cos(beta * (P_N u)(x)).
    Bounded by coupling * gamma * (2 pi)^2 / beta in absolute value.
    """
    grid = u.grid
    beta = math.sqrt(constants.beta_sq)
    vals = hermitian_point_values(u.coef * grid.projector_multiplier(constants.cutoff))
    quad = float(np.sum(np.cos(beta * vals))) * grid.cell_area
    return grid.coupling * constants.gamma / beta * quad


@dataclass
class ChainState:
    """Current sampler position with cached density value and acceptance counters."""

    field: FourierField
    log_w: float
    scale: float
    accepted: int = 0
    proposed: int = 0

    @classmethod
    def initialize(cls, grid: GridSpec, constants: RenormConstants,
                   rng, scale: float = 0.2) -> "ChainState":
        if not 0.0 < scale < 1.0:
            raise ValueError(f"proposal scale must lie in (0, 1), got {scale}")
        u = sample_mu(grid, 1.0, rng)
        return cls(u, log_weight(u, constants), scale)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else math.nan


def pcn_step(chain: ChainState, constants: RenormConstants,
             gen: np.random.Generator) -> ChainState:
    """One preconditioned Crank-Nicolson update.

    Proposal sqrt(1 - s^2) u + s xi with a fresh free-field draw xi preserves
    the Gaussian reference exactly, so accepting with probability
    min(1, exp(R(u') - R(u))) makes the chain reversible for the tilted
    measure at every fixed cutoff.
    """
    grid = chain.field.grid
    s = chain.scale
    xi = sample_mu(grid, 1.0, gen)
    prop = FourierField(grid, math.sqrt(1.0 - s * s) * chain.field.coef + s * xi.coef)
    log_w_prop = log_weight(prop, constants)
    if math.log(gen.uniform()) < log_w_prop - chain.log_w:
        return ChainState(prop, log_w_prop, s, chain.accepted + 1, chain.proposed + 1)
    return ChainState(chain.field, chain.log_w, s, chain.accepted, chain.proposed + 1)


def sample_gibbs(grid: GridSpec, n_samples: int, burn_in: int, thin: int,
                 rng: RngStream, scale: float = 0.2, adapt: bool = True,
                 target_acceptance: float = 0.3):
    """Draw approximately tilted-measure positions by pCN with burn-in adaptation.

    The proposal scale is adapted toward the target acceptance during burn-in
    (window-wise multiplicative updates), then frozen.  Returns
    (samples, info) where info records the frozen scale and post-burn-in
    acceptance rate; a rate outside [0.1, 0.9] sets info["warning"] and emits
    a warning.
    """
    if burn_in < 1 or thin < 1:
        raise ValueError("burn_in and thin must be >= 1")
    constants = RenormConstants.for_grid(grid)
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    chain = ChainState.initialize(grid, constants, gen, scale)
    window, window_acc = 0, 0
    for k in range(burn_in):
        prev = chain.accepted
        chain = pcn_step(chain, constants, gen)
        window += 1
        window_acc += chain.accepted - prev
        if adapt and window == 50:
            rate = window_acc / window
            s = chain.scale * math.exp(0.7 * (rate - target_acceptance))
            chain.scale = min(max(s, 1e-3), 0.999)
            window, window_acc = 0, 0
    chain.accepted = 0
    chain.proposed = 0
    samples = []
    for k in range(n_samples * thin):
        chain = pcn_step(chain, constants, gen)
        if (k + 1) % thin == 0:
            samples.append(chain.field.copy())
    info = {
        "scale": chain.scale,
        "acceptance": chain.acceptance_rate,
        "warning": not 0.1 <= chain.acceptance_rate <= 0.9,
    }
    if info["warning"]:
        warnings.warn(
            f"pCN acceptance rate {chain.acceptance_rate:.3f} outside [0.1, 0.9]"
        )
    return samples, info


@dataclass
class LogZEstimate:
    log_z: float
    se: float
    moments: dict
    n_samples: int


def log_weight_samples(grid: GridSpec, n_samples: int, rng: RngStream) -> np.ndarray:
    """R(u) over independent free-field draws (the importance-sampling workhorse)."""
    constants = RenormConstants.for_grid(grid)
    out = np.empty(n_samples)
    for r in range(n_samples):
        gen = rng.replica_stream(r).generator()
        out[r] = log_weight(sample_mu(grid, 1.0, gen), constants)
    return out


def log_weight_samples_shared(cutoffs, beta_sq: float, samples: int, rng: RngStream,
                              grid_ratio: int = 4, profile=None,
                              coupling: float = 1.0) -> dict:
    """R(u) across several cutoffs on shared free-field draws.

    One master grid holds all cutoffs; each underlying sample is projected at
    every requested cutoff, so differences of the resulting log-moment
    estimates across cutoffs carry far less Monte Carlo noise than
    independent runs.  Returns {cutoff: array of R values}.
    """
    from .fourier import CutoffProfile, hermitian_point_values

    profile = profile or CutoffProfile()
    cutoffs = sorted(cutoffs)
    master = GridSpec(grid_ratio * max(cutoffs), max(cutoffs), beta_sq, coupling, profile)
    consts = {n: RenormConstants.compute(n, beta_sq, profile) for n in cutoffs}
    chis = {n: master.projector_multiplier(n) for n in cutoffs}
    beta = math.sqrt(beta_sq)
    out = {n: np.empty(samples) for n in cutoffs}
    for r in range(samples):
        gen = rng.replica_stream(r).generator()
        u = sample_mu(master, 1.0, gen)
        for n in cutoffs:
            vals = hermitian_point_values(u.coef * chis[n])
            quad = float(np.sum(np.cos(beta * vals))) * master.cell_area
            out[n][r] = coupling * consts[n].gamma / beta * quad
    return out


def estimate_log_partition(grid: GridSpec, n_samples: int, rng: RngStream,
                           powers=(1, 2, 4), weights: np.ndarray | None = None) -> LogZEstimate:
    """log Z = log E[e^{R(u)}] under the free field, with delta-method error.

    Also reports the empirical L^p norms (1/p) log E[e^{p R}] for the
    requested powers (the uniform-integrability diagnostics).
    """
    if n_samples < 1000 and weights is None:
        raise ValueError("need at least 1000 samples")
    r_vals = weights if weights is not None else log_weight_samples(grid, n_samples, rng)
    n = len(r_vals)
    moments = {}
    for p in powers:
        w = np.exp(p * (r_vals - r_vals.max()))
        log_norm = (logsumexp(p * r_vals) - math.log(n)) / p
        se = float(w.std(ddof=1) / (w.mean() * math.sqrt(n))) / p
        moments[p] = (float(log_norm), se)
    w1 = np.exp(r_vals - r_vals.max())
    log_z = float(logsumexp(r_vals) - math.log(n))
    se1 = float(w1.std(ddof=1) / (w1.mean() * math.sqrt(n)))
    return LogZEstimate(log_z, se1, moments, n)


@dataclass
class DriftControl:
    """Deterministic band-limited drift: K equal time slabs of mode coefficients.

    The slab arrays live on the simulation grid layout but are supported on
    |n| <= band (band <= grid cutoff).  The control cost is
    (1/2K) sum_k ||eta_k||_{L^2}^2 and the time-one integral of the smoothed
    drift is the field with coefficients (1/K) sum_k eta_k(n) / <n>.
    """

    grid: GridSpec
    band: int
    slabs: np.ndarray  # (K, M, M) complex, Hermitian, band-limited

    def __post_init__(self):
        if self.band > self.grid.cutoff:
            raise ValueError(
                f"drift band {self.band} exceeds grid cutoff {self.grid.cutoff}"
            )

    @classmethod
    def zeros(cls, grid: GridSpec, n_slabs: int, band: int) -> "DriftControl":
        m = grid.m_points
        return cls(grid, band, np.zeros((n_slabs, m, m), dtype=np.complex128))

    @property
    def n_slabs(self) -> int:
        return self.slabs.shape[0]

    def cost(self) -> float:
        return float(np.sum(np.abs(self.slabs) ** 2)) / (2.0 * self.n_slabs)

    def time_integral(self) -> FourierField:
        coef = self.slabs.mean(axis=0) / self.grid.bracket
        return FourierField(self.grid, coef)

    def band_mask(self) -> np.ndarray:
        n1, n2 = self.grid.mode_index
        return (n1 * n1 + n2 * n2) <= self.band * self.band


def _drift_dof_modes(grid: GridSpec, band: int):
    """Independent Hermitian degrees of freedom with |n| <= band.

    Returns (self-conjugate modes, half-space modes); each half-space mode
    contributes a real and an imaginary parameter, self-conjugate ones a real
    parameter only.
    """
    m = grid.m_points
    selfc, half = [], []
    for n1 in range(-band, band + 1):
        for n2 in range(-band, band + 1):
            if n1 * n1 + n2 * n2 > band * band:
                continue
            if (n1, n2) == (0, 0):
                selfc.append((0, 0))
            elif n1 > 0 or (n1 == 0 and n2 > 0):
                half.append((n1 % m, n2 % m))
    return selfc, half


def pack_drift(drift: DriftControl) -> np.ndarray:
    selfc, half = _drift_dof_modes(drift.grid, drift.band)
    out = []
    for k in range(drift.n_slabs):
        for (i, j) in selfc:
            out.append(drift.slabs[k, i, j].real)
        for (i, j) in half:
            out.append(drift.slabs[k, i, j].real)
            out.append(drift.slabs[k, i, j].imag)
    return np.array(out)


def unpack_drift(grid: GridSpec, band: int, n_slabs: int, vec: np.ndarray) -> DriftControl:
    m = grid.m_points
    selfc, half = _drift_dof_modes(grid, band)
    slabs = np.zeros((n_slabs, m, m), dtype=np.complex128)
    pos = 0
    for k in range(n_slabs):
        for (i, j) in selfc:
            slabs[k, i, j] = vec[pos]
            pos += 1
        for (i, j) in half:
            c = vec[pos] + 1j * vec[pos + 1]
            pos += 2
            slabs[k, i, j] = c
            slabs[k, (-i) % m, (-j) % m] = np.conj(c)
    return DriftControl(grid, band, slabs)


def variational_objective(drift: DriftControl, n_samples: int = 0,
                          rng: RngStream | None = None,
                          fields: list[FourierField] | None = None):
    """Drift-control upper bound on -log Z: E[-R(Y + H)] + control cost.

    Y is a free-field draw and H the time integral of the smoothed drift.
    For every deterministic drift the exact value dominates -log Z, so the
    negated estimate is a one-sided bound on log Z.  Pass ``fields`` to
    evaluate on a fixed sample set (common random numbers).

    Returns (value, standard_error).
    """
    grid = drift.grid
    constants = RenormConstants.for_grid(grid)
    if fields is None:
        if rng is None or n_samples < 1:
            raise ValueError("need either fields or (n_samples, rng)")
        fields = [sample_mu(grid, 1.0, rng.replica_stream(r).generator())
                  for r in range(n_samples)]
    shift = drift.time_integral()
    vals = np.array([-log_weight(y + shift, constants) for y in fields])
    cost = drift.cost()
    return float(vals.mean() + cost), float(vals.std(ddof=1) / math.sqrt(len(vals)))


def optimize_drift(grid: GridSpec, init: DriftControl, iterations: int,
                   n_samples: int, rng: RngStream, fd_step: float = 1e-3,
                   step0: float = 0.5):
    """Minimize the drift objective by finite-difference descent on fixed samples.

    Central differences on the Hermitian drift parameters with a common
    random-number sample batch make the objective deterministic, so
    backtracking line search gives a monotone non-increasing trace.  Each
    trace row records (objective, time-integral H^1 norm squared, cost); the
    H^1 value never exceeds the cost (exact for piecewise-constant drifts).

    Returns (optimized drift, trace).
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    fields = [sample_mu(grid, 1.0, rng.replica_stream(r).generator())
              for r in range(n_samples)]

    def objective(vec: np.ndarray) -> float:
        d = unpack_drift(grid, init.band, init.n_slabs, vec)
        val, _ = variational_objective(d, fields=fields)
        if not math.isfinite(val):
            raise RuntimeError(f"variational objective diverged ({val})")
        return val

    vec = pack_drift(init)
    current = objective(vec)
    d0 = unpack_drift(grid, init.band, init.n_slabs, vec)
    trace = [(current, d0.time_integral().sobolev_norm(1.0) ** 2, d0.cost())]
    step = step0
    for _ in range(iterations):
        grad = np.empty_like(vec)
        for i in range(len(vec)):
            e = np.zeros_like(vec)
            e[i] = fd_step
            grad[i] = (objective(vec + e) - objective(vec - e)) / (2 * fd_step)
        norm = np.linalg.norm(grad)
        if norm < 1e-12:
            break
        direction = -grad / norm
        improved = False
        while step > 1e-10:
            cand = vec + step * direction
            val = objective(cand)
            if val < current:
                vec, current, improved = cand, val, True
                step *= 1.3
                break
            step *= 0.5
        d = unpack_drift(grid, init.band, init.n_slabs, vec)
        trace.append((current, d.time_integral().sobolev_norm(1.0) ** 2, d.cost()))
        if not improved:
            break
    return unpack_drift(grid, init.band, init.n_slabs, vec), trace
