"""Time integration of the truncated stochastic sine-Gordon dynamics.

Integrators are exponential (mild-form): the linear flow and its noise are
sampled exactly per mode, the projected sine drift is frozen at the left
endpoint of each step.  At zero coupling every integrator therefore reduces
bit for bit to the exact linear flow, so invariance experiments isolate the
nonlinear splitting bias, which is O(h).

The hyperbolic drift is the exact gradient of the renormalized cosine
integral, so the tilted Gaussian phase measure is invariant for the
continuous-time truncated flow; the parabolic flow uses the half-weighted
gradient matching its half-weighted linear part, targeting the position
marginal of the same measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .chaos import ChaosField, RenormConstants, wick_exponential
from .fourier import FourierField, GridSpec, hermitian_point_values, real_forward_coef
from .sampling import (
    LinearStepTables,
    PhaseState,
    RngStream,
    build_linear_tables,
    draw_heat_noise,
    draw_wave_noise,
    evolve_linear,
    sample_mu,
    sample_phase_pair,
    wave_step_with_noise,
    _zero_drift,
)
from . import kernels


def sine_drift(u: FourierField, constants: RenormConstants) -> np.ndarray:
    """Projected sine drift coefficients: -coupling * gamma * P_N sin(beta P_N u).

    This is the functional gradient of the renormalized cosine integral.
    Returns the zero array when the coupling is off so that coupled and
    linear trajectories coincide exactly.
    """
    grid = u.grid
    if grid.coupling == 0.0:
        return _zero_drift(grid.m_points)
    beta = math.sqrt(constants.beta_sq)
    chi = grid.projector_multiplier(constants.cutoff)
    vals = hermitian_point_values(u.coef * chi)
    coef = real_forward_coef(np.sin(beta * vals))
    return (-grid.coupling * constants.gamma) * (coef * chi)


def hyperbolic_step(state: PhaseState, tables: LinearStepTables,
                    constants: RenormConstants,
                    gen: np.random.Generator) -> PhaseState:
    """One exponential-Euler step of the damped-wave sine-Gordon flow."""
    nu, nv = draw_wave_noise(tables, gen)
    return wave_step_with_noise(state, tables, sine_drift(state.u, constants), nu, nv)


def parabolic_step(field: FourierField, tables: LinearStepTables,
                   constants: RenormConstants,
                   gen: np.random.Generator) -> FourierField:
    """One exponential-Euler step of the parabolic flow.

    The drift is the half-weighted gradient -(1/2)[(1-Lap)u + grad tilt],
    matching the half-weighted linear part, so the tilted free field is the
    exact stationary law (at zero coupling: per-mode Ornstein-Uhlenbeck with
    stationary variance <n>^{-2}).
    """
    if tables.model != "heat":
        raise ValueError("parabolic_step needs heat-model tables")
    drift = 0.5 * sine_drift(field, constants)
    noise = draw_heat_noise(tables, gen)
    return _heat_apply(field, tables, drift, noise)


def _heat_apply(field: FourierField, tables: LinearStepTables,
                drift: np.ndarray, noise: np.ndarray) -> FourierField:
    m = field.grid.m_points
    out = np.empty((m, m), dtype=np.complex128)
    kernels.heat_step(field.coef, tables.a, tables.w, drift, noise, out)
    return FourierField(field.grid, out)


def dpd_step(w_state: PhaseState, theta: ChaosField,
             tables: LinearStepTables) -> PhaseState:
    """Residual-equation step: drift -coupling * Im P_N[e^{i beta P_N w} Theta].

    No direct noise; all randomness enters through the phase-exponential
    coefficient.  For band-limited w this drift equals the full sine drift
    evaluated at w + Psi, which is what makes the residual decomposition
    consistent path by path.
    """
    grid = w_state.u.grid
    constants = theta.constants
    beta = math.sqrt(constants.beta_sq)
    chi = grid.projector_multiplier(constants.cutoff)
    wvals = hermitian_point_values(w_state.u.coef * chi)
    integrand = np.imag(np.exp(1j * beta * wvals) * theta.values)
    drift = (-grid.coupling) * (real_forward_coef(integrand) * chi)
    zero = _zero_drift(grid.m_points)
    return wave_step_with_noise(w_state, tables, drift, zero, zero)


class ObservableSet:
    """Cheap invariance witnesses: cosine integral, band energy, velocity norm, low modes."""

    def __init__(self, grid: GridSpec, eps: float = 0.1, low_mode_max: int = 2):
        self.grid = grid
        self.eps = eps
        self.low_modes = [(0, 0), (1, 0), (0, 1), (1, 1), (1, -1), (2, 0), (0, 2)]
        self.low_modes = [m for m in self.low_modes
                          if m[0] ** 2 + m[1] ** 2 <= low_mode_max**2]
        self.names = ["cos_integral", "band_energy", "velocity_hneg"]
        for (i, j) in self.low_modes:
            self.names.append(f"re_u_{i}_{j}")
            if (i, j) != (0, 0):
                self.names.append(f"im_u_{i}_{j}")

    def evaluate(self, u: FourierField, v: FourierField | None = None) -> dict:
        grid = self.grid
        beta = grid.beta
        out = {
            "cos_integral": float(np.sum(np.cos(beta * u.project().point_values())))
            * grid.cell_area,
            "band_energy": u.project(max(1, grid.cutoff // 2)).l2_norm() ** 2,
            "velocity_hneg": v.sobolev_norm(-self.eps) ** 2 if v is not None else math.nan,
        }
        for (i, j) in self.low_modes:
            c = u.coef[i % grid.m_points, j % grid.m_points]
            out[f"re_u_{i}_{j}"] = float(c.real)
            if (i, j) != (0, 0):
                out[f"im_u_{i}_{j}"] = float(c.imag)
        return out


@dataclass
class Trajectory:
    """Snapshot times, observable series, and integrator metadata for one run."""

    times: list
    observables: list  # dict per recorded time
    h: float
    scheme: str
    states: list = dataclass_field(default_factory=list)


def evolve(grid: GridSpec, init, model: str, h: float, n_steps: int,
           gen: np.random.Generator, observables: ObservableSet | None = None,
           record_every: int = 1, keep_states: bool = False) -> Trajectory:
    """Drive one trajectory of the chosen model, recording observables."""
    constants = RenormConstants.for_grid(grid)
    tables = build_linear_tables(grid, h, model)
    obs = observables or ObservableSet(grid)
    traj = Trajectory([], [], h, f"exp-euler/{model}")

    def record(t, u, v):
        traj.times.append(t)
        traj.observables.append(obs.evaluate(u, v))
        if keep_states:
            traj.states.append((u.copy(), v.copy() if v is not None else None))

    if model == "wave":
        state = init.copy()
        record(state.t, state.u, state.v)
        for k in range(n_steps):
            state = hyperbolic_step(state, tables, constants, gen)
            if (k + 1) % record_every == 0:
                record(state.t, state.u, state.v)
        return traj
    if model == "heat":
        field = init.copy() if isinstance(init, FourierField) else init.u.copy()
        t = 0.0
        record(t, field, None)
        for k in range(n_steps):
            field = parabolic_step(field, tables, constants, gen)
            t += h
            if (k + 1) % record_every == 0:
                record(t, field, None)
        return traj
    raise ValueError(f"model must be 'wave' or 'heat', got {model!r}")


# ---------------------------------------------------------------------------
# coupled multi-resolution invariance runs (common random numbers)

def _noise_pyramid_wave(tables_fine: LinearStepTables, fine_noises):
    """Aggregate wave-noise increments one refinement level up.

    Two consecutive fine increments compose exactly into one double-step
    increment: n = A_fine n_first + n_second.
    """
    out = []
    for k in range(0, len(fine_noises), 2):
        (au, av), (bu, bv) = fine_noises[k], fine_noises[k + 1]
        out.append((tables_fine.a11 * au + tables_fine.a12 * av + bu,
                    tables_fine.a21 * au + tables_fine.a22 * av + bv))
    return out


def _wave_replica(grid: GridSpec, u0_coef, v0_coef, h: float, n_steps: int,
                  stream: RngStream, obs: ObservableSet, levels: int = 2):
    """Evolve one replica at steps h, h/2, ..., h/2^{levels-1} on one noise path.

    The noise is realized at the finest level and composed exactly for the
    coarser chains, so step-size sensitivities are measured with common
    random numbers.  Returns observable dicts (start, end at each level,
    coarsest first).
    """
    constants = RenormConstants.for_grid(grid)
    tables = [build_linear_tables(grid, h / 2**l, "wave") for l in range(levels)]
    gen = stream.generator()
    states = [PhaseState(FourierField(grid, u0_coef.copy()),
                         FourierField(grid, v0_coef.copy()))
              for _ in range(levels)]
    start = obs.evaluate(states[0].u, states[0].v)
    finest = levels - 1
    for _ in range(n_steps):
        noises = [draw_wave_noise(tables[finest], gen) for _ in range(2**finest)]
        by_level = {finest: noises}
        for l in range(finest - 1, -1, -1):
            by_level[l] = _noise_pyramid_wave(tables[l + 1], by_level[l + 1])
        for l in range(levels):
            for (nu, nv) in by_level[l]:
                drift = sine_drift(states[l].u, constants)
                states[l] = wave_step_with_noise(states[l], tables[l], drift, nu, nv)
    return [start] + [obs.evaluate(s.u, s.v) for s in states]


def _heat_replica(grid: GridSpec, u0_coef, h: float, n_steps: int,
                  stream: RngStream, obs: ObservableSet, levels: int = 2):
    constants = RenormConstants.for_grid(grid)
    tables = [build_linear_tables(grid, h / 2**l, "heat") for l in range(levels)]
    gen = stream.generator()
    states = [FourierField(grid, u0_coef.copy()) for _ in range(levels)]
    start = obs.evaluate(states[0], None)
    finest = levels - 1
    for _ in range(n_steps):
        noises = [draw_heat_noise(tables[finest], gen) for _ in range(2**finest)]
        by_level = {finest: noises}
        for l in range(finest - 1, -1, -1):
            prev = by_level[l + 1]
            by_level[l] = [tables[l + 1].a * prev[k] + prev[k + 1]
                           for k in range(0, len(prev), 2)]
        for l in range(levels):
            for n in by_level[l]:
                drift = 0.5 * sine_drift(states[l], constants)
                states[l] = _heat_apply(states[l], tables[l], drift, n)
    return [start] + [obs.evaluate(s, None) for s in states]


def invariance_replica(args):
    """Top-level worker for parallel dispatch; args packs one replica's task."""
    (model, grid, u0, v0, h, n_steps, stream, levels) = args
    obs = ObservableSet(grid)
    if model == "wave":
        return _wave_replica(grid, u0, v0, h, n_steps, stream, obs, levels)
    return _heat_replica(grid, u0, h, n_steps, stream, obs, levels)


@dataclass
class InvarianceReport:
    """Per-observable start/end statistics of an ensemble invariance run."""

    model: str
    h: float
    horizon: float
    n_replicas: int
    rows: list  # dicts: name, mean0, meanT, z_mean, z_var, drift (+se) per level,
    #              delta (+se) between consecutive step levels


def summarize_invariance(model, h, horizon, names, start, ends) -> InvarianceReport:
    """Paired z-scores and step-refinement drift deltas from replica tables.

    ``ends`` holds the end-time observables per step level (coarsest first).
    The z statistics refer to the coarsest (headline) level; ``delta{k}`` is
    the paired mean of end(level k-1) - end(level k), the common-random-number
    estimate of the integrator-bias change under one step halving.
    """
    rows = []
    n = start.shape[0]
    for k, name in enumerate(names):
        o0 = start[:, k]
        if np.isnan(o0).all():
            continue
        oT = ends[0][:, k]
        d = oT - o0
        se_d = d.std(ddof=1) / math.sqrt(n)
        vpair = (oT - oT.mean()) ** 2 - (o0 - o0.mean()) ** 2
        se_v = vpair.std(ddof=1) / math.sqrt(n)
        row = {
            "name": name,
            "mean0": float(o0.mean()),
            "meanT": float(oT.mean()),
            "z_mean": float(d.mean() / se_d) if se_d > 0 else 0.0,
            "z_var": float(vpair.mean() / se_v) if se_v > 0 else 0.0,
            "drift": float(d.mean()),
            "drift_se": float(se_d),
        }
        for lev in range(1, len(ends)):
            dl = ends[lev][:, k] - o0
            row[f"drift_l{lev}"] = float(dl.mean())
            row[f"drift_l{lev}_se"] = float(dl.std(ddof=1) / math.sqrt(n))
            diff = ends[lev - 1][:, k] - ends[lev][:, k]
            row[f"delta{lev}"] = float(diff.mean())
            row[f"delta{lev}_se"] = float(diff.std(ddof=1) / math.sqrt(n))
        rows.append(row)
    return InvarianceReport(model, h, horizon, n, rows)


def invariance_experiment(grid: GridSpec, T: float, h: float, init_fields,
                          rng: RngStream, model: str = "wave",
                          workers: int = 1, levels: int = 2) -> InvarianceReport:
    """Evolve an ensemble to time T and compare observables against time 0.

    ``init_fields`` is a list of position FourierFields (e.g. from the Gibbs
    sampler); for the wave model each replica gets an independent white
    velocity (the velocity marginal is Gaussian and independent).  Each
    replica is also run at the refined steps h/2, ..., h/2^{levels-1} on the
    same noise path, so step-size sensitivity is measured with common random
    numbers.
    """
    from .parallel import replica_map

    n_steps = int(round(T / h))
    if abs(n_steps * h - T) > 1e-9 * max(T, 1.0):
        raise ValueError(f"horizon {T} is not an integer number of steps of {h}")
    obs = ObservableSet(grid)
    tasks = []
    for r, u0 in enumerate(init_fields):
        stream = rng.replica_stream(r)
        if model == "wave":
            v0 = sample_mu(grid, 0.0, stream.split(1).generator())
            tasks.append((model, grid, u0.coef, v0.coef, h, n_steps,
                          stream.split(2), levels))
        else:
            tasks.append((model, grid, u0.coef, None, h, n_steps,
                          stream.split(2), levels))
    results = replica_map(invariance_replica, tasks, workers)
    names = obs.names
    start = np.array([[res[0][k] for k in names] for res in results])
    ends = [np.array([[res[1 + lev][k] for k in names] for res in results])
            for lev in range(levels)]
    return summarize_invariance(model, h, T, names, start, ends)


# ---------------------------------------------------------------------------
# residual-decomposition consistency and the fixed-point diagnostic

def make_theta_path(grid: GridSpec, h: float, n_steps: int, gen,
                    psi0: PhaseState | None = None):
    """Stationary phase-exponential path from the exact linear flow.

    Returns (theta_path, psi_states) sampled at times 0, h, ..., n_steps*h.
    """
    constants = RenormConstants.for_grid(grid)
    tables = build_linear_tables(grid, h, "wave")
    psi = psi0.copy() if psi0 is not None else sample_phase_pair(grid, gen)
    thetas = [wick_exponential(psi.u.project(), constants)]
    states = [psi.copy()]
    for _ in range(n_steps):
        psi = evolve_linear(psi, tables, gen)
        thetas.append(wick_exponential(psi.u.project(), constants))
        states.append(psi.copy())
    return thetas, states


def picard_iterates(theta_path, h: float, iterations: int, alpha: float = 0.5):
    """Successive differences of the discrete Duhamel fixed-point map.

    Iterates w -> -(integral of the damped-wave kernel against the projected
    imaginary part of e^{i beta w} Theta) from w = 0, with left-endpoint
    rectangle quadrature and the exact per-mode kernel.  Returns the list of
    sup-over-time H^{1-alpha} norms of consecutive differences; ratios below
    one indicate contraction at this horizon.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    grid = theta_path[0].grid
    constants = theta_path[0].constants
    beta = math.sqrt(constants.beta_sq)
    chi = grid.projector_multiplier(constants.cutoff)
    m = grid.m_points
    n_times = len(theta_path)
    om_t = np.sqrt(grid.bracket_sq - 0.25)
    kern = [np.exp(-0.5 * lag * h) * np.sin(om_t * lag * h) / om_t
            for lag in range(n_times)]
    scale = 2.0 * math.pi / m**2

    def apply_map(w_path):
        g = []
        for j in range(n_times - 1):
            wvals = np.fft.ifft2(w_path[j] * chi).real * (m * m / (2.0 * math.pi))
            integrand = np.imag(np.exp(1j * beta * wvals) * theta_path[j].values)
            g.append((-grid.coupling) * (np.fft.fft2(integrand) * scale) * chi)
        out = [np.zeros((m, m), dtype=np.complex128)]
        for k in range(1, n_times):
            acc = np.zeros((m, m), dtype=np.complex128)
            for j in range(k):
                acc += kern[k - j] * g[j]
            out.append(h * acc)
        return out

    w_path = [np.zeros((m, m), dtype=np.complex128) for _ in range(n_times)]
    diffs = []
    sob = grid.bracket_sq ** (1.0 - alpha)
    for _ in range(iterations):
        new_path = apply_map(w_path)
        sup = 0.0
        for wk, nk in zip(w_path, new_path):
            delta = nk - wk
            sup = max(sup, math.sqrt(float(np.sum(sob * (delta.real**2 + delta.imag**2)))))
        diffs.append(sup)
        w_path = new_path
    return diffs


def dpd_consistency(grid: GridSpec, T: float, h_list, rng: RngStream,
                    refine: int = 8, n_paths: int = 4, alpha: float = 0.5):
    """Same-noise-path distance between the direct and residual solutions.

    For each path a single fine reference (exact linear part at step
    h_fine = min(h)/refine, residual equation driven by the synchronized
    phase exponential) is built once; the direct solution at each coarse h
    consumes the identical underlying noise, aggregated exactly into coarse
    increments.  Returns rows (h, mean over paths of the sup-in-time
    H^{1-alpha} error).
    """
    constants = RenormConstants.for_grid(grid)
    h_list = sorted(h_list, reverse=True)
    h_fine = min(h_list) / refine
    steps_fine = int(round(T / h_fine))
    check_every = int(round(max(h_list) / h_fine))
    tables_fine = build_linear_tables(grid, h_fine, "wave")
    errors = {h: [] for h in h_list}
    for p in range(n_paths):
        stream = rng.replica_stream(p)
        init = sample_phase_pair(grid, stream.split(0).generator())
        # reference route: exact linear part + residual equation at h_fine
        gen = stream.split(1).generator()
        psi = init.copy()
        w = PhaseState(FourierField.zeros(grid), FourierField.zeros(grid))
        ref_snaps = {0: (psi.u.coef + w.u.coef, psi.v.coef + w.v.coef)}
        for k in range(steps_fine):
            theta = wick_exponential(psi.u.project(), constants)
            w = dpd_step(w, theta, tables_fine)
            nu, nv = draw_wave_noise(tables_fine, gen)
            psi = wave_step_with_noise(psi, tables_fine, _zero_drift(grid.m_points), nu, nv)
            if (k + 1) % check_every == 0:
                ref_snaps[k + 1] = (psi.u.coef + w.u.coef, psi.v.coef + w.v.coef)
        sob = grid.bracket_sq ** (1.0 - alpha)
        for h in h_list:
            sub = int(round(h / h_fine))
            gen = stream.split(1).generator()  # identical noise sequence
            state = init.copy()
            err = 0.0
            tables_h = build_linear_tables(grid, h, "wave")
            fine_count = 0
            while fine_count < steps_fine:
                nu = np.zeros((grid.m_points, grid.m_points), dtype=np.complex128)
                nv = np.zeros_like(nu)
                for _ in range(sub):
                    zu, zv = draw_wave_noise(tables_fine, gen)
                    nu, nv = (tables_fine.a11 * nu + tables_fine.a12 * nv + zu,
                              tables_fine.a21 * nu + tables_fine.a22 * nv + zv)
                    fine_count += 1
                drift = sine_drift(state.u, constants)
                state = wave_step_with_noise(state, tables_h, drift, nu, nv)
                if fine_count % check_every == 0:
                    ref_u, ref_v = ref_snaps[fine_count]
                    delta = state.u.coef - ref_u
                    err = max(err, math.sqrt(float(np.sum(sob * (delta.real**2 + delta.imag**2)))))
            errors[h].append(err)
    return [(h, float(np.mean(errors[h]))) for h in h_list]


def observed_orders(rows):
    """log2 error ratios of consecutive step halvings."""
    orders = []
    for (h1, e1), (h2, e2) in zip(rows[:-1], rows[1:]):
        if e2 > 0:
            orders.append(math.log2(e1 / e2) / math.log2(h1 / h2))
    return orders
