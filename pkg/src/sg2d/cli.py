"""Command-line harness: config parsing, experiment orchestration, artifacts.

Every subcommand reads one TOML config, runs a fully seeded experiment, and
writes CSV data plus a JSON manifest into the output directory.  The manifest
is written even when the run fails; assertion breaches exit nonzero with a
machine-readable failure record.
"""

from __future__ import annotations

import argparse
import difflib
import math
import sys
import time
from dataclasses import asdict, dataclass, field as dataclass_field
from pathlib import Path

import numpy as np

try:
    import tomllib  # python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from . import __version__, kernels
from .chaos import (
    RenormConstants,
    mean_one_estimate,
    regularity_scan,
    truncated_variance,
    two_point_estimate,
    wick_factor,
)
from .dynamics import (
    ObservableSet,
    dpd_consistency,
    evolve,
    invariance_experiment,
    make_theta_path,
    observed_orders,
    picard_iterates,
)
from .fourier import CutoffProfile, GridSpec, truncated_green
from .gibbs import (
    DriftControl,
    estimate_log_partition,
    optimize_drift,
    sample_gibbs,
    variational_objective,
)
from .sampling import RngStream, sample_mu
from .serialize import config_hash, write_csv, write_field_bank, write_manifest
from .stats import slope_fit

DEFAULT_OUT_ENV = "SG2D_OUT"


@dataclass
class RunConfig:
    """Validated experiment configuration with defaults applied."""

    n_cutoff: int
    beta_sq: float
    m_points: int = 0  # 0 -> 4 * n_cutoff
    coupling: float = 1.0
    model: str = "wave"
    step_h: float = 2.0**-7
    horizon: float = 1.0
    n_replicas: int = 512
    n_samples: int = 2000
    burn_in: int = 2000
    thin: int = 10
    proposal_scale: float = 0.2
    drift_slabs: int = 2
    drift_band: int = 1
    iterations: int = 30
    seed: int = 0
    out_dir: str = ""
    bridge: str = "bump"
    workers: int = 0
    cutoff_list: list = dataclass_field(default_factory=lambda: [16, 32, 64, 128])
    alphas: list = dataclass_field(default_factory=lambda: [0.1, 0.5])

    def __post_init__(self):
        if self.m_points == 0:
            self.m_points = 4 * self.n_cutoff
        if not self.out_dir:
            import os

            self.out_dir = os.environ.get(DEFAULT_OUT_ENV, "sg2d-out")
        # named invariants, checked in dependency order
        if self.n_cutoff < 1:
            raise ConfigError("n_cutoff must be >= 1 (frequency cutoff)")
        if self.m_points % 2 or self.m_points < 2 * self.n_cutoff + 2:
            raise ConfigError(
                f"m_points={self.m_points} violates 'm_points even and >= 2*n_cutoff + 2' "
                f"(mode representability) for n_cutoff={self.n_cutoff}"
            )
        if not self.beta_sq > 0:
            raise ConfigError("beta_sq must be > 0")
        if not 0.0 < self.proposal_scale < 1.0:
            raise ConfigError("proposal_scale must lie in (0, 1)")
        if self.model not in ("wave", "heat"):
            raise ConfigError("model must be 'wave' or 'heat'")
        if self.step_h <= 0 or self.horizon <= 0:
            raise ConfigError("step_h and horizon must be > 0")
        if self.burn_in < 1 or self.thin < 1:
            raise ConfigError("burn_in and thin must be >= 1")
        if self.drift_band > self.n_cutoff:
            raise ConfigError("drift_band must not exceed n_cutoff")
        if self.bridge not in ("bump", "poly"):
            raise ConfigError("bridge must be 'bump' or 'poly'")

    def grid(self) -> GridSpec:
        return GridSpec(self.m_points, self.n_cutoff, self.beta_sq,
                        self.coupling, CutoffProfile(self.bridge))

    def stream(self, *branch: int) -> RngStream:
        return RngStream(self.seed, 0, branch)

    def to_dict(self) -> dict:
        return asdict(self)


class ConfigError(ValueError):
    pass


_REQUIRED = ("n_cutoff", "beta_sq")


def parse_config(path) -> RunConfig:
    """Load and validate a TOML config; unknown keys are rejected with a hint."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    known = set(RunConfig.__dataclass_fields__)
    for key in raw:
        if key not in known:
            hint = difflib.get_close_matches(key, known, n=1)
            extra = f"; did you mean {hint[0]!r}?" if hint else ""
            raise ConfigError(f"unknown config key {key!r}{extra}")
    for key in _REQUIRED:
        if key not in raw:
            raise ConfigError(f"missing required config key {key!r}")
    return RunConfig(**raw)


def _manifest_payload(cfg: RunConfig, subcommand: str, started: float) -> dict:
    consts = RenormConstants.compute(cfg.n_cutoff, cfg.beta_sq, CutoffProfile(cfg.bridge))
    return {
        "subcommand": subcommand,
        "config": cfg.to_dict(),
        "config_hash": config_hash(cfg.to_dict()),
        "derived": {"sigma": consts.sigma, "gamma": consts.gamma},
        "kernel_backend": kernels.backend_name(),
        "version": __version__,
        "wall_clock_s": round(time.time() - started, 3),
        "n_replicas": cfg.n_replicas,
    }


# --------------------------------------------------------------------------
# subcommands: each returns (breaches, extra manifest payload)

def cmd_sigma(cfg: RunConfig, out: Path):
    profile = CutoffProfile(cfg.bridge)
    rows = []
    for n in cfg.cutoff_list:
        s = truncated_variance(n, profile)
        rows.append((n, s, wick_factor(n, cfg.beta_sq, profile)))
    write_csv(out / "sigma.csv", ["n_cutoff", "sigma", "gamma"], rows)
    slope, _ = slope_fit(np.log([r[0] for r in rows]), [r[1] for r in rows])
    target = 1.0 / (2.0 * math.pi)
    rel = abs(slope - target) / target
    breaches = [] if rel <= 0.10 else [f"sigma log-slope {slope:.6f} off target by {rel:.1%}"]
    return breaches, {"slope": slope, "slope_target": target, "slope_rel_err": rel}


def cmd_green(cfg: RunConfig, out: Path):
    profile = CutoffProfile(cfg.bridge)
    radii = np.linspace(0.05, math.pi / 2, 24)
    angles = np.linspace(0.0, math.pi / 4, 5)
    pts = np.array([(r * math.cos(a), r * math.sin(a)) for r in radii for a in angles])
    rows, excess_all = [], []
    for n in cfg.cutoff_list:
        vals = truncated_green(pts, n, profile)
        excess = vals + np.log(np.hypot(pts[:, 0], pts[:, 1]) + 1.0 / n) / (2 * math.pi)
        excess_all.append(excess)
        for (x1, x2), g, e in zip(pts, vals, excess):
            rows.append((n, x1, x2, math.hypot(x1, x2), g, e))
    write_csv(out / "green.csv",
              ["n_cutoff", "x1", "x2", "r", "green", "excess"], rows)
    allx = np.concatenate(excess_all)
    c1, c2 = float(allx.min()), float(allx.max())
    width = c2 - c1
    breaches = [] if width <= 0.5 else [f"green excess band width {width:.3f} > 0.5"]
    return breaches, {"band_low": c1, "band_high": c2, "band_width": width}


def cmd_chaos_moments(cfg: RunConfig, out: Path):
    grid = cfg.grid()
    consts = RenormConstants.for_grid(grid)
    mean, (se_re, se_im) = mean_one_estimate(grid, consts, cfg.n_samples, cfg.stream(1))
    sep = [(r, 0.0) for r in np.linspace(0.2, math.pi / 2, 8)]
    rows = two_point_estimate(grid, consts, sep, cfg.n_samples, cfg.stream(2))
    breaches = []
    if abs(mean.real - 1.0) > 3 * se_re or abs(mean.imag) > 3 * se_im:
        breaches.append(f"mean-one breach: {mean} +- ({se_re}, {se_im})")
    table = []
    for dist, est, (sre, _sim) in rows:
        ref = math.exp(cfg.beta_sq * truncated_green((dist, 0.0), cfg.n_cutoff, grid.profile))
        table.append((dist, est.real, est.imag, sre, ref))
        if abs(est.real - ref) > 3 * sre:
            breaches.append(f"two-point breach at r={dist:.3f}: {est.real} vs {ref}")
    write_csv(out / "two_point.csv",
              ["r", "est_re", "est_im", "se_re", "reference"], table)
    return breaches, {"mean_re": mean.real, "mean_im": mean.imag,
                      "se_re": se_re, "se_im": se_im}


def cmd_chaos_scan(cfg: RunConfig, out: Path):
    rows, incs = regularity_scan(cfg.beta_sq, cfg.alphas, cfg.cutoff_list,
                                 cfg.n_samples, cfg.stream(3),
                                 profile=CutoffProfile(cfg.bridge))
    write_csv(out / "scan.csv", ["alpha", "n_cutoff", "mean_norm", "se"], rows)
    write_csv(out / "scan_increments.csv",
              ["alpha", "n_cutoff_low", "mean_increment", "se"], incs)
    slopes = {}
    for a in cfg.alphas:
        sub = [r for r in rows if r[0] == a]
        slope, se = slope_fit(np.log([r[1] for r in sub]),
                              np.log([r[2] for r in sub]),
                              [r[3] / r[2] for r in sub])
        slopes[str(a)] = {"slope": slope, "se": se}
    return [], {"slopes": slopes}


def cmd_gibbs_sample(cfg: RunConfig, out: Path):
    grid = cfg.grid()
    samples, info = sample_gibbs(grid, cfg.n_samples, cfg.burn_in, cfg.thin,
                                 cfg.stream(4), cfg.proposal_scale)
    bank = np.stack([s.point_values() for s in samples])
    write_field_bank(out / "ensemble.bin", {
        "kind": "gibbs-positions",
        "m_points": cfg.m_points,
        "n_cutoff": cfg.n_cutoff,
        "beta_sq": cfg.beta_sq,
        "coupling": cfg.coupling,
        "seed": cfg.seed,
        "burn_in": cfg.burn_in,
        "thin": cfg.thin,
        "acceptance": info["acceptance"],
        "proposal_scale": info["scale"],
    }, bank)
    breaches = [f"acceptance {info['acceptance']:.3f} outside [0.1, 0.9]"] if info["warning"] else []
    return breaches, {"acceptance": info["acceptance"], "scale": info["scale"]}


def cmd_logz(cfg: RunConfig, out: Path):
    grid = cfg.grid()
    est = estimate_log_partition(grid, cfg.n_samples, cfg.stream(5))
    zero = DriftControl.zeros(grid, cfg.drift_slabs, cfg.drift_band)
    w_zero, se_zero = variational_objective(zero, cfg.n_samples, cfg.stream(6))
    opt, trace = optimize_drift(grid, zero, cfg.iterations, max(64, cfg.n_samples // 8),
                                cfg.stream(7))
    w_opt = trace[-1][0]
    rows = [(k, *t) for k, t in enumerate(trace)]
    write_csv(out / "drift_trace.csv",
              ["iteration", "objective", "h1_sq", "cost"], rows)
    breaches = []
    for label, w, se in (("zero", w_zero, se_zero), ("optimized", w_opt, 0.0)):
        if -w > est.log_z + 3 * math.hypot(est.se, se):
            breaches.append(f"variational bound breach ({label}): {-w} > {est.log_z}")
    payload = {
        "log_z": est.log_z, "log_z_se": est.se,
        "moments": {str(p): v for p, v in est.moments.items()},
        "objective_zero": w_zero, "objective_opt": w_opt,
        "gap_zero": est.log_z + w_zero, "gap_opt": est.log_z + w_opt,
    }
    return breaches, payload


def _initial_ensemble(cfg: RunConfig, grid: GridSpec):
    if cfg.coupling == 0.0:
        return [sample_mu(grid, 1.0, cfg.stream(8).replica_stream(r).generator())
                for r in range(cfg.n_replicas)]
    samples, _ = sample_gibbs(grid, cfg.n_replicas, cfg.burn_in, cfg.thin,
                              cfg.stream(8), cfg.proposal_scale)
    return samples


def cmd_invariance(cfg: RunConfig, out: Path, model: str = "wave"):
    grid = cfg.grid()
    init = _initial_ensemble(cfg, grid)
    report = invariance_experiment(grid, cfg.horizon, cfg.step_h, init,
                                   cfg.stream(9), model=model,
                                   workers=cfg.workers or None)
    rows = [(r["name"], r["mean0"], r["meanT"], r["z_mean"], r["z_var"],
             r["drift"], r["drift_se"], r["drift_l1"], r["delta1"], r["delta1_se"])
            for r in report.rows]
    write_csv(out / "invariance.csv",
              ["observable", "mean0", "meanT", "z_mean", "z_var",
               "drift", "drift_se", "drift_half", "delta", "delta_se"], rows)
    breaches = [f"|z| > 3 for {r['name']}: z_mean={r['z_mean']:.2f} z_var={r['z_var']:.2f}"
                for r in report.rows
                if abs(r["z_mean"]) > 3 or abs(r["z_var"]) > 3]
    zmax = max(max(abs(r["z_mean"]), abs(r["z_var"])) for r in report.rows)
    return breaches, {"max_abs_z": zmax, "model": model}


def cmd_evolve(cfg: RunConfig, out: Path):
    grid = cfg.grid()
    n_steps = int(round(cfg.horizon / cfg.step_h))
    rows = []
    for r in range(cfg.n_replicas):
        stream = cfg.stream(10).replica_stream(r)
        if cfg.model == "wave":
            from .sampling import sample_phase_pair

            init = sample_phase_pair(grid, stream.split(0).generator())
        else:
            init = sample_mu(grid, 1.0, stream.split(0).generator())
        traj = evolve(grid, init, cfg.model, cfg.step_h, n_steps,
                      stream.split(1).generator(),
                      record_every=max(1, n_steps // 32))
        for t, obs in zip(traj.times, traj.observables):
            for name, val in obs.items():
                rows.append((t, r, name, val))
    write_csv(out / "trajectory.csv", ["t", "replica", "observable", "value"], rows)
    return [], {"n_steps": n_steps}


def cmd_dpd_check(cfg: RunConfig, out: Path):
    grid = cfg.grid()
    h_list = [2.0**-k for k in (5, 6, 7, 8, 9)]
    rows = dpd_consistency(grid, cfg.horizon, h_list, cfg.stream(11),
                           n_paths=max(2, min(cfg.n_replicas, 6)))
    write_csv(out / "dpd.csv", ["h", "error"], rows)
    orders = observed_orders(rows)
    mean_order = float(np.mean(orders)) if orders else math.nan
    breaches = [] if mean_order >= 0.8 else [f"observed order {mean_order:.3f} < 0.8"]
    return breaches, {"orders": orders, "mean_order": mean_order}


def cmd_picard(cfg: RunConfig, out: Path):
    grid = cfg.grid()
    n_steps = int(round(cfg.horizon / cfg.step_h))
    thetas, _ = make_theta_path(grid, cfg.step_h, n_steps,
                                cfg.stream(12).generator())
    diffs = picard_iterates(thetas, cfg.step_h, cfg.iterations)
    rows = []
    for k, d in enumerate(diffs):
        ratio = diffs[k] / diffs[k - 1] if k and diffs[k - 1] > 0 else math.nan
        rows.append((k, d, ratio))
    write_csv(out / "picard.csv", ["iteration", "difference", "ratio"], rows)
    contracting = all(r[2] < 1 for r in rows[1:5] if not math.isnan(r[2]))
    return [], {"contracting": contracting,
                "ratios": [r[2] for r in rows[1:] if not math.isnan(r[2])]}


COMMANDS = {
    "sigma": cmd_sigma,
    "green": cmd_green,
    "chaos-moments": cmd_chaos_moments,
    "chaos-scan": cmd_chaos_scan,
    "gibbs-sample": cmd_gibbs_sample,
    "logz": cmd_logz,
    "evolve": cmd_evolve,
    "invariance": lambda cfg, out: cmd_invariance(cfg, out, "wave"),
    "invariance-parabolic": lambda cfg, out: cmd_invariance(cfg, out, "heat"),
    "dpd-check": cmd_dpd_check,
    "picard": cmd_picard,
}


def run(subcommand: str, cfg: RunConfig) -> int:
    started = time.time()
    out = Path(cfg.out_dir) / subcommand
    out.mkdir(parents=True, exist_ok=True)
    status, breaches, extra = "ok", [], {}
    try:
        breaches, extra = COMMANDS[subcommand](cfg, out)
        if breaches:
            status = "assertion-breach"
    except Exception as exc:  # manifest still gets written
        status = "error"
        extra = {"error": f"{type(exc).__name__}: {exc}"}
        raise
    finally:
        payload = _manifest_payload(cfg, subcommand, started)
        payload.update(extra)
        payload["status"] = status
        payload["breaches"] = breaches
        write_manifest(out / "manifest.json", payload)
    return 0 if not breaches else 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sg2d",
        description="Sampling, measurement, and dynamics experiments for the "
                    "renormalized stochastic sine-Gordon model on the 2-torus.",
    )
    parser.add_argument("subcommand", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="TOML config file")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--out", default=None, help="override output directory")
    parser.add_argument("--replicas", type=int, default=None,
                        help="override replica count")
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out_dir = args.out
        if args.replicas is not None:
            cfg.n_replicas = args.replicas
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(args.subcommand, cfg)
    except Exception as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
