"""Batch experiment runner.

`qpathlab run CONFIG` loads a TOML scenario description, executes the
corresponding pipeline deterministically, writes CSV tables plus a JSON
report, and exits 0 only if every scenario check passed (1 on check failure
or module error, 2 on usage/config errors).  `qpathlab validate CONFIG`
lists config violations without running anything.

Outputs are byte-reproducible for a fixed config and master seed; wall time
is printed to stderr rather than stored in the report so re-runs compare
equal byte for byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import erfinv
from scipy.stats import kstest

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from . import algebra, propagators, states, stochastic
from .bohm import (field_momentum_density, global_momentum, integrate_trajectories,
                   local_momentum, moyal_mean_momentum,
                   spectral_momentum_expectation)
from .grid import Grid1D
from .solver import (EvolutionTrace, PotentialSpec, continuity_residual,
                     evolve_trace, qhj_residual)

SCENARIOS = ("free_gaussian", "coherent_state", "two_slit",
             "kernel_convergence", "nelson_convergence", "algebra_checks")

DEFAULT_STORE_EVERY = 10  # snapshot decimation for trace-storing scenarios

ENV_THREADS = "QPATHLAB_THREADS"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class ScenarioConfig:
    scenario: str
    grid: dict = field(default_factory=dict)
    physics: dict = field(default_factory=dict)
    evolution: dict = field(default_factory=dict)
    trajectories: dict = field(default_factory=dict)
    stochastic: dict = field(default_factory=dict)
    kernel: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    threads: int = 1

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        known = {"scenario", "grid", "physics", "evolution", "trajectories",
                 "stochastic", "kernel", "output"}
        cfg = cls(scenario=raw.get("scenario", ""))
        for key in known - {"scenario"}:
            setattr(cfg, key, dict(raw.get(key, {})))
        cfg.unknown_keys = sorted(set(raw) - known)
        return cfg

    def validate(self) -> list[str]:
        """All violations, each naming the offending field."""
        bad = []
        if getattr(self, "unknown_keys", []):
            bad.append(f"unknown top-level keys: {', '.join(self.unknown_keys)}")
        if not self.scenario:
            bad.append("scenario: missing")
        elif self.scenario not in SCENARIOS:
            bad.append(f"scenario: unknown {self.scenario!r} "
                       f"(expected one of {', '.join(SCENARIOS)})")

        g = self.grid
        for name in ("x_min", "x_max", "n"):
            if name not in g:
                bad.append(f"grid.{name}: missing")
        if "n" in g:
            n = g["n"]
            if not isinstance(n, int) or n < 8 or (n & (n - 1)):
                bad.append(f"grid.n: must be a power of two >= 8, got {n}")
        if "x_min" in g and "x_max" in g and not g["x_max"] > g["x_min"]:
            bad.append("grid.x_max: must exceed grid.x_min")

        p = self.physics
        for name in ("m", "hbar"):
            if p.get(name, 1.0) <= 0:
                bad.append(f"physics.{name}: must be positive")
        for name in ("sigma0", "omega", "amplitude", "slit_separation",
                     "slit_width"):
            if name in p and p[name] <= 0:
                bad.append(f"physics.{name}: must be positive, got {p[name]}")

        needs_evolution = self.scenario in ("free_gaussian", "coherent_state",
                                            "two_slit", "nelson_convergence")
        if needs_evolution:
            e = self.evolution
            if "dt" not in e:
                bad.append("evolution.dt: missing")
            elif e["dt"] <= 0:
                bad.append(f"evolution.dt: must be positive, got {e['dt']}")
            if "n_steps" not in e:
                bad.append("evolution.n_steps: missing")
            elif not isinstance(e["n_steps"], int) or e["n_steps"] < 1:
                bad.append("evolution.n_steps: must be a positive integer")
            stores_trace = self.scenario != "nelson_convergence"
            default_se = DEFAULT_STORE_EVERY if stores_trace else 1
            se = e.get("store_every", default_se)
            if not isinstance(se, int) or se < 1:
                bad.append("evolution.store_every: must be a positive integer")
            elif (stores_trace and isinstance(e.get("n_steps"), int)
                  and e["n_steps"] % se):
                bad.append("evolution.n_steps: must be a multiple of store_every")

        if self.scenario == "free_gaussian" and p.get("sigma0", 1.0) <= 0:
            bad.append("physics.sigma0: must be positive")
        if self.scenario == "coherent_state":
            for name in ("omega", "amplitude"):
                if name not in p:
                    bad.append(f"physics.{name}: missing (required by coherent_state)")
        if self.scenario == "two_slit":
            for name in ("slit_separation", "slit_width"):
                if name not in p:
                    bad.append(f"physics.{name}: missing (required by two_slit)")
            ns = self.trajectories.get("n_seeds", 100)
            if not isinstance(ns, int) or ns < 2:
                bad.append("trajectories.n_seeds: must be an integer >= 2")

        if self.scenario == "nelson_convergence":
            s = self.stochastic
            if "n_paths" not in s:
                bad.append("stochastic.n_paths: missing")
            elif not isinstance(s["n_paths"], int) or s["n_paths"] < 100:
                bad.append("stochastic.n_paths: must be an integer >= 100")
            if "master_seed" not in s:
                bad.append("stochastic.master_seed: missing")
            elif not isinstance(s["master_seed"], int) or s["master_seed"] < 0:
                bad.append("stochastic.master_seed: must be a non-negative integer")
            if s.get("bandwidth", 0.3) <= 0:
                bad.append("stochastic.bandwidth: must be positive")
            se = s.get("store_every", 1)
            if not isinstance(se, int) or se < 1:
                bad.append("stochastic.store_every: must be a positive integer")

        if self.scenario == "kernel_convergence":
            k = self.kernel
            if k.get("n_slices", 64) < 1:
                bad.append("kernel.n_slices: must be >= 1")
            if k.get("t_total", 1.0) <= 0:
                bad.append("kernel.t_total: must be positive")
        return bad

    def make_grid(self) -> Grid1D:
        return Grid1D(self.grid["x_min"], self.grid["x_max"], self.grid["n"])


def load_config(path) -> ScenarioConfig:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return ScenarioConfig.from_dict(raw)


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------

@dataclass
class RunReport:
    scenario: str
    version: str
    checks: list
    wall_time_s: float = 0.0
    error: str | None = None

    @property
    def all_passed(self) -> bool:
        return self.error is None and all(c["passed"] for c in self.checks)

    def to_json(self) -> str:
        payload = {
            "scenario": self.scenario,
            "version": self.version,
            "checks": self.checks,
            "all_passed": self.all_passed,
        }
        if self.error is not None:
            payload["error"] = self.error
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _check(name: str, value: float, tolerance: float, oracle: str,
           comparison: str = "max_below") -> dict:
    if comparison == "max_below":
        passed = value < tolerance
    elif comparison == "min_above":
        passed = value > tolerance
    elif comparison == "true":
        passed = bool(value)
    else:
        raise ValueError(f"unknown comparison {comparison!r}")
    return {"name": name, "value": float(value) if comparison != "true" else bool(value),
            "tolerance": tolerance, "comparison": comparison,
            "oracle": oracle, "passed": bool(passed)}


def _interval_check(name: str, value: float, lo: float, hi: float, oracle: str) -> dict:
    return {"name": name, "value": float(value), "tolerance": [lo, hi],
            "comparison": "within_interval", "oracle": oracle,
            "passed": bool(lo <= value <= hi)}


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _csv_trajectories(scenario: str, trajectories) -> str:
    lines = ["scenario,traj_id,t,x"]
    for tid, traj in enumerate(trajectories):
        for t, x in zip(traj.times, traj.positions):
            lines.append(f"{scenario},{tid},{float(t)!r},{float(x)!r}")
    return "\n".join(lines) + "\n"


def _csv_field(rows) -> str:
    lines = ["t,x,value"]
    for t, x, v in rows:
        lines.append(f"{float(t)!r},{float(x)!r},{float(v)!r}")
    return "\n".join(lines) + "\n"


def _density_rows(trace: EvolutionTrace, every: int = 1):
    rows = []
    for snap in trace.snapshots[::every]:
        rho = np.abs(snap.psi) ** 2
        for x, v in zip(snap.grid.x, rho):
            rows.append((snap.t, x, v))
    return rows


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

def _momentum_identity_checks(psi, hbar: float, label: str) -> list:
    pw = local_momentum(psi, "weak_value", hbar=hbar)
    pg = local_momentum(psi, "phase_gradient", hbar=hbar)
    pm = moyal_mean_momentum(psi, hbar=hbar)
    both = pw.valid & pg.valid
    d1 = float(np.abs(pw.values[both] - pg.values[both]).max())
    d2 = float(np.abs(pw.values[pw.valid] - pm.values[pw.valid]).max())
    t0j = field_momentum_density(psi, hbar=hbar)
    d3 = float(np.abs(t0j.values[pw.valid]
                      - (np.abs(psi.psi[pw.valid]) ** 2) * pw.values[pw.valid]).max())
    d4 = abs(global_momentum(psi, hbar=hbar) - spectral_momentum_expectation(psi, hbar=hbar))
    return [
        _check(f"{label}.phase_vs_weak", d1, 1e-8, "route-agreement identity"),
        _check(f"{label}.moyal_vs_weak", d2, 1e-8, "route-agreement identity"),
        _check(f"{label}.momentum_density_identity", d3, 1e-10, "pointwise identity"),
        _check(f"{label}.global_vs_spectral", d4, 1e-8, "wavenumber-domain expectation"),
    ]


def _scenario_free_gaussian(cfg: ScenarioConfig, outdir: Path):
    p, e = cfg.physics, cfg.evolution
    m, hbar = p.get("m", 1.0), p.get("hbar", 1.0)
    sigma0, k0 = p.get("sigma0", 1.0), p.get("k0", 0.0)
    grid = cfg.make_grid()
    V = PotentialSpec.free(m=m, hbar=hbar)
    psi0 = states.gaussian_packet(grid, sigma0=sigma0, k0=k0)
    trace = evolve_trace(psi0, V, e["dt"], e["n_steps"],
                         e.get("store_every", DEFAULT_STORE_EVERY))
    t_end = trace.times[-1]
    checks = []

    # packet width against the closed-form spreading law
    rho = np.abs(trace[-1].psi) ** 2
    mean = float(np.sum(grid.x * rho) * grid.dx)
    var = float(np.sum((grid.x - mean) ** 2 * rho) * grid.dx)
    sigma_ref = states.free_gaussian_width(t_end, sigma0, m, hbar)
    checks.append(_check("width_vs_analytic", abs(np.sqrt(var) - sigma_ref), 1e-6,
                         "closed-form spreading law"))
    checks.append(_check("norm_drift", abs(trace[-1].norm_squared() - 1.0), 1e-10,
                         "unitarity"))
    checks += _momentum_identity_checks(trace[-1], hbar, "momentum")

    # transport of density quantiles along deterministic orbits
    n_q = int(cfg.trajectories.get("n_quantiles", 200))
    u = (np.arange(n_q) + 0.5) / n_q
    seeds = sigma0 * np.sqrt(2.0) * erfinv(2.0 * u - 1.0)
    trajs = integrate_trajectories(trace, seeds, m=m, hbar=hbar)
    finals = np.array([tr.positions[-1] for tr in trajs])
    target = (states.free_gaussian_width(t_end, sigma0, m, hbar)
              * np.sqrt(2.0) * erfinv(2.0 * u - 1.0) + hbar * k0 * t_end / m)
    w1 = float(np.mean(np.abs(np.sort(finals) - target)))
    checks.append(_check("equivariance_w1", w1, 1e-3, "quantile transport"))
    order0 = np.argsort(seeds)
    n_common = min(tr.positions.size for tr in trajs)
    ordered = all(np.array_equal(np.argsort([tr.positions[j] for tr in trajs]), order0)
                  for j in range(0, n_common, max(1, n_common // 8)))
    checks.append(_check("trajectory_ordering", ordered, 0.5, "non-crossing flow",
                         comparison="true"))

    # second-order convergence of both transport residuals under dt halving
    dt0 = e.get("residual_dt", 2e-3)
    n0 = int(e.get("residual_steps", 100))
    ratios = {}
    for name, fn in (("continuity", lambda tr: continuity_residual(tr, m, hbar)),
                     ("phase_transport", lambda tr: qhj_residual(tr, V, m, hbar))):
        r = [fn(evolve_trace(psi0, V, dt, 2 * n0 if i else n0))
             for i, dt in enumerate((dt0, 0.5 * dt0))]
        ratios[name] = r[0] / r[1]
        checks.append(_interval_check(f"{name}_dt_ratio", r[0] / r[1], 3.5, 4.5,
                                      "convergence-order measurement"))

    _write(outdir / "trajectories.csv", _csv_trajectories("free_gaussian", trajs))
    _write(outdir / "density.csv",
           _csv_field(_density_rows(trace, max(1, len(trace) // 6))))
    return checks


def _scenario_coherent_state(cfg: ScenarioConfig, outdir: Path):
    p, e = cfg.physics, cfg.evolution
    m, hbar = p.get("m", 1.0), p.get("hbar", 1.0)
    omega, amp = p["omega"], p["amplitude"]
    grid = cfg.make_grid()
    V = PotentialSpec.harmonic(omega, m=m, hbar=hbar)
    psi0 = states.coherent_state(grid, amp, 0.0, m=m, omega=omega, hbar=hbar)
    trace = evolve_trace(psi0, V, e["dt"], e["n_steps"],
                         e.get("store_every", DEFAULT_STORE_EVERY))
    checks = []

    period = 2.0 * np.pi / omega
    rho0 = np.abs(trace[0].psi) ** 2
    rho1 = np.abs(trace[-1].psi) ** 2
    if abs(trace.times[-1] - period) < 1e-9:
        checks.append(_check("density_period_return", float(np.abs(rho1 - rho0).max()),
                             1e-6, "closed-form periodic orbit"))

    seeds = np.asarray(cfg.trajectories.get("seeds",
                                            list(np.linspace(amp - 1.0, amp + 1.0, 9))))
    trajs = integrate_trajectories(trace, seeds, m=m, hbar=hbar)
    worst = 0.0
    for x0, tr in zip(seeds, trajs):
        ref = x0 - amp + amp * np.cos(omega * tr.times)
        worst = max(worst, float(np.abs(tr.positions - ref).max()))
    checks.append(_check("trajectory_vs_classical", worst, 1e-3,
                         "classical oscillation"))
    order0 = np.argsort(seeds)
    n_common = min(tr.positions.size for tr in trajs)
    ordered = all(np.array_equal(np.argsort([tr.positions[j] for tr in trajs]), order0)
                  for j in range(n_common))
    checks.append(_check("trajectory_ordering", ordered, 0.5, "non-crossing flow",
                         comparison="true"))

    _write(outdir / "trajectories.csv", _csv_trajectories("coherent_state", trajs))
    _write(outdir / "density.csv",
           _csv_field(_density_rows(trace, max(1, len(trace) // 6))))
    return checks


def _scenario_two_slit(cfg: ScenarioConfig, outdir: Path):
    p, e = cfg.physics, cfg.evolution
    m, hbar = p.get("m", 1.0), p.get("hbar", 1.0)
    grid = cfg.make_grid()
    V = PotentialSpec.free(m=m, hbar=hbar)
    psi0 = states.two_slit_superposition(grid, p["slit_separation"],
                                     p["slit_width"], k0=p.get("k0", 0.0))
    trace = evolve_trace(psi0, V, e["dt"], e["n_steps"],
                         e.get("store_every", DEFAULT_STORE_EVERY))
    checks = []

    n_seeds = int(cfg.trajectories.get("n_seeds", 100))
    half = n_seeds // 2
    # symmetric seed pairs, placed inside each packet
    c, s = 0.5 * p["slit_separation"], p["slit_width"]
    u = (np.arange(half) + 0.5) / half
    right = c + s * np.sqrt(2.0) * erfinv(2.0 * u - 1.0) * 0.9
    seeds = np.concatenate([np.sort(-right), np.sort(right)])
    trajs = integrate_trajectories(trace, seeds, m=m, hbar=hbar)

    crossed = any(bool((tr.positions * tr.positions[0] <= 0).any()) for tr in trajs)
    checks.append(_check("no_axis_crossing", not crossed, 0.5,
                         "odd-symmetry flow barrier", comparison="true"))
    order0 = np.argsort(seeds)
    n_common = min(tr.positions.size for tr in trajs)
    ordered = all(np.array_equal(np.argsort([tr.positions[j] for tr in trajs]), order0)
                  for j in range(n_common))
    checks.append(_check("trajectory_ordering", ordered, 0.5, "non-crossing flow",
                         comparison="true"))
    rho1 = np.abs(trace[-1].psi) ** 2
    mirror = np.roll(rho1[::-1], 1)  # x -> -x on the periodic lattice
    checks.append(_check("density_symmetry", float(np.abs(rho1 - mirror).max()),
                         1e-9, "mirror symmetry"))

    _write(outdir / "trajectories.csv", _csv_trajectories("two_slit", trajs))
    _write(outdir / "density.csv",
           _csv_field(_density_rows(trace, max(1, len(trace) // 6))))
    return checks


def _scenario_kernel_convergence(cfg: ScenarioConfig, outdir: Path):
    p, k = cfg.physics, cfg.kernel
    m, hbar = p.get("m", 1.0), p.get("hbar", 1.0)
    omega = p.get("omega", 1.0)
    checks = []
    err_rows = []

    # composed free kernel against the closed form
    n_slices = int(k.get("n_slices", 64))
    t_total = float(k.get("t_total", 1.0))
    region = float(k.get("region", 5.0))
    gridf = Grid1D(k.get("free_x_min", -20.0), k.get("free_x_max", 20.0),
                   int(k.get("free_n", 32768)))
    cols = _region_columns(gridf, region, int(k.get("n_columns", 48)))
    V = PotentialSpec.free(m=m, hbar=hbar)
    M = propagators.compose_sliced_columns(
        V, propagators.SliceScheme.from_interval(n_slices, t_total), gridf, cols)
    rows = np.abs(gridf.x) <= region
    G = propagators.free_kernel_G(gridf.x[rows][:, None], gridf.x[cols][None, :],
                                  t_total, 0.0, m, hbar)
    err_free = float((np.abs(M[rows] - G) / np.abs(G)).max())
    checks.append(_check("free_composed_max_rel_error", err_free, 1e-3,
                         "closed-form kernel"))
    err_rows.append(("free", n_slices, err_free))

    # harmonic ladder
    ladder = [int(v) for v in k.get("slice_ladder", [16, 32, 64, 128])]
    region_h = float(k.get("harmonic_region", 2.0))
    gridh = Grid1D(k.get("harmonic_x_min", -10.0), k.get("harmonic_x_max", 10.0),
                   int(k.get("harmonic_n", 16384)))
    colsh = _region_columns(gridh, region_h, int(k.get("n_columns", 48)))
    rowsh = np.abs(gridh.x) <= region_h
    Vh = PotentialSpec.harmonic(omega, m=m, hbar=hbar)
    Gh = propagators.ho_kernel_G(gridh.x[rowsh][:, None], gridh.x[colsh][None, :],
                                 t_total, 0.0, m, omega, hbar)
    ho_errs = []
    for ns in ladder:
        Mh = propagators.compose_sliced_columns(
            Vh, propagators.SliceScheme.from_interval(ns, t_total), gridh, colsh)
        ho_errs.append(float((np.abs(Mh[rowsh] - Gh) / np.abs(Gh)).max()))
        err_rows.append(("harmonic", ns, ho_errs[-1]))
    checks.append(_check("harmonic_composed_max_rel_error", ho_errs[-1], 1e-2,
                         "closed-form kernel"))
    monotone = all(b < a for a, b in zip(ho_errs, ho_errs[1:]))
    checks.append(_check("harmonic_error_monotone_in_slices", monotone, 0.5,
                         "slice-refinement measurement", comparison="true"))

    # oscillator formulas approach the free ones as omega -> 0
    om0 = 1e-6
    xs = np.array([0.7, -1.3, 2.0])
    xs2 = np.array([-0.4, 1.1, -2.2])
    W_free = propagators.free_action_W(xs, xs2, 1.0, 0.0, m)
    W_ho = propagators.ho_action_W(xs, xs2, 1.0, 0.0, m, om0)
    checks.append(_check("ho_action_omega_to_zero",
                         float(np.abs((W_ho - W_free) / W_free).max()), 1e-6,
                         "series limit"))
    G_free = propagators.free_kernel_G(xs, xs2, 1.0, 0.0, m, hbar)
    G_ho = propagators.ho_kernel_G(xs, xs2, 1.0, 0.0, m, om0, hbar)
    checks.append(_check("ho_kernel_omega_to_zero",
                         float(np.abs((G_ho - G_free) / G_free).max()), 1e-6,
                         "series limit"))

    # kernel applied by quadrature against split-step evolution
    gridp = Grid1D(-20.0, 20.0, 1024)
    psi0 = states.gaussian_packet(gridp, sigma0=1.0)
    Gm = propagators.KernelMatrix(
        gridp, 0.0, 1.0,
        propagators.free_kernel_G(gridp.x[:, None], gridp.x[None, :], 1.0, 0.0, m, hbar))
    psi_k = Gm.apply(psi0)
    tr = evolve_trace(psi0, V, 1e-3, 1000)
    checks.append(_check("kernel_vs_solver_packet",
                         float(np.abs(psi_k.psi - tr[-1].psi).max()), 1e-3,
                         "independent propagation route"))

    lines = ["potential,n_slices,max_rel_error"]
    lines += [f"{a},{b},{float(c)!r}" for a, b, c in err_rows]
    _write(outdir / "kernel_errors.csv", "\n".join(lines) + "\n")
    return checks


def _region_columns(grid: Grid1D, region: float, n_cols: int) -> np.ndarray:
    targets = np.linspace(-region, region, n_cols)
    return np.unique(np.searchsorted(grid.x, targets))


def _scenario_nelson_convergence(cfg: ScenarioConfig, outdir: Path):
    p, e, s = cfg.physics, cfg.evolution, cfg.stochastic
    m, hbar = p.get("m", 1.0), p.get("hbar", 1.0)
    sigma0 = p.get("sigma0", 1.0)
    grid = cfg.make_grid()
    V = PotentialSpec.free(m=m, hbar=hbar)
    psi0 = states.gaussian_packet(grid, sigma0=sigma0)
    trace = evolve_trace(psi0, V, e["dt"], e["n_steps"])
    n_paths = int(s["n_paths"])
    seed = int(s["master_seed"])
    bw = float(s.get("bandwidth", 0.3))
    store = int(s.get("store_every", 5))
    threads = cfg.threads
    checks = []

    ens = stochastic.sample_paths(trace, m, hbar, n_paths, seed,
                                  init="from_density", store_every=store,
                                  n_threads=threads)

    # conditional mean velocity against the closed-form local velocity
    t_probe = ens.times[len(ens.times) // 2]
    sig_t = states.free_gaussian_width(t_probe, sigma0, m, hbar)
    n_probe = int(s.get("n_probes", 11))
    uu = np.linspace(0.08, 0.92, n_probe)
    probes = sig_t * np.sqrt(2.0) * erfinv(2.0 * uu - 1.0)
    worst_dev = 0.0
    rows = ["Q,estimate,stderr,reference"]
    for Q in probes:
        est, se = stochastic.conditional_mean_velocity(ens, float(Q), float(t_probe), bw)
        ref = states.free_gaussian_local_momentum(Q, t_probe, sigma0, m=m, hbar=hbar) / m
        worst_dev = max(worst_dev, abs(est - ref) / se)
        rows.append(f"{float(Q)!r},{est!r},{se!r},{float(ref)!r}")
    checks.append(_check("conditional_velocity_max_sigma_dev", worst_dev, 3.0,
                         "closed-form local velocity"))

    # osmotic component via the second-difference estimator
    est_u, se_u = stochastic.conditional_osmotic_velocity(
        ens, float(probes[len(probes) // 2]), float(t_probe), bw)
    tau = hbar * t_probe / (2.0 * m * sigma0 ** 2)
    u_ref = -0.5 * hbar * float(probes[len(probes) // 2]) / (m * sigma0 ** 2 * (1 + tau ** 2))
    checks.append(_check("conditional_osmotic_sigma_dev", abs(est_u - u_ref) / se_u,
                         3.0, "closed-form osmotic velocity"))

    # RMS against the deterministic orbit across the ensemble-size ladder
    ladder = [int(v) for v in s.get("ladder", [])] or None
    seed_pos = [float(v) for v in s.get("seed_positions",
                                        [-0.75, -0.5, -0.25, 0.25, 0.5, 0.75])]
    report = stochastic.mean_path_vs_bohm(ens, trace, seed_pos, m=m, hbar=hbar,
                                          bandwidth=bw, ladder=ladder)
    checks.append(_interval_check("rms_scaling_exponent", report["exponent"],
                                  -0.65, -0.35, "ensemble-size scaling fit"))

    # stationary ground state keeps its law
    omega = p.get("omega", 1.0)
    gridh = Grid1D(grid.x_min / 2, grid.x_max / 2, grid.n // 2)
    Vh = PotentialSpec.harmonic(omega, m=m, hbar=hbar)
    psi_g = states.ho_eigenstate(gridh, 0, m=m, omega=omega, hbar=hbar)
    trace_h = evolve_trace(psi_g, Vh, e["dt"], e["n_steps"])
    ens_h = stochastic.sample_paths(trace_h, m, hbar, n_paths, seed + 1,
                                    init="from_density", store_every=store,
                                    n_threads=threads)
    scale = np.sqrt(hbar / (2.0 * m * omega))
    ks_worst = 0.0
    for it in range(0, len(ens_h.times), max(1, len(ens_h.times) // 5)):
        stat = kstest(ens_h.positions[:, it] / scale, "norm").statistic
        ks_worst = max(ks_worst, float(stat))
    checks.append(_check("stationary_ks_distance", ks_worst, 0.02,
                         "invariant-density law"))

    rows.append(f"# ladder {[(r['n_paths'], r['rms']) for r in report['ladder']]!r}")
    _write(outdir / "ensemble_summary.csv", "\n".join(rows) + "\n")
    return checks


def _scenario_algebra_checks(cfg: ScenarioConfig, outdir: Path):
    checks = []
    s1, s2, s3 = algebra.pauli_basis()
    k1 = algebra.standard_ket(1)
    checks.append(_check("standard_ket_x",
                         float(np.abs(k1 - np.array([1.0, 1.0]) / np.sqrt(2.0)).max()),
                         1e-15, "displayed eigenvector"))
    eps = algebra.idempotent_from_ket(k1)
    checks.append(_check("idempotent_squares",
                         float(np.abs(eps @ eps - eps).max()), 1e-15,
                         "projector identity"))
    checks.append(_check("idempotent_matrix",
                         float(np.abs(eps - 0.5 * (np.eye(2) + s1)).max()), 1e-15,
                         "displayed matrix"))
    checks.append(_check("idempotent_trace", abs(np.trace(eps).real - 1.0), 1e-15,
                         "rank-1 projector"))
    worst_conj = 0.0
    for a in (1, 2, 3):
        for b in (1, 2, 3):
            U = algebra.rotation_between_idempotents(a, b)
            ea = algebra.idempotent_from_ket(algebra.standard_ket(a))
            eb = algebra.idempotent_from_ket(algebra.standard_ket(b))
            worst_conj = max(worst_conj, float(np.abs(U @ ea @ np.conj(U).T - eb).max()))
    checks.append(_check("idempotents_unitarily_equivalent", worst_conj, 1e-12,
                         "explicit eigenbasis rotation"))

    n = int(cfg.grid.get("n", 64))
    L = float(cfg.grid.get("x_max", 10.0) - cfg.grid.get("x_min", -10.0))
    d1 = algebra.heisenberg_commutator_defect(n, L)
    d2 = algebra.heisenberg_commutator_defect(2 * n, L)
    checks.append(_check("commutator_defect", d1, 1e-8, "spectral test battery"))
    floor = 1e-11
    checks.append(_check("commutator_defect_refines",
                         (d2 <= d1) or (d1 < floor and d2 < floor), 0.5,
                         "grid-refinement measurement", comparison="true"))
    _write(outdir / "algebra_summary.csv",
           "check,value\n" + "\n".join(f"{c['name']},{c['value']!r}" for c in checks) + "\n")
    return checks


_RUNNERS = {
    "free_gaussian": _scenario_free_gaussian,
    "coherent_state": _scenario_coherent_state,
    "two_slit": _scenario_two_slit,
    "kernel_convergence": _scenario_kernel_convergence,
    "nelson_convergence": _scenario_nelson_convergence,
    "algebra_checks": _scenario_algebra_checks,
}


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

def run(cfg: ScenarioConfig, outdir) -> RunReport:
    """Execute a validated config; write tables and the JSON report."""
    outdir = Path(outdir)
    t0 = time.monotonic()
    try:
        checks = _RUNNERS[cfg.scenario](cfg, outdir)
        report = RunReport(cfg.scenario, __version__, checks)
    except Exception as exc:  # module error: recorded, nonzero exit
        report = RunReport(cfg.scenario, __version__, [],
                           error=f"{type(exc).__name__}: {exc}")
    report.wall_time_s = time.monotonic() - t0
    _write(outdir / "report.json", report.to_json())
    return report


def main(argv=None) -> int:
    raw_threads = os.environ.get(ENV_THREADS, "1")
    try:
        env_threads = int(raw_threads)
    except ValueError:
        print(f"error: {ENV_THREADS}={raw_threads!r} is not an integer",
              file=sys.stderr)
        return 2

    parser = argparse.ArgumentParser(prog="qpathlab",
                                     description="scenario runner")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--output-dir", default=None)
    p_run.add_argument("--threads", type=int, default=env_threads)
    p_run.add_argument("--seed-override", type=int, default=None)
    p_val = sub.add_parser("validate", help="check a config without running")
    p_val.add_argument("config")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except FileNotFoundError:
        print(f"error: cannot read config {args.config!r}", file=sys.stderr)
        return 2
    except tomllib.TOMLDecodeError as exc:
        print(f"error: malformed config: {exc}", file=sys.stderr)
        return 2

    problems = cfg.validate()
    if args.command == "validate":
        for msg in problems:
            print(msg)
        return 0 if not problems else 2
    if problems:
        for msg in problems:
            print(f"config error: {msg}", file=sys.stderr)
        return 2

    if args.seed_override is not None:
        cfg.stochastic["master_seed"] = args.seed_override
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    cfg.threads = args.threads
    outdir = Path(args.output_dir) if args.output_dir else Path(
        cfg.output.get("directory", "qpathlab-out"))

    report = run(cfg, outdir)
    print(f"wall time: {report.wall_time_s:.2f} s", file=sys.stderr)
    for c in report.checks:
        state = "PASS" if c["passed"] else "FAIL"
        print(f"[{state}] {c['name']}: value={c['value']} tolerance={c['tolerance']}")
    if report.error:
        print(f"error: {report.error}", file=sys.stderr)
        return 1
    return 0 if report.all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
