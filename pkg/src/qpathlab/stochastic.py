"""Stochastic path process underneath the deterministic orbits.

The wave field fixes two velocity fields per snapshot: the current velocity
v = (dS/dx)/m and the osmotic velocity u = (hbar/2m) d(ln rho)/dx.  The
concrete process realized here is the diffusion

    dX = (v + u)(X, t) dt + sqrt(hbar/m) dW,

whose law reproduces rho(x, t) and whose conditional symmetric velocity
recovers v.  Sampling is forward Euler-Maruyama with the step equal to the
trace spacing; every path owns a counter-based generator keyed by
(master_seed, path index), so ensembles are bit-reproducible and independent
of how work is scheduled across threads.

The estimators answer the central question the package exists to test: does
the deterministic orbit through a point equal the conditional average of
stochastic paths through that point?  `conditional_mean_velocity` estimates
v(Q, t) from the symmetric difference of in-window paths;
`mean_path_vs_bohm` integrates that estimate along the flow and reports the
RMS gap to the deterministic orbit, with its scaling in ensemble size.

The conditional-velocity identity holds when paths are distributed per the
quantum density (init='from_density').  A delta-released bundle relaxes
toward the density but conditions on the wrong law meanwhile, biasing the
symmetric difference by the osmotic term; see the module tests.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._interp import RunInterpolator
from .bohm import integrate_trajectories
from .grid import RealField, spectral_derivative_array
from .solver import DEFAULT_RHO_FLOOR, EvolutionTrace

__all__ = [
    "DriftFields",
    "PathEnsemble",
    "drift_fields",
    "sample_paths",
    "conditional_mean_velocity",
    "conditional_osmotic_velocity",
    "mean_path_vs_bohm",
]


@dataclass(frozen=True)
class DriftFields:
    """Current velocity v and osmotic velocity u for one snapshot.

    Forward and backward drifts are v + u and v - u by construction.
    """

    v: RealField
    u: RealField

    @property
    def forward(self) -> np.ndarray:
        return self.v.values + self.u.values

    @property
    def backward(self) -> np.ndarray:
        return self.v.values - self.u.values


def drift_fields(trace: EvolutionTrace, m: float = 1.0, hbar: float = 1.0,
                 rho_floor: float = DEFAULT_RHO_FLOOR) -> list[DriftFields]:
    """Per-snapshot v and u, computed spectrally at unmasked points."""
    out = []
    grid = trace.grid
    for snap in trace.snapshots:
        rho = np.abs(snap.psi) ** 2
        mask = rho >= rho_floor
        if not mask.any():
            raise ValueError(f"degenerate snapshot at t={snap.t}")
        dpsi = spectral_derivative_array(snap.psi, grid.dx, 1)
        drho = spectral_derivative_array(rho, grid.dx, 1)
        v = np.zeros(grid.n)
        u = np.zeros(grid.n)
        v[mask] = hbar * np.imag(np.conj(snap.psi[mask]) * dpsi[mask]) / (m * rho[mask])
        u[mask] = 0.5 * hbar * drho[mask] / (m * rho[mask])
        out.append(DriftFields(
            v=RealField(grid, v, snap.t, mask=mask),
            u=RealField(grid, u, snap.t, mask=mask),
        ))
    return out


@dataclass(frozen=True)
class PathEnsemble:
    """Bundle of sampled paths on a shared time grid.

    positions has shape (n_paths, len(times)); dt is the stored spacing.
    Identical (master_seed, parameters) reproduce the ensemble bit for bit.
    """

    times: np.ndarray
    positions: np.ndarray
    dt: float
    master_seed: int
    init: str

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        p = np.asarray(self.positions, dtype=float)
        if p.ndim != 2 or p.shape[1] != t.size:
            raise ValueError("positions must be (n_paths, n_times)")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", p)

    @property
    def n_paths(self) -> int:
        return self.positions.shape[0]

    def head(self, n: int) -> "PathEnsemble":
        """First-n-paths sub-ensemble (paths are independent, so any prefix
        is itself a valid ensemble)."""
        if not 1 <= n <= self.n_paths:
            raise ValueError(f"cannot take {n} of {self.n_paths} paths")
        return PathEnsemble(self.times, self.positions[:n], self.dt,
                            self.master_seed, self.init)


def _path_rng(master_seed: int, index: int) -> np.random.Generator:
    key = np.array([master_seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _sample_block(lo, hi, master_seed, init, x0, inv_cdf, forward, times_sim,
                  dt, noise_scale, store_idx, out):
    n_steps = times_sim.size - 1
    block = hi - lo
    noise = np.empty((block, n_steps))
    start = np.empty(block)
    for j in range(block):
        rng = _path_rng(master_seed, lo + j)
        urand = rng.random()  # consumed even for delta init, keeps streams aligned
        start[j] = x0 if init == "delta" else inv_cdf(urand)
        noise[j] = rng.standard_normal(n_steps) if n_steps else 0.0
    x = start
    col = 0
    if store_idx[0] == 0:
        out[lo:hi, 0] = x
        col = 1
    for k in range(n_steps):
        b, _ = forward[k](x)
        x = x + b * dt + noise_scale * noise[:, k]
        if col < store_idx.size and store_idx[col] == k + 1:
            out[lo:hi, col] = x
            col += 1


def sample_paths(trace: EvolutionTrace, m: float = 1.0, hbar: float = 1.0,
                 n_paths: int = 1000, master_seed: int = 0,
                 init: str | tuple = "from_density",
                 store_every: int = 1, n_threads: int = 1,
                 rho_floor: float = DEFAULT_RHO_FLOOR) -> PathEnsemble:
    """Sample n_paths forward diffusions along the trace.

    init is either 'from_density' (draw starting points from the first
    snapshot's density by inverse CDF) or ('delta', x0).  The integration
    step equals the trace spacing; positions are stored every store_every
    steps.  Path starting points must lie where the drift is defined.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if store_every < 1:
        raise ValueError("store_every must be >= 1")
    grid = trace.grid
    drifts = drift_fields(trace, m, hbar, rho_floor)
    forward = [RunInterpolator(grid.x, d.forward, d.v.valid) for d in drifts[:-1]]

    if isinstance(init, tuple):
        kind, x0 = init
        if kind != "delta":
            raise ValueError(f"unknown init {init!r}")
        _, inside = forward[0]([float(x0)]) if forward else (None, np.array([True]))
        if len(trace) > 1 and not inside.all():
            raise ValueError(f"delta init at masked point x0={x0}")
        init_name, x0v, inv_cdf = "delta", float(x0), None
    elif init == "from_density":
        # piecewise-uniform inverse CDF over cells centered on the grid points
        rho0 = np.abs(trace[0].psi) ** 2
        cdf = np.concatenate(([0.0], np.cumsum(rho0) * grid.dx))
        cdf /= cdf[-1]
        edges = grid.x_min + grid.dx * (np.arange(grid.n + 1) - 0.5)

        def inv_cdf(u):
            return float(np.interp(u, cdf, edges))

        init_name, x0v = "from_density", 0.0
    else:
        raise ValueError(f"unknown init {init!r}")

    times_sim = trace.times
    n_steps = times_sim.size - 1
    if n_steps % store_every:
        raise ValueError("trace length minus one must be a multiple of store_every")
    store_idx = np.arange(0, n_steps + 1, store_every)
    out = np.empty((n_paths, store_idx.size))
    noise_scale = math.sqrt(hbar / m) * math.sqrt(trace.dt) if n_steps else 0.0

    block = max(1, min(n_paths, int(8.0e6 // max(n_steps, 1)) or 1))
    ranges = [(lo, min(lo + block, n_paths)) for lo in range(0, n_paths, block)]

    def work(r):
        _sample_block(r[0], r[1], master_seed, init_name, x0v, inv_cdf, forward,
                      times_sim, trace.dt, noise_scale, store_idx, out)

    if n_threads > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            list(pool.map(work, ranges))
    else:
        for r in ranges:
            work(r)

    return PathEnsemble(times_sim[store_idx], out, trace.dt * store_every,
                        master_seed, init_name)


# ---------------------------------------------------------------------------
# conditional estimators
# ---------------------------------------------------------------------------

def _window_index(ens: PathEnsemble, t: float) -> int:
    it = int(np.argmin(np.abs(ens.times - t)))
    if abs(ens.times[it] - t) > 1e-9 * max(1.0, abs(t)) + 1e-12:
        raise ValueError(f"t={t} is not a stored ensemble time")
    if not 1 <= it <= ens.times.size - 2:
        raise ValueError(f"t={t} is not an interior ensemble time")
    return it


def _window_paths(ens: PathEnsemble, Q: float, it: int, bandwidth: float):
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    sel = np.abs(ens.positions[:, it] - Q) < bandwidth
    count = int(sel.sum())
    if count < 100:
        raise ValueError(
            f"only {count} paths inside |X - {Q:g}| < {bandwidth:g} at "
            f"t={ens.times[it]:g}; need at least 100")
    return sel, count


def conditional_mean_velocity(ens: PathEnsemble, Q: float, t: float,
                              bandwidth: float) -> tuple[float, float]:
    """Mean symmetric velocity of paths passing near Q at time t.

    Returns (estimate, standard_error); the estimate converges to the local
    current velocity v(Q, t) for density-distributed ensembles.
    """
    it = _window_index(ens, t)
    sel, count = _window_paths(ens, Q, it, bandwidth)
    w = (ens.positions[sel, it + 1] - ens.positions[sel, it - 1]) / (2.0 * ens.dt)
    return float(w.mean()), float(w.std(ddof=1) / math.sqrt(count))


def conditional_osmotic_velocity(ens: PathEnsemble, Q: float, t: float,
                                 bandwidth: float) -> tuple[float, float]:
    """Half-difference of forward and backward increments, estimating u(Q, t)."""
    it = _window_index(ens, t)
    sel, count = _window_paths(ens, Q, it, bandwidth)
    w = (ens.positions[sel, it + 1] - 2.0 * ens.positions[sel, it]
         + ens.positions[sel, it - 1]) / (2.0 * ens.dt)
    return float(w.mean()), float(w.std(ddof=1) / math.sqrt(count))


# ---------------------------------------------------------------------------
# deterministic orbit vs conditional path average
# ---------------------------------------------------------------------------

def _reconstruct_mean_path(ens: PathEnsemble, x0: float, bandwidth: float) -> np.ndarray:
    """Integrate the conditional mean velocity along the flow from x0.

    Heun steps (predictor-corrector) keep the time-registration error of the
    reconstruction at second order in the stored step, below the Monte Carlo
    noise of the velocity estimates themselves.
    """
    times = ens.times
    dt = ens.dt
    last = times.size - 1
    xhat = np.empty(times.size)
    xhat[0] = x0
    # the first step has no backward increment; use the estimate at t_1
    v0, _ = conditional_mean_velocity(ens, x0, times[1], bandwidth)
    xhat[1] = x0 + dt * v0
    for k in range(1, last):
        v, _ = conditional_mean_velocity(ens, float(xhat[k]), times[k], bandwidth)
        pred = xhat[k] + dt * v
        if k + 1 < last:
            v2, _ = conditional_mean_velocity(ens, float(pred), times[k + 1], bandwidth)
            xhat[k + 1] = xhat[k] + 0.5 * dt * (v + v2)
        else:
            xhat[k + 1] = pred
    return xhat


def mean_path_vs_bohm(ens: PathEnsemble, trace: EvolutionTrace, seeds,
                      m: float = 1.0, hbar: float = 1.0,
                      bandwidth: float = 0.3, ladder=None) -> dict:
    """Compare deterministic orbits against conditional-mean reconstructions.

    For each seed, the deterministic orbit is integrated from the trace and
    the stochastic reconstruction integrates conditional_mean_velocity along
    its own flow.  RMS discrepancies are reported per ladder rung (prefixes
    of the ensemble, e.g. 10^3 ... n_paths) together with the fitted
    log-log scaling exponent of RMS against ensemble size.
    """
    seeds = np.asarray(seeds, dtype=float)
    if ladder is None:
        ladder = []
        n = 1000
        while n < ens.n_paths:
            ladder.append(n)
            n *= 10
        ladder.append(ens.n_paths)
    ladder = sorted(set(int(n) for n in ladder))
    if ladder[-1] > ens.n_paths:
        raise ValueError("ladder exceeds ensemble size")

    bohm_traj = integrate_trajectories(trace, seeds, m=m, hbar=hbar)
    stride = int(round(ens.dt / trace.dt))
    idx = np.arange(ens.times.size) * stride

    rows = []
    for n in ladder:
        sub = ens.head(n)
        rms_all = []
        for x0, traj in zip(seeds, bohm_traj):
            if traj.times.size <= idx[-1]:
                raise ValueError(f"deterministic orbit from {x0} stopped early")
            ref = traj.positions[idx]
            xhat = _reconstruct_mean_path(sub, float(x0), bandwidth)
            rms_all.append(float(np.sqrt(np.mean((xhat - ref) ** 2))))
        rows.append({"n_paths": n, "rms": float(np.mean(rms_all)),
                     "rms_per_seed": rms_all})

    logn = np.log([r["n_paths"] for r in rows])
    logr = np.log([r["rms"] for r in rows])
    exponent = float(np.polyfit(logn, logr, 1)[0]) if len(rows) > 1 else float("nan")
    return {"ladder": rows, "exponent": exponent, "bandwidth": bandwidth,
            "seeds": seeds.tolist()}
