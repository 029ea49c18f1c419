"""Local momentum fields and the deterministic orbits they generate.

Three independent routes to the same local momentum field p(x):

* phase_gradient: differentiate the unwrapped phase action S from the polar
  decomposition.  On fully defined phases this is the spectral derivative
  (with the integer winding handled separately so plane waves come out
  exact).  When low-density points are masked, the FFT would smear their
  undefined phases over the whole grid, so each valid run is differentiated
  with a high-order centered stencil instead and the few points nearest a
  run edge are dropped from the output mask.
* weak_value: Re[(-i hbar dpsi/dx) / psi], evaluated directly on psi.
* moyal_mean: the diagonal of the antisymmetrized two-point derivative,
  (hbar/2i)(psi* dpsi - psi dpsi*) / rho.

The density-weighted momentum rho * p equals the field momentum density
carried by the wave field's stress tensor, and its integral is the global
(measured) momentum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._interp import RunInterpolator
from .grid import RealField, WaveField, integrate, spectral_derivative_array
from .solver import (DEFAULT_RHO_FLOOR, EvolutionTrace, _folded_phase_diffs,
                     polar_decompose, valid_runs)

__all__ = [
    "Trajectory",
    "local_momentum",
    "moyal_mean_momentum",
    "field_momentum_density",
    "global_momentum",
    "spectral_momentum_expectation",
    "integrate_trajectories",
]

_STENCIL = np.array([3.0, -32.0, 168.0, -672.0, 0.0, 672.0, -168.0, 32.0, -3.0]) / 840.0
_HALF = 4  # stencil half width


# ---------------------------------------------------------------------------
# momentum routes
# ---------------------------------------------------------------------------

def _phase_gradient(psi: WaveField, hbar: float, rho_floor: float) -> RealField:
    pf = polar_decompose(psi, rho_floor, hbar=hbar)
    grid = psi.grid
    S = pf.S.values
    mask = pf.node_mask
    if mask.all():
        # split off the integer phase winding so the remainder is periodic
        w = np.round(_folded_phase_diffs(psi.psi).sum() / (2.0 * np.pi))
        trend = 2.0 * np.pi * hbar * w / grid.length
        S_per = S - trend * (grid.x - grid.x[0])
        p = spectral_derivative_array(S_per, grid.dx, 1) + trend
        return RealField(grid, p, psi.t, mask=mask)
    # masked field: high-order local differencing inside each run
    p = np.zeros(grid.n)
    out_mask = np.zeros(grid.n, dtype=bool)
    for a, b in valid_runs(mask):
        length = (b - a) % grid.n + 1
        if length < 2 * _HALF + 1:
            continue  # run too short to differentiate credibly
        idx = (a + np.arange(length)) % grid.n
        run_S = S[idx]
        interior = np.arange(_HALF, length - _HALF)
        win = interior[:, None] + np.arange(-_HALF, _HALF + 1)[None, :]
        p[idx[interior]] = run_S[win] @ _STENCIL / grid.dx
        out_mask[idx[interior]] = True
    if not out_mask.any():
        raise ValueError("no valid run is long enough for the phase-gradient route")
    return RealField(grid, p, psi.t, mask=out_mask)


def _weak_value(psi: WaveField, hbar: float, rho_floor: float) -> RealField:
    grid = psi.grid
    rho = np.abs(psi.psi) ** 2
    mask = rho >= rho_floor
    if not mask.any():
        raise ValueError("degenerate field: density below rho_floor everywhere")
    dpsi = spectral_derivative_array(psi.psi, grid.dx, 1)
    p = np.zeros(grid.n)
    p[mask] = np.real(-1j * hbar * dpsi[mask] / psi.psi[mask])
    return RealField(grid, p, psi.t, mask=mask)


def local_momentum(psi: WaveField, method: str = "weak_value",
                   hbar: float = 1.0,
                   rho_floor: float = DEFAULT_RHO_FLOOR) -> RealField:
    """Local momentum field by the chosen route ('phase_gradient' or 'weak_value')."""
    if method == "phase_gradient":
        return _phase_gradient(psi, hbar, rho_floor)
    if method == "weak_value":
        return _weak_value(psi, hbar, rho_floor)
    raise ValueError(f"unknown method {method!r}")


def moyal_mean_momentum(psi: WaveField, hbar: float = 1.0,
                        rho_floor: float = DEFAULT_RHO_FLOOR) -> RealField:
    """Mean momentum from the two-point derivative form, evaluated on the
    diagonal: (hbar/2i) (psi* psi' - psi psi*') / rho."""
    grid = psi.grid
    rho = np.abs(psi.psi) ** 2
    mask = rho >= rho_floor
    if not mask.any():
        raise ValueError("degenerate field: density below rho_floor everywhere")
    dpsi = spectral_derivative_array(psi.psi, grid.dx, 1)
    dpsi_c = spectral_derivative_array(np.conj(psi.psi), grid.dx, 1)
    two_point = (np.conj(psi.psi) * dpsi - psi.psi * dpsi_c) / 2j
    p = np.zeros(grid.n)
    p[mask] = hbar * np.real(two_point[mask]) / rho[mask]
    return RealField(grid, p, psi.t, mask=mask)


def field_momentum_density(psi: WaveField, hbar: float = 1.0) -> RealField:
    """Momentum density (i hbar / 2)(psi dpsi*/dx - psi* dpsi/dx) = rho dS/dx.

    Well defined on the whole grid; it vanishes at nodes.
    """
    grid = psi.grid
    dpsi = spectral_derivative_array(psi.psi, grid.dx, 1)
    dpsi_c = spectral_derivative_array(np.conj(psi.psi), grid.dx, 1)
    t0j = 0.5j * hbar * (psi.psi * dpsi_c - np.conj(psi.psi) * dpsi)
    return RealField(grid, np.real(t0j), psi.t)


def global_momentum(psi: WaveField, hbar: float = 1.0) -> float:
    """Average momentum: integral of rho(x) p(x) dx over all space."""
    return integrate(field_momentum_density(psi, hbar))


def spectral_momentum_expectation(psi: WaveField, hbar: float = 1.0) -> float:
    """<P> evaluated in the wavenumber domain (independent cross-check)."""
    grid = psi.grid
    psik = np.fft.fft(psi.psi)
    weights = np.abs(psik) ** 2
    return float(hbar * np.sum(grid.k * weights) / np.sum(weights)
                 * psi.norm_squared())


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """Deterministic orbit of the local velocity field from one seed.

    status is 'completed', or names the stop reason ('masked_region',
    'edge_guard'); times/positions cover the integrated portion only.
    """

    x0: float
    times: np.ndarray
    positions: np.ndarray
    dt: float
    status: str = "completed"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.positions, dtype=float)
        if t.shape != x.shape:
            raise ValueError("times and positions must have equal length")
        if t.size and np.any(np.diff(t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if x.size and not np.all(np.isfinite(x)):
            raise ValueError("trajectory positions must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", x)


def _velocity_interpolators(trace: EvolutionTrace, m: float, hbar: float,
                            rho_floor: float):
    grid = trace.grid
    interps = []
    for snap in trace.snapshots:
        rho = np.abs(snap.psi) ** 2
        mask = rho >= rho_floor
        dpsi = spectral_derivative_array(snap.psi, grid.dx, 1)
        v = np.zeros(grid.n)
        v[mask] = hbar * np.imag(np.conj(snap.psi[mask]) * dpsi[mask]) / (m * rho[mask])
        interps.append(RunInterpolator(grid.x, v, mask))
    return interps


def integrate_trajectories(trace: EvolutionTrace, seeds, m: float = 1.0,
                           hbar: float = 1.0,
                           rho_floor: float = DEFAULT_RHO_FLOOR,
                           edge_guard: float | None = None) -> list[Trajectory]:
    """Integrate dx/dt = p(x, t)/m for each seed with the classical
    fourth-order scheme, cubic interpolation in x and linear blending
    between snapshots.  A trajectory stops early (with a status diagnostic)
    if it reaches a masked region or the domain edge guard band.
    """
    if len(trace) < 2:
        raise ValueError("trajectory integration needs at least two snapshots")
    grid = trace.grid
    guard = 4.0 * grid.dx if edge_guard is None else edge_guard
    lo, hi = grid.x_min + guard, grid.x_max - grid.dx - guard
    seeds = np.asarray(seeds, dtype=float)
    interps = _velocity_interpolators(trace, m, hbar, rho_floor)
    times = trace.times
    dt = trace.dt

    # seed validity: must start inside a valid run
    _, inside0 = interps[0](seeds)
    if not inside0.all():
        bad = seeds[~inside0]
        raise ValueError(f"seeds at masked points: {bad.tolist()}")

    n_steps = len(trace) - 1
    pos = np.empty((n_steps + 1, seeds.size))
    pos[0] = seeds
    alive = np.ones(seeds.size, dtype=bool)
    stopped_at = np.full(seeds.size, n_steps, dtype=int)
    status = np.array(["completed"] * seeds.size, dtype=object)

    for k in range(n_steps):
        f_lo, f_hi = interps[k], interps[k + 1]

        def vel(q, theta):
            a, in_a = f_lo(q)
            b, in_b = f_hi(q)
            return (1.0 - theta) * a + theta * b, in_a & in_b

        q = pos[k].copy()
        act = alive.copy()
        k1, ok1 = vel(q[act], 0.0)
        k2, ok2 = vel(q[act] + 0.5 * dt * k1, 0.5)
        k3, ok3 = vel(q[act] + 0.5 * dt * k2, 0.5)
        k4, ok4 = vel(q[act] + dt * k3, 1.0)
        step = q[act] + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ok = ok1 & ok2 & ok3 & ok4

        new = q.copy()
        new[act] = step
        in_domain = (new >= lo) & (new <= hi)
        masked_now = act.copy()
        masked_now[act] = ~ok
        edge_now = act & ~in_domain & ~masked_now

        newly_stopped = masked_now | edge_now
        status[masked_now] = "masked_region"
        status[edge_now] = "edge_guard"
        stopped_at[newly_stopped & (stopped_at == n_steps)] = k
        alive = alive & ~newly_stopped
        pos[k + 1] = np.where(alive, new, pos[k])

    out = []
    for j, x0 in enumerate(seeds):
        last = stopped_at[j]
        out.append(Trajectory(float(x0), times[: last + 1].copy(),
                              pos[: last + 1, j].copy(), dt, str(status[j])))
    return out
