"""Time-dependent Schrodinger evolution and polar-form diagnostics.

The propagation scheme is symmetric (Strang) operator splitting,

    psi  ->  exp(-i V dt / 2 hbar) * F^-1 exp(-i hbar k^2 dt / 2 m) F
             * exp(-i V dt / 2 hbar) * psi,

unitary to machine precision and second order in dt.  Polar decomposition
produces amplitude R and a continuous phase action S with psi = R exp(iS/hbar);
points where the density falls below a floor are masked because the phase
is undefined there.  Two residual diagnostics check the evolved fields
against the coupled transport equations obtained by splitting the
Schrodinger equation into real and imaginary parts:

    continuity:   d(rho)/dt + d/dx (rho dS/dx / m) = 0
    phase:        dS/dt + (dS/dx)^2 / 2m - (hbar^2/2mR) d2R/dx2 + V = 0
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid1D, RealField, WaveField, spectral_derivative_array

__all__ = [
    "PotentialSpec",
    "PolarField",
    "EvolutionTrace",
    "split_step_evolve",
    "evolve_trace",
    "polar_decompose",
    "quantum_potential",
    "continuity_residual",
    "qhj_residual",
]

DEFAULT_RHO_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialSpec:
    """External potential plus the physical constants m, hbar.

    kinds:
      free                      V = 0
      harmonic                  V = m omega^2 x^2 / 2
      barrier_slits             smooth barrier of given height with two
                                openings of width `slit_width` centered at
                                +/- separation/2 (edge steepness in grid units)
      tabulated                 values supplied per grid point
    """

    kind: str
    m: float = 1.0
    hbar: float = 1.0
    omega: float | None = None
    barrier_height: float | None = None
    barrier_center: float = 0.0
    slit_separation: float | None = None
    slit_width: float | None = None
    edge_steepness: float = 8.0
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.m <= 0 or self.hbar <= 0:
            raise ValueError("m and hbar must be positive")
        if self.kind == "free":
            pass
        elif self.kind == "harmonic":
            if self.omega is None or self.omega <= 0:
                raise ValueError("harmonic potential needs omega > 0")
        elif self.kind == "barrier_slits":
            for name in ("barrier_height", "slit_separation", "slit_width"):
                v = getattr(self, name)
                if v is None or v <= 0:
                    raise ValueError(f"barrier_slits potential needs {name} > 0")
        elif self.kind == "tabulated":
            if self.table is None:
                raise ValueError("tabulated potential needs a value table")
            tab = np.asarray(self.table, dtype=float)
            if not np.all(np.isfinite(tab)):
                raise ValueError("tabulated potential values must be finite")
            tab.flags.writeable = False
            object.__setattr__(self, "table", tab)
        else:
            raise ValueError(f"unknown potential kind {self.kind!r}")

    @classmethod
    def free(cls, m: float = 1.0, hbar: float = 1.0) -> "PotentialSpec":
        return cls("free", m=m, hbar=hbar)

    @classmethod
    def harmonic(cls, omega: float, m: float = 1.0, hbar: float = 1.0) -> "PotentialSpec":
        return cls("harmonic", m=m, hbar=hbar, omega=omega)

    @classmethod
    def barrier_slits(cls, barrier_height: float, slit_separation: float,
                      slit_width: float, barrier_center: float = 0.0,
                      edge_steepness: float = 8.0, m: float = 1.0,
                      hbar: float = 1.0) -> "PotentialSpec":
        return cls("barrier_slits", m=m, hbar=hbar, barrier_height=barrier_height,
                   barrier_center=barrier_center, slit_separation=slit_separation,
                   slit_width=slit_width, edge_steepness=edge_steepness)

    @classmethod
    def tabulated(cls, values, m: float = 1.0, hbar: float = 1.0) -> "PotentialSpec":
        return cls("tabulated", m=m, hbar=hbar, table=np.asarray(values, dtype=float))

    def values(self, grid: Grid1D) -> np.ndarray:
        x = grid.x
        if self.kind == "free":
            return np.zeros(grid.n)
        if self.kind == "harmonic":
            return 0.5 * self.m * self.omega ** 2 * x ** 2
        if self.kind == "tabulated":
            if self.table.shape != (grid.n,):
                raise ValueError("tabulated potential does not match grid size")
            return np.asarray(self.table)
        # barrier with two smooth openings
        s = self.edge_steepness / grid.dx
        wall = _smooth_box(x, self.barrier_center, 0.5 * self.slit_separation
                           + 2.0 * self.slit_width, s)
        open_lo = _smooth_box(x, self.barrier_center - 0.5 * self.slit_separation,
                              0.5 * self.slit_width, s)
        open_hi = _smooth_box(x, self.barrier_center + 0.5 * self.slit_separation,
                              0.5 * self.slit_width, s)
        gaps = np.clip(open_lo + open_hi, 0.0, 1.0)
        return self.barrier_height * wall * (1.0 - gaps)

    def value_at(self, q, grid: Grid1D | None = None):
        """Potential at arbitrary positions (tabulated kind interpolates)."""
        q = np.asarray(q, dtype=float)
        if self.kind == "free":
            return np.zeros_like(q)
        if self.kind == "harmonic":
            return 0.5 * self.m * self.omega ** 2 * q ** 2
        if grid is None:
            raise ValueError(f"{self.kind} potential needs a grid for off-lattice values")
        return np.interp(q, grid.x, self.values(grid))


def _smooth_box(x, center, half_width, steepness):
    lo = np.tanh(steepness * (x - (center - half_width)))
    hi = np.tanh(steepness * ((center + half_width) - x))
    return 0.25 * (1.0 + lo) * (1.0 + hi)


# ---------------------------------------------------------------------------
# evolution
# ---------------------------------------------------------------------------

def split_step_evolve(psi: WaveField, V: PotentialSpec, dt: float) -> WaveField:
    """One Strang-split step of size dt."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    arr = _split_step_run(psi.psi, psi.grid, V, dt, 1)
    return WaveField(psi.grid, arr, psi.t + dt)


def _split_step_run(arr: np.ndarray, grid: Grid1D, V: PotentialSpec,
                    dt: float, n_steps: int, collect=None) -> np.ndarray:
    """Advance n_steps with precomputed phase factors, reporting each step."""
    v = V.values(grid)
    half_v = np.exp(-0.5j * v * dt / V.hbar)
    kin = np.exp(-0.5j * V.hbar * grid.k ** 2 * dt / V.m)
    for i in range(n_steps):
        arr = half_v * np.fft.ifft(kin * np.fft.fft(half_v * arr))
        if collect is not None:
            collect(i, arr)
    return arr


@dataclass(frozen=True)
class EvolutionTrace:
    """Time-ordered snapshots with uniform spacing dt (the stored spacing,
    i.e. solver step times store_every)."""

    snapshots: tuple
    dt: float

    def __post_init__(self):
        if len(self.snapshots) < 1:
            raise ValueError("trace needs at least one snapshot")
        ts = np.array([s.t for s in self.snapshots])
        if len(ts) > 1:
            steps = np.diff(ts)
            if np.any(steps <= 0):
                raise ValueError("snapshot times must be strictly increasing")
            if not np.allclose(steps, self.dt, rtol=1e-9, atol=1e-12):
                raise ValueError("snapshot spacing does not match dt")

    def __len__(self) -> int:
        return len(self.snapshots)

    def __getitem__(self, i) -> WaveField:
        return self.snapshots[i]

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    @property
    def grid(self) -> Grid1D:
        return self.snapshots[0].grid


def evolve_trace(psi0: WaveField, V: PotentialSpec, dt: float, n_steps: int,
                 store_every: int = 1) -> EvolutionTrace:
    """Repeated split_step_evolve, storing psi0 and every store_every-th step.

    n_steps must be a multiple of store_every so the trace ends on a stored
    snapshot and the spacing stays uniform.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    if store_every < 1:
        raise ValueError("store_every must be >= 1")
    if n_steps == 0:
        return EvolutionTrace((psi0,), dt * store_every)
    if n_steps % store_every:
        raise ValueError("n_steps must be a multiple of store_every")
    grid, t0 = psi0.grid, psi0.t
    snaps = [psi0]

    def keep(i, arr):
        if (i + 1) % store_every == 0:
            snaps.append(WaveField(grid, arr.copy(), t0 + (i + 1) * dt))

    _split_step_run(psi0.psi, grid, V, dt, n_steps, collect=keep)
    return EvolutionTrace(tuple(snaps), dt * store_every)


# ---------------------------------------------------------------------------
# polar decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolarField:
    """Amplitude R >= 0 and continuous phase action S with psi = R exp(iS/hbar).

    node_mask[j] is True where the density is above the floor and S is
    defined.  S is unwrapped along each contiguous valid run by folding
    successive phase differences into (-pi, pi]; the branch is anchored at
    the global maximum of R, where S keeps its principal value (so a real
    positive field gets S = 0 there exactly).
    """

    R: RealField
    S: RealField
    node_mask: np.ndarray
    hbar: float = 1.0

    @property
    def grid(self) -> Grid1D:
        return self.R.grid

    def reconstruct(self) -> np.ndarray:
        """R exp(iS/hbar); meaningful at unmasked points."""
        return self.R.values * np.exp(1j * self.S.values / self.hbar)


def _folded_phase_diffs(psi_arr: np.ndarray) -> np.ndarray:
    """Cyclic nearest-neighbor phase increments folded into (-pi, pi]."""
    ph = np.angle(psi_arr)
    d = np.diff(ph, append=ph[0])
    d = np.mod(d + np.pi, 2.0 * np.pi) - np.pi
    # np.mod maps the branch point to -pi; fold it to +pi for (-pi, pi]
    d[d == -np.pi] = np.pi
    return d


def valid_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Contiguous index runs [a, b] (inclusive) of True entries, cyclic wrap
    merged, sorted by start index."""
    n = mask.size
    if mask.all():
        return [(0, n - 1)]
    if not mask.any():
        return []
    idx = np.flatnonzero(mask)
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = [idx[0]] + [idx[b + 1] for b in breaks]
    ends = [idx[b] for b in breaks] + [idx[-1]]
    runs = list(zip(starts, ends))
    # merge a run that wraps through the seam
    if len(runs) > 1 and runs[0][0] == 0 and runs[-1][1] == n - 1:
        a, _ = runs[-1]
        _, b = runs[0]
        runs = [(a, b)] + runs[1:-1]
    return runs


def _unwrap_run(psi_arr, d, a, b, n):
    """Unwrapped phase on the cyclic run a..b, anchored later."""
    length = (b - a) % n + 1
    idx = (a + np.arange(length)) % n
    ph = np.empty(length)
    ph[0] = np.angle(psi_arr[a])
    if length > 1:
        ph[1:] = ph[0] + np.cumsum(d[idx[:-1]])
    return idx, ph


def polar_decompose(psi: WaveField, rho_floor: float = DEFAULT_RHO_FLOOR,
                    hbar: float = 1.0) -> PolarField:
    """Split psi into amplitude R and continuous phase action S = hbar * phase.

    Points with |psi|^2 < rho_floor are masked and excluded from the
    unwrapping runs.  The branch of S is fixed at the global maximum of R:
    S there equals hbar times the principal argument of psi (exactly zero
    for a field that is real and positive at its maximum).
    """
    if rho_floor <= 0:
        raise ValueError("rho_floor must be positive")
    arr = psi.psi
    grid = psi.grid
    R = np.abs(arr)
    rho = R ** 2
    mask = rho >= rho_floor
    if not mask.any():
        raise ValueError("degenerate field: density below rho_floor everywhere")

    d = _folded_phase_diffs(arr)
    S = np.zeros(grid.n)
    anchor = int(np.argmax(R))
    for a, b in valid_runs(mask):
        idx, ph = _unwrap_run(arr, d, a, b, grid.n)
        # keep the principal value at the anchor (or at the run start otherwise)
        where = np.flatnonzero(idx == anchor)
        if where.size:
            j = where[0]
            ph -= 2.0 * np.pi * np.round((ph[j] - np.angle(arr[anchor])) / (2.0 * np.pi))
        S[idx] = ph

    return PolarField(
        R=RealField(grid, R, psi.t),
        S=RealField(grid, hbar * S, psi.t, mask=mask),
        node_mask=mask,
        hbar=hbar,
    )


# ---------------------------------------------------------------------------
# quantum potential and residuals
# ---------------------------------------------------------------------------

def _quantum_potential_array(R: np.ndarray, mask: np.ndarray, dx: float,
                             m: float, hbar: float) -> np.ndarray:
    d2R = spectral_derivative_array(R, dx, order=2)
    Q = np.zeros_like(R)
    Q[mask] = -(hbar ** 2 / (2.0 * m)) * d2R[mask] / R[mask]
    return Q


def quantum_potential(pf: PolarField, V: PotentialSpec) -> RealField:
    """-(hbar^2 / 2m) R''/R at unmasked points, R'' spectral."""
    Q = _quantum_potential_array(pf.R.values, pf.node_mask, pf.grid.dx, V.m, V.hbar)
    return RealField(pf.grid, Q, pf.R.t, mask=pf.node_mask)


def _momentum_density(arr: np.ndarray, dx: float, hbar: float) -> np.ndarray:
    """rho * dS/dx = hbar Im(psi* dpsi/dx); defined everywhere, zero at nodes."""
    return hbar * np.imag(np.conj(arr) * spectral_derivative_array(arr, dx, 1))


def continuity_residual(trace: EvolutionTrace, m: float, hbar: float) -> float:
    """max over interior snapshots of || d(rho)/dt + d/dx(rho dS/dx / m) ||_inf.

    Time derivative by centered differences on the stored spacing; the flux
    uses the gauge-free current hbar Im(psi* psi') / m, so no unwrapping
    enters.
    """
    if len(trace) < 3:
        raise ValueError("continuity residual needs at least 3 snapshots")
    dx, dt = trace.grid.dx, trace.dt
    rho = [np.abs(s.psi) ** 2 for s in trace.snapshots]
    worst = 0.0
    for k in range(1, len(trace) - 1):
        drho_dt = (rho[k + 1] - rho[k - 1]) / (2.0 * dt)
        flux = spectral_derivative_array(
            _momentum_density(trace[k].psi, dx, hbar) / m, dx, 1)
        worst = max(worst, float(np.abs(drho_dt + flux).max()))
    return worst


def _align_phase_series(S_list, masks, rhos, hbar: float):
    """Shift each S by a multiple of 2 pi hbar so the series is continuous in
    time, matching branches at the highest shared-density point of each pair."""
    aligned = [S_list[0].copy()]
    for k in range(1, len(S_list)):
        both = masks[k - 1] & masks[k]
        if not both.any():
            raise ValueError("no shared valid points between adjacent snapshots")
        joint = np.where(both, np.minimum(rhos[k - 1], rhos[k]), -1.0)
        ref = int(np.argmax(joint))
        shift = 2.0 * np.pi * hbar * np.round(
            (aligned[k - 1][ref] - S_list[k][ref]) / (2.0 * np.pi * hbar))
        aligned.append(S_list[k] + shift)
    return aligned


RESIDUAL_RHO_FLOOR = 1e-6


def qhj_residual(trace: EvolutionTrace, V: PotentialSpec, m: float,
                 hbar: float, rho_floor: float = RESIDUAL_RHO_FLOOR) -> float:
    """max over interior snapshots of the phase-transport residual

        dS/dt + (dS/dx)^2 / 2m - (hbar^2/2mR) R'' + V

    evaluated at points that are unmasked in the three snapshots entering
    each centered time difference.

    The default evaluation floor is higher than the polar-decomposition
    default: the R''/R term amplifies double-precision FFT roundoff by 1/R,
    so points with rho ~ 1e-12 carry O(1e-6) numerical noise that would
    swamp the discretization error this residual is meant to measure.
    """
    if len(trace) < 3:
        raise ValueError("phase-transport residual needs at least 3 snapshots")
    dx, dt = trace.grid.dx, trace.dt
    v_pot = V.values(trace.grid)

    polars = [polar_decompose(s, rho_floor, hbar=hbar) for s in trace.snapshots]
    masks = [p.node_mask for p in polars]
    rhos = [np.abs(s.psi) ** 2 for s in trace.snapshots]
    S_aligned = _align_phase_series([p.S.values for p in polars], masks, rhos, hbar)

    worst = 0.0
    for k in range(1, len(trace) - 1):
        ok = masks[k - 1] & masks[k] & masks[k + 1]
        if not ok.any():
            continue
        dS_dt = (S_aligned[k + 1] - S_aligned[k - 1]) / (2.0 * dt)
        arr = trace[k].psi
        Sx = np.zeros_like(rhos[k])
        Sx[ok] = _momentum_density(arr, dx, hbar)[ok] / rhos[k][ok]
        Q = _quantum_potential_array(polars[k].R.values, masks[k], dx, m, hbar)
        res = dS_dt + Sx ** 2 / (2.0 * m) + Q + v_pot
        worst = max(worst, float(np.abs(res[ok]).max()))
    return worst
