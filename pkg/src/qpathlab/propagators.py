"""Closed-form generating functions and kernels, and their time-sliced composition.

For the free particle and the harmonic oscillator the classical generating
function W(x', x; t', t) and the quantum kernel G ~ exp(iW/hbar) are known in
closed form; both are provided with the standard 1D normalization so kernels
compose under the semigroup rule.  `compose_sliced` realizes the chain of
infinitesimal transition amplitudes: one short-time kernel per slice,

    K_eps(x', x) = (m / 2 pi i hbar eps)^(1/2)
                   * exp(i [ m (x'-x)^2 / 2 eps  -  eps V((x+x')/2) ] / hbar),

chained by grid quadrature.  Composed kernels carry a rapidly oscillating
integrand with no decay, so quadrature accuracy is limited by the domain
padding beyond the region of interest; `KernelMatrix.unitarity_defect`
reports rather than assumes fidelity.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .grid import Grid1D, WaveField
from .solver import PotentialSpec

__all__ = [
    "CausticError",
    "SliceScheme",
    "KernelMatrix",
    "short_time_action",
    "free_action_W",
    "free_kernel_G",
    "ho_action_W",
    "ho_kernel_G",
    "compose_sliced",
    "compose_sliced_columns",
    "propagate_sliced",
    "momentum_spray",
]

_CAUSTIC_TOL = 1e-12


class CausticError(ValueError):
    """Focal time: sin(omega (t'-t)) vanishes and the kernel prefactor diverges."""


@dataclass(frozen=True)
class SliceScheme:
    """n_slices slices of duration epsilon each (total span n_slices * epsilon)."""

    n_slices: int
    epsilon: float

    def __post_init__(self):
        if self.n_slices < 1:
            raise ValueError("n_slices must be >= 1")
        if self.epsilon <= 0:
            raise ValueError("slice duration must be positive")

    @classmethod
    def from_interval(cls, n_slices: int, t_total: float) -> "SliceScheme":
        if n_slices < 1:
            raise ValueError("n_slices must be >= 1")
        return cls(n_slices, t_total / n_slices)

    @property
    def t_total(self) -> float:
        return self.n_slices * self.epsilon


@dataclass(frozen=True)
class KernelMatrix:
    """Discretized propagator G(x_j, x_k) from t_from to t_to on a grid."""

    grid: Grid1D
    t_from: float
    t_to: float
    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.shape[0] != self.grid.n:
            raise ValueError("kernel rows must match the grid")
        object.__setattr__(self, "entries", e)

    def apply(self, f: WaveField) -> WaveField:
        """Propagate a field by grid quadrature: psi'(x_j) = sum_k G_jk psi_k dx."""
        if self.entries.shape[1] != self.grid.n:
            raise ValueError("column-restricted kernel cannot be applied to a field")
        psi = self.entries @ f.psi * self.grid.dx
        return WaveField(self.grid, psi, self.t_to)

    def unitarity_defect(self, f: WaveField) -> float:
        """| ||G f||^2 - ||f||^2 | for a given field; reported, never assumed."""
        return abs(self.apply(f).norm_squared() - f.norm_squared())


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def short_time_action(q_to, q_from, epsilon: float, m: float = 1.0):
    """Kinetic short-time action m (q'-q)^2 / (2 eps)."""
    if epsilon <= 0:
        raise ValueError(f"slice duration must be positive, got {epsilon}")
    q_to = np.asarray(q_to, dtype=float)
    q_from = np.asarray(q_from, dtype=float)
    out = 0.5 * m * (q_to - q_from) ** 2 / epsilon
    return out.item() if out.ndim == 0 else out


def free_action_W(r_to, r_from, t_to: float, t_from: float, m: float = 1.0):
    """Free-particle generating function m (r'-r)^2 / 2(t'-t)."""
    if t_to <= t_from:
        raise ValueError("t_to must exceed t_from")
    return short_time_action(r_to, r_from, t_to - t_from, m)


def free_kernel_G(r_to, r_from, t_to: float, t_from: float, m: float = 1.0,
                  hbar: float = 1.0):
    """Free-particle kernel (m / 2 pi i hbar dt)^(1/2) exp(i W / hbar)."""
    if t_to <= t_from:
        raise ValueError("t_to must exceed t_from")
    dt = t_to - t_from
    pref = np.sqrt(m / (2j * np.pi * hbar * dt))  # principal branch
    W = free_action_W(r_to, r_from, t_to, t_from, m)
    out = pref * np.exp(1j * np.asarray(W) / hbar)
    return out.item() if np.ndim(out) == 0 else out


def _ho_sin(omega: float, dt: float) -> float:
    s = np.sin(omega * dt)
    if abs(s) < _CAUSTIC_TOL:
        raise CausticError(
            f"focal time: omega*(t'-t) = {omega * dt:.6g} is a multiple of pi, "
            "the oscillator kernel prefactor diverges there")
    return s


def ho_action_W(x_to, x_from, t_to: float, t_from: float, m: float = 1.0,
                omega: float = 1.0):
    """Oscillator generating function
    (m omega / 2 sin(omega dt)) * ((x'^2 + x^2) cos(omega dt) - 2 x' x)."""
    if t_to <= t_from:
        raise ValueError("t_to must exceed t_from")
    dt = t_to - t_from
    s = _ho_sin(omega, dt)
    c = np.cos(omega * dt)
    x_to = np.asarray(x_to, dtype=float)
    x_from = np.asarray(x_from, dtype=float)
    out = m * omega / (2.0 * s) * ((x_to ** 2 + x_from ** 2) * c - 2.0 * x_to * x_from)
    return out.item() if out.ndim == 0 else out


def ho_kernel_G(x_to, x_from, t_to: float, t_from: float, m: float = 1.0,
                omega: float = 1.0, hbar: float = 1.0):
    """Oscillator kernel sqrt(m omega / 2 pi i hbar sin(omega dt)) exp(i W / hbar).

    Principal square root; no focal-phase bookkeeping is applied past a
    caustic, so keep omega * (t'-t) below pi (a CausticError is raised at the
    focal times themselves).
    """
    if t_to <= t_from:
        raise ValueError("t_to must exceed t_from")
    dt = t_to - t_from
    s = _ho_sin(omega, dt)
    pref = np.sqrt(m * omega / (2j * np.pi * hbar * s))
    W = ho_action_W(x_to, x_from, t_to, t_from, m, omega)
    out = pref * np.exp(1j * np.asarray(W) / hbar)
    return out.item() if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# sliced composition
# ---------------------------------------------------------------------------

def _slice_validity(V: PotentialSpec, grid: Grid1D, eps: float) -> float:
    vmax = float(np.abs(V.values(grid)).max())
    return eps * vmax / V.hbar


def _slice_kernel_columns(V: PotentialSpec, grid: Grid1D, eps: float,
                          cols: np.ndarray) -> np.ndarray:
    x = grid.x
    xs = x[cols]
    pref = np.sqrt(V.m / (2j * np.pi * V.hbar * eps))
    phase = (0.5 * V.m * (x[:, None] - xs[None, :]) ** 2 / eps
             - eps * V.value_at(0.5 * (x[:, None] + xs[None, :]), grid))
    return pref * np.exp(1j * phase / V.hbar)


class _QuadraticSliceOp:
    """Fast application of the short-time kernel for quadratic potentials.

    With gamma = eps m omega^2 / (8 hbar) and alpha = m / (2 hbar eps) the
    kernel factorizes as diag(e^{-2i gamma x^2}) Toeplitz(e^{i(alpha+gamma)u^2})
    diag(e^{-2i gamma x^2}); the Toeplitz product runs through a circulant
    embedding of length 2n.
    """

    def __init__(self, V: PotentialSpec, grid: Grid1D, eps: float):
        if V.kind == "free":
            omega2 = 0.0
        elif V.kind == "harmonic":
            omega2 = V.omega ** 2
        else:
            raise ValueError("fast slice operator needs a free or harmonic potential")
        n, dx = grid.n, grid.dx
        alpha = V.m / (2.0 * V.hbar * eps)
        gamma = eps * V.m * omega2 / (8.0 * V.hbar)
        pref = np.sqrt(V.m / (2j * np.pi * V.hbar * eps))
        self.diag = np.exp(-2j * gamma * grid.x ** 2)
        d = np.arange(-(n - 1), n) * dx
        g = np.exp(1j * (alpha + gamma) * d ** 2)
        c = np.zeros(2 * n, dtype=complex)
        c[:n] = g[n - 1:]
        c[n + 1:] = g[:n - 1]
        self.chat = np.fft.fft(c)
        self.scale = pref * dx
        self.n = n

    def apply(self, M: np.ndarray) -> np.ndarray:
        """One quadrature composition: scale * D T D M."""
        n = self.n
        work = self.diag[:, None] * M
        pad = np.zeros((2 * n, M.shape[1]), dtype=complex)
        pad[:n] = work
        conv = np.fft.ifft(self.chat[:, None] * np.fft.fft(pad, axis=0), axis=0)[:n]
        return self.scale * (self.diag[:, None] * conv)


def compose_sliced_columns(V: PotentialSpec, scheme: SliceScheme, grid: Grid1D,
                           columns: np.ndarray) -> np.ndarray:
    """Composed kernel restricted to the given source columns.

    Sequential slice applications; free and harmonic potentials use the
    factorized Toeplitz/FFT path (identical quadrature sums), other kinds
    fall back to a dense slice matrix.
    """
    cols = np.asarray(columns, dtype=int)
    ratio = _slice_validity(V, grid, scheme.epsilon)
    if ratio >= 0.5:
        warnings.warn(
            f"slice duration may be too coarse: eps*max|V|/hbar = {ratio:.3g} >= 0.5",
            stacklevel=2)
    M = _slice_kernel_columns(V, grid, scheme.epsilon, cols)
    if scheme.n_slices == 1:
        return M
    if V.kind in ("free", "harmonic"):
        op = _QuadraticSliceOp(V, grid, scheme.epsilon)
        # chunk columns to bound the FFT workspace
        step = max(1, min(cols.size, (1 << 22) // grid.n))
        for lo in range(0, cols.size, step):
            block = M[:, lo:lo + step].copy()
            for _ in range(scheme.n_slices - 1):
                block = op.apply(block)
            M[:, lo:lo + step] = block
        return M
    K = _slice_kernel_columns(V, grid, scheme.epsilon, np.arange(grid.n))
    for _ in range(scheme.n_slices - 1):
        M = (K @ M) * grid.dx
    return M


def compose_sliced(V: PotentialSpec, scheme: SliceScheme, grid: Grid1D,
                   t_from: float = 0.0) -> KernelMatrix:
    """Chain the short-time kernel over all slices and return the full matrix."""
    entries = compose_sliced_columns(V, scheme, grid, np.arange(grid.n))
    return KernelMatrix(grid, t_from, t_from + scheme.t_total, entries)


def propagate_sliced(f: WaveField, V: PotentialSpec, scheme: SliceScheme) -> WaveField:
    """Apply the composed sliced kernel to a field by quadrature.

    Performs the same chained sums as compose_sliced followed by
    KernelMatrix.apply, without materializing the n x n matrix.
    """
    grid = f.grid
    ratio = _slice_validity(V, grid, scheme.epsilon)
    if ratio >= 0.5:
        warnings.warn(
            f"slice duration may be too coarse: eps*max|V|/hbar = {ratio:.3g} >= 0.5",
            stacklevel=2)
    vec = f.psi[:, None].copy()
    if V.kind in ("free", "harmonic"):
        op = _QuadraticSliceOp(V, grid, scheme.epsilon)
        for _ in range(scheme.n_slices):
            vec = op.apply(vec)
    else:
        K = _slice_kernel_columns(V, grid, scheme.epsilon, np.arange(grid.n))
        for _ in range(scheme.n_slices):
            vec = (K @ vec) * grid.dx
    return WaveField(grid, vec[:, 0], f.t + scheme.t_total)


# ---------------------------------------------------------------------------
# midpoint momentum spray
# ---------------------------------------------------------------------------

def momentum_spray(q, q_to, Q, epsilon: float, m: float = 1.0):
    """One-sided momenta at the midpoint of a short hop q -> Q -> q'.

    Returns (p_backward, p_forward, p_mean) with

        p_backward = m (Q - q) / eps      (arriving at Q)
        p_forward  = m (q' - Q) / eps     (leaving Q)

    and their arithmetic mean.  Both one-sided values are exposed; they
    differ whenever the hop bends, and their difference does not vanish in
    the continuum limit for non-smooth paths.
    """
    if epsilon <= 0:
        raise ValueError(f"slice duration must be positive, got {epsilon}")
    p_back = m * (np.asarray(Q, dtype=float) - np.asarray(q, dtype=float)) / epsilon
    p_fwd = m * (np.asarray(q_to, dtype=float) - np.asarray(Q, dtype=float)) / epsilon
    p_mean = 0.5 * (p_back + p_fwd)
    if p_back.ndim == 0:
        return p_back.item(), p_fwd.item(), p_mean.item()
    return p_back, p_fwd, p_mean
