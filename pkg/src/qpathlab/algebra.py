"""Finite matrix checks of the operator-algebra relations.

Small, exactly checkable shadows of the symbolic machinery: the Pauli
matrices with their +1 eigenvectors and rank-1 projectors, and the weak
form of the position/derivative commutation relation

    (d/dX) X - X (d/dX) = 1,

verified on a battery of smooth test functions rather than as a matrix
identity (a finite spectral differentiation matrix satisfies the relation
only on functions the grid resolves; as a matrix identity it is false for
every finite n).
"""

from __future__ import annotations

import numpy as np

from .grid import Grid1D

__all__ = [
    "pauli_basis",
    "standard_ket",
    "idempotent_from_ket",
    "rotation_between_idempotents",
    "heisenberg_commutator_defect",
    "default_test_battery",
]

_SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SIGMA2 = np.array([[0.0, -1j], [1j, 0.0]], dtype=complex)
_SIGMA3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def pauli_basis() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """sigma_1, sigma_2, sigma_3 in the basis where sigma_3 is diagonal."""
    return _SIGMA1.copy(), _SIGMA2.copy(), _SIGMA3.copy()


def standard_ket(direction: int) -> np.ndarray:
    """Normalized +1 eigenvector of sigma_direction, first nonzero component
    made real positive."""
    if direction not in (1, 2, 3):
        raise ValueError(f"direction must be 1, 2 or 3, got {direction}")
    sigma = pauli_basis()[direction - 1]
    vals, vecs = np.linalg.eigh(sigma)
    k = vecs[:, np.argmax(vals)]
    nz = np.flatnonzero(np.abs(k) > 1e-14)[0]
    return k * np.exp(-1j * np.angle(k[nz]))


def idempotent_from_ket(k: np.ndarray) -> np.ndarray:
    """Outer product k k^dagger of a normalized vector (a rank-1 projector)."""
    k = np.asarray(k, dtype=complex)
    norm = np.linalg.norm(k)
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"ket must be normalized, got |k| = {norm}")
    return np.outer(k, np.conj(k))


def rotation_between_idempotents(d_from: int, d_to: int) -> np.ndarray:
    """Unitary U with U eps_from U^dagger = eps_to, built from eigenbases."""
    def basis(d):
        sigma = pauli_basis()[d - 1]
        vals, vecs = np.linalg.eigh(sigma)
        order = np.argsort(-vals)  # +1 eigenvector first
        return vecs[:, order]

    return basis(d_to) @ np.conj(basis(d_from)).T


def default_test_battery(grid: Grid1D) -> list[np.ndarray]:
    """Smooth functions centered well away from the periodic seam."""
    x = grid.x
    L = grid.length
    mid = 0.5 * (grid.x_min + grid.x_max - grid.dx)
    return [
        np.exp(-((x - mid) ** 2) / (2.0 * (L / 25.0) ** 2)),
        np.exp(-((x - mid - L / 16.0) ** 2) / (2.0 * (L / 22.0) ** 2)),
        np.exp(-((x - mid + L / 16.0) ** 2) / (2.0 * (L / 20.0) ** 2)),
        np.cos(6.0 * np.pi * (x - mid) / L) * np.exp(-((x - mid) ** 2) / (2.0 * (L / 25.0) ** 2)),
    ]


def spectral_derivative_matrix(grid: Grid1D) -> np.ndarray:
    """Dense matrix of the FFT differentiation operator."""
    F = np.fft.fft(np.eye(grid.n), axis=0)
    return np.fft.ifft((1j * grid.k)[:, None] * F, axis=0)


def heisenberg_commutator_defect(n: int, L: float, battery=None) -> float:
    """max over the battery of || (D X - X D) f - f ||_inf on a periodic grid.

    D is the spectral differentiation matrix and X the diagonal position
    matrix; the defect measures how far the commutation relation is from
    the identity on functions the grid resolves.
    """
    grid = Grid1D(-0.5 * L, 0.5 * L, n)
    if battery is None:
        battery = default_test_battery(grid)
    D = spectral_derivative_matrix(grid)
    X = np.diag(grid.x.astype(complex))
    C = D @ X - X @ D
    worst = 0.0
    for f in battery:
        f = np.asarray(f, dtype=complex)
        worst = max(worst, float(np.abs(C @ f - f).max()))
    return worst
