"""Initial and analytically evolved reference states.

Closed forms used throughout the scenario suite:

* free Gaussian packet, including its exact time evolution with complex
  width sigma0^2 (1 + i tau), tau = hbar t / (2 m sigma0^2);
* harmonic-oscillator eigenstates n = 0, 1 and the displaced (coherent)
  Gaussian whose center follows the classical oscillation A cos(omega t);
* plane waves commensurate with the periodic grid;
* a two-slit style superposition of displaced Gaussians.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid1D, WaveField

__all__ = [
    "gaussian_packet",
    "free_gaussian_evolved",
    "free_gaussian_width",
    "free_gaussian_local_momentum",
    "ho_eigenstate",
    "coherent_state",
    "plane_wave",
    "two_slit_superposition",
]


def gaussian_packet(grid: Grid1D, sigma0: float = 1.0, x0: float = 0.0,
                    k0: float = 0.0) -> WaveField:
    """Normalized Gaussian with |psi|^2 ~ N(x0, sigma0^2), carrier k0, at t=0."""
    return free_gaussian_evolved(grid, 0.0, sigma0=sigma0, x0=x0, k0=k0)


def free_gaussian_evolved(grid: Grid1D, t: float, sigma0: float = 1.0,
                          x0: float = 0.0, k0: float = 0.0, m: float = 1.0,
                          hbar: float = 1.0) -> WaveField:
    """Exact free evolution of the Gaussian packet at time t."""
    if sigma0 <= 0:
        raise ValueError("sigma0 must be positive")
    x = grid.x
    tau = hbar * t / (2.0 * m * sigma0 ** 2)
    xi = x - x0 - hbar * k0 * t / m
    psi = ((2.0 * np.pi * sigma0 ** 2) ** (-0.25) / np.sqrt(1.0 + 1j * tau)
           * np.exp(-xi ** 2 / (4.0 * sigma0 ** 2 * (1.0 + 1j * tau))
                    + 1j * k0 * (x - x0) - 0.5j * hbar * k0 ** 2 * t / m))
    return WaveField(grid, psi, t).normalized()


def free_gaussian_width(t: float, sigma0: float = 1.0, m: float = 1.0,
                        hbar: float = 1.0) -> float:
    """sigma(t) = sigma0 sqrt(1 + (hbar t / 2 m sigma0^2)^2)."""
    tau = hbar * t / (2.0 * m * sigma0 ** 2)
    return sigma0 * np.sqrt(1.0 + tau ** 2)


def free_gaussian_local_momentum(x, t: float, sigma0: float = 1.0,
                                 x0: float = 0.0, k0: float = 0.0,
                                 m: float = 1.0, hbar: float = 1.0):
    """Phase-gradient momentum of the evolved packet: hbar k0 + m (sigma'/sigma) xi."""
    tau = hbar * t / (2.0 * m * sigma0 ** 2)
    xi = np.asarray(x) - x0 - hbar * k0 * t / m
    rate = (hbar * tau / (2.0 * sigma0 ** 2 * (1.0 + tau ** 2)))  # m * sigma'/sigma
    return hbar * k0 + rate * xi


def ho_eigenstate(grid: Grid1D, n: int, m: float = 1.0, omega: float = 1.0,
                  hbar: float = 1.0) -> WaveField:
    """Harmonic-oscillator eigenstate, n in {0, 1}."""
    x = grid.x
    a = m * omega / hbar
    g = (a / np.pi) ** 0.25 * np.exp(-0.5 * a * x ** 2)
    if n == 0:
        psi = g
    elif n == 1:
        psi = np.sqrt(2.0 * a) * x * g
    else:
        raise ValueError("only n = 0 and n = 1 are provided")
    return WaveField(grid, psi.astype(complex), 0.0).normalized()


def coherent_state(grid: Grid1D, amplitude: float, t: float = 0.0,
                   m: float = 1.0, omega: float = 1.0, hbar: float = 1.0) -> WaveField:
    """Displaced ground-state Gaussian; center x_c = A cos(omega t).

    Width is the ground-state width (sigma^2 = hbar / 2 m omega); the phase
    carries the classical momentum p_c = -m A omega sin(omega t), so the
    local momentum field is x-independent and the density rides the
    classical oscillation without changing shape.
    """
    x = grid.x
    a = m * omega / hbar
    xc = amplitude * np.cos(omega * t)
    pc = -m * amplitude * omega * np.sin(omega * t)
    psi = ((a / np.pi) ** 0.25
           * np.exp(-0.5 * a * (x - xc) ** 2
                    + 1j * (pc * x - 0.5 * pc * xc - 0.5 * hbar * omega * t) / hbar))
    return WaveField(grid, psi, t).normalized()


def plane_wave(grid: Grid1D, mode: int) -> WaveField:
    """exp(i k x)/sqrt(L) with k = 2 pi mode / L (commensurate with the grid)."""
    k = 2.0 * np.pi * mode / grid.length
    psi = np.exp(1j * k * grid.x) / np.sqrt(grid.length)
    return WaveField(grid, psi, 0.0)


def two_slit_superposition(grid: Grid1D, separation: float, width: float,
                           k0: float = 0.0) -> WaveField:
    """Symmetric superposition of two displaced Gaussians (the standard
    free-flight model of a double slit)."""
    if separation <= 0 or width <= 0:
        raise ValueError("separation and width must be positive")
    x = grid.x
    g = lambda c: np.exp(-(x - c) ** 2 / (4.0 * width ** 2) + 1j * k0 * x)
    psi = g(-0.5 * separation) + g(0.5 * separation)
    return WaveField(grid, psi, 0.0).normalized()
