import numpy as np
import pytest

from qpathlab.grid import (Grid1D, RealField, WaveField, integrate,
                           spectral_derivative)


@pytest.fixture
def grid():
    return Grid1D(-10.0, 10.0, 256)


def test_grid_geometry(grid):
    assert grid.dx == pytest.approx(20.0 / 256)
    assert grid.x[0] == -10.0
    assert grid.x[-1] == pytest.approx(10.0 - grid.dx)
    assert grid.k[1] == pytest.approx(2 * np.pi / 20.0)


@pytest.mark.parametrize("n", [4, 6, 100, 257])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        Grid1D(0.0, 1.0, n)


def test_grid_rejects_empty_interval():
    with pytest.raises(ValueError):
        Grid1D(1.0, 1.0, 64)


def test_derivative_of_band_limited_mode(grid):
    # single Fourier mode differentiates exactly
    kk = 2 * np.pi / grid.length
    f = RealField(grid, np.sin(kk * grid.x))
    df = spectral_derivative(f, 1)
    assert np.abs(df.values - kk * np.cos(kk * grid.x)).max() < 1e-10


def test_derivative_of_constant_is_zero(grid):
    f = RealField(grid, np.full(grid.n, 3.7))
    assert np.abs(spectral_derivative(f, 1).values).max() < 1e-12


def test_second_derivative_of_gaussian(grid):
    # d^2/dx^2 exp(-x^2/2) = (x^2 - 1) exp(-x^2/2), by hand
    f = RealField(grid, np.exp(-grid.x ** 2 / 2))
    d2 = spectral_derivative(f, 2)
    ref = (grid.x ** 2 - 1.0) * np.exp(-grid.x ** 2 / 2)
    assert np.abs(d2.values - ref).max() < 1e-9


def test_first_derivative_twice_matches_second(grid):
    f = RealField(grid, np.exp(-grid.x ** 2 / 2) * np.cos(grid.x))
    twice = spectral_derivative(spectral_derivative(f, 1), 1)
    once = spectral_derivative(f, 2)
    assert np.abs(twice.values - once.values).max() < 1e-9


def test_derivative_rejects_bad_order(grid):
    f = RealField(grid, np.zeros(grid.n))
    with pytest.raises(ValueError):
        spectral_derivative(f, 3)


def test_derivative_rejects_masked_field(grid):
    mask = np.ones(grid.n, dtype=bool)
    mask[0] = False
    f = RealField(grid, np.zeros(grid.n), mask=mask)
    with pytest.raises(ValueError):
        spectral_derivative(f, 1)


def test_non_finite_rejected(grid):
    vals = np.zeros(grid.n)
    vals[3] = np.nan
    with pytest.raises(ValueError):
        RealField(grid, vals)
    amps = np.zeros(grid.n, dtype=complex)
    amps[5] = np.inf
    with pytest.raises(ValueError):
        WaveField(grid, amps)


def test_integrate_constant():
    g = Grid1D(0.0, 2 * np.pi, 64)
    assert integrate(RealField(g, np.ones(64))) == pytest.approx(2 * np.pi, abs=1e-14)


def test_integrate_normalized_density():
    g = Grid1D(-16.0, 16.0, 512)
    rho = np.exp(-g.x ** 2 / 2) / np.sqrt(2 * np.pi)
    assert integrate(RealField(g, rho)) == pytest.approx(1.0, abs=1e-12)


def test_integrate_odd_moment_vanishes():
    g = Grid1D(-16.0, 16.0, 512)
    rho = np.exp(-g.x ** 2 / 2) / np.sqrt(2 * np.pi)
    assert abs(integrate(RealField(g, g.x * rho))) < 1e-12


def test_integrate_is_linear():
    g = Grid1D(-8.0, 8.0, 128)
    f = np.exp(-g.x ** 2)
    h = np.cos(2 * np.pi * g.x / g.length)
    for a, b in [(2.0, -3.0), (0.5, 1.25), (-1.0, 0.0)]:
        lhs = integrate(RealField(g, a * f + b * h))
        rhs = a * integrate(RealField(g, f)) + b * integrate(RealField(g, h))
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_parseval(grid):
    rng = np.random.default_rng(11)
    phases = np.exp(2j * np.pi * rng.random(8))
    psi = sum(p * np.exp(2j * np.pi * k * grid.x / grid.length)
              for k, p in enumerate(phases, start=1))
    wf = WaveField(grid, psi).normalized()
    spec = np.abs(np.fft.fft(wf.psi)) ** 2
    k_norm = spec.sum() * grid.dx / grid.n
    assert abs(wf.norm_squared() - k_norm) < 1e-12


def test_wavefield_normalize_and_density(grid):
    wf = WaveField(grid, np.exp(-grid.x ** 2 / 4) + 0j)
    wn = wf.normalized()
    assert abs(wn.norm_squared() - 1.0) < 1e-12
    assert integrate(wn.density()) == pytest.approx(1.0, abs=1e-12)


def test_fields_are_immutable(grid):
    wf = WaveField(grid, np.zeros(grid.n, dtype=complex))
    with pytest.raises(ValueError):
        wf.psi[0] = 1.0
