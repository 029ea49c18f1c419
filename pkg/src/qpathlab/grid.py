"""Uniform periodic 1D grid with spectral differentiation and integration.

All fields in the package live on a `Grid1D`: n equispaced points on
[x_min, x_max) with periodic continuation, so x_max is identified with
x_min.  Derivatives are computed by FFT (exact for band-limited data) and
integrals by the periodic rectangle rule, which is spectrally accurate for
smooth periodic integrands.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid1D",
    "WaveField",
    "RealField",
    "spectral_derivative",
    "integrate",
]


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid1D:
    """Periodic uniform lattice: x_j = x_min + j*dx, j = 0..n-1, dx = (x_max-x_min)/n."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if self.n < 8:
            raise ValueError(f"grid needs n >= 8 points, got {self.n}")
        if not _is_power_of_two(self.n):
            raise ValueError(f"grid size must be a power of two, got {self.n}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT ordering."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)


def _as_array(values, n, dtype):
    arr = np.asarray(values, dtype=dtype)
    if arr.shape != (n,):
        raise ValueError(f"expected {n} values, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class WaveField:
    """Complex amplitudes psi on a grid at time t."""

    grid: Grid1D
    psi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        arr = _as_array(self.psi, self.grid.n, complex)
        if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
            raise ValueError("wave field contains non-finite amplitudes")
        arr.flags.writeable = False
        object.__setattr__(self, "psi", arr)

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.dx)

    def normalized(self) -> "WaveField":
        n2 = self.norm_squared()
        if n2 <= 0.0:
            raise ValueError("cannot normalize a null field")
        return WaveField(self.grid, self.psi / np.sqrt(n2), self.t)

    def density(self) -> "RealField":
        return RealField(self.grid, np.abs(self.psi) ** 2, self.t)


@dataclass(frozen=True)
class RealField:
    """Real values on a grid, optionally with a per-point validity mask.

    `mask[j] is True` means the value at j is defined.  `mask is None`
    means the field is defined everywhere.
    """

    grid: Grid1D
    values: np.ndarray
    t: float = 0.0
    mask: np.ndarray | None = field(default=None)

    def __post_init__(self):
        arr = _as_array(self.values, self.grid.n, float)
        if self.mask is not None:
            m = _as_array(self.mask, self.grid.n, bool)
            m.flags.writeable = False
            object.__setattr__(self, "mask", m)
            defined = arr[m]
        else:
            defined = arr
        if not np.all(np.isfinite(defined)):
            raise ValueError("real field contains non-finite values at defined points")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def valid(self) -> np.ndarray:
        if self.mask is None:
            return np.ones(self.grid.n, dtype=bool)
        return self.mask

    def is_fully_defined(self) -> bool:
        return self.mask is None or bool(self.mask.all())


def spectral_derivative_array(values: np.ndarray, dx: float, order: int = 1) -> np.ndarray:
    """FFT derivative of a periodic sample array; real in -> real out."""
    values = np.asarray(values)
    if order not in (1, 2):
        raise ValueError(f"derivative order must be 1 or 2, got {order}")
    if not np.all(np.isfinite(values.real)) or (
        np.iscomplexobj(values) and not np.all(np.isfinite(values.imag))
    ):
        raise ValueError("cannot differentiate non-finite values")
    k = 2.0 * np.pi * np.fft.fftfreq(values.shape[0], d=dx)
    out = np.fft.ifft((1j * k) ** order * np.fft.fft(values))
    return out if np.iscomplexobj(values) else out.real


def spectral_derivative(f, order: int = 1):
    """order-th derivative of a WaveField or RealField, same kind returned.

    The field must be defined on the full grid; masked RealFields are
    rejected because the FFT is a global stencil and undefined points
    would contaminate every output value.
    """
    if isinstance(f, WaveField):
        return WaveField(f.grid, spectral_derivative_array(f.psi, f.grid.dx, order), f.t)
    if isinstance(f, RealField):
        if not f.is_fully_defined():
            raise ValueError("spectral_derivative requires a fully defined field")
        return RealField(f.grid, spectral_derivative_array(f.values, f.grid.dx, order), f.t)
    raise TypeError(f"expected WaveField or RealField, got {type(f).__name__}")


def integrate(f: RealField) -> float:
    """Periodic rectangle rule: sum(values) * dx."""
    if not isinstance(f, RealField):
        raise TypeError(f"integrate expects a RealField, got {type(f).__name__}")
    if not f.is_fully_defined():
        raise ValueError("integrate requires a fully defined field")
    return float(np.sum(f.values) * f.grid.dx)
