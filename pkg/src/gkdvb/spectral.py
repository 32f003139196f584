"""Periodic Fourier discretization of a truncated real line.

The box is [-half_length, half_length) with n equispaced points. Spectra are
stored in ascending wavenumber order (k = -n/2, ..., n/2-1) and hold the true
Fourier coefficients of the trigonometric interpolant,

    f(x_j) = sum_k c_k exp(i xi_k x_j),     xi_k = pi k / half_length,

so that dx * sum_j f_j**2 = 2 * half_length * sum_k |c_k|**2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MIN_POINTS = 16


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    half_length: float
    n_points: int
    dx: float = field(init=False)
    x: np.ndarray = field(init=False, repr=False)
    wavenumbers: np.ndarray = field(init=False, repr=False)
    # rfft-ordered wavenumbers (0, ..., n/2) used by the time steppers
    xi_r: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n, L = self.n_points, self.half_length
        object.__setattr__(self, "dx", 2.0 * L / n)
        object.__setattr__(self, "x", _readonly(-L + self.dx * np.arange(n)))
        k = np.arange(-n // 2, n // 2)
        object.__setattr__(self, "wavenumbers", _readonly(np.pi * k / L))
        object.__setattr__(self, "xi_r", _readonly(np.pi * np.arange(n // 2 + 1) / L))

    @property
    def mode_index(self) -> np.ndarray:
        """Integer mode numbers aligned with ``wavenumbers``."""
        return np.arange(-self.n_points // 2, self.n_points // 2)

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return self.half_length == other.half_length and self.n_points == other.n_points

    def __hash__(self):
        return hash((self.half_length, self.n_points))


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_points,):
            raise ValueError(
                f"field has shape {v.shape}, grid expects ({self.grid.n_points},)"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", _readonly(v))

    def __add__(self, other: Field) -> Field:
        _same_grid(self.grid, other.grid)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: Field) -> Field:
        _same_grid(self.grid, other.grid)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, scale: float) -> Field:
        return Field(self.grid, self.values * scale)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class Spectrum:
    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (self.grid.n_points,):
            raise ValueError(
                f"spectrum has shape {c.shape}, grid expects ({self.grid.n_points},)"
            )
        object.__setattr__(self, "coeffs", _readonly(c))


def _same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise ValueError(f"grid mismatch: {a} vs {b}")


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def make_grid(half_length: float, n_points: int) -> Grid:
    """Build a periodic grid on [-half_length, half_length).

    ``n_points`` must be a power of two no smaller than 16.
    """
    if isinstance(n_points, bool) or int(n_points) != n_points:
        raise ValueError(f"n_points must be an integer, got {n_points!r}")
    n_points = int(n_points)
    if n_points < MIN_POINTS or not is_power_of_two(n_points):
        raise ValueError(f"n_points must be a power of two >= {MIN_POINTS}, got {n_points}")
    half_length = float(half_length)
    if not math.isfinite(half_length) or half_length <= 0:
        raise ValueError(f"half_length must be finite and positive, got {half_length}")
    return Grid(half_length, n_points)


def _phase(grid: Grid) -> np.ndarray:
    # x_0 = -half_length, so exp(-i xi_k x_j) = (-1)^k exp(-2 pi i jk/n)
    return np.where(grid.mode_index % 2 == 0, 1.0, -1.0)


def transform(f: Field) -> Spectrum:
    g = f.grid
    c = np.fft.fftshift(np.fft.fft(f.values)) / g.n_points
    return Spectrum(g, c * _phase(g))


def inverse(s: Spectrum) -> Field:
    g = s.grid
    c = np.fft.ifftshift(s.coeffs * _phase(g)) * g.n_points
    return Field(g, np.fft.ifft(c).real)


def derivative_symbol(grid: Grid, order: int) -> np.ndarray:
    """(i xi)^order in ascending order, with the odd-order Nyquist entry zeroed."""
    sym = (1j * grid.wavenumbers) ** order
    if order % 2 == 1:
        sym[0] = 0.0
    return sym


def spectral_derivative(s: Spectrum, order: int) -> Spectrum:
    if isinstance(order, bool) or int(order) != order or not 0 <= order <= 4:
        raise ValueError(f"derivative order must be an integer in [0, 4], got {order!r}")
    return Spectrum(s.grid, s.coeffs * derivative_symbol(s.grid, int(order)))


def dealias_mask(grid: Grid) -> np.ndarray:
    """Two-thirds rule: keep modes with |k| <= n/3."""
    return 3 * np.abs(grid.mode_index) <= grid.n_points


def dealias(s: Spectrum) -> Spectrum:
    return Spectrum(s.grid, np.where(dealias_mask(s.grid), s.coeffs, 0.0))


def differentiate(f: Field, order: int = 1) -> Field:
    """Spectral derivative of a physical-space field."""
    return inverse(spectral_derivative(transform(f), order))


def sobolev_norm(f: Field, s: float) -> float:
    """H^s norm with multiplier (1 + xi^2)^s, Parseval-weighted."""
    if not 0 <= s <= 4:
        raise ValueError(f"Sobolev index must lie in [0, 4], got {s}")
    g = f.grid
    c = transform(f).coeffs
    w = (1.0 + g.wavenumbers**2) ** s
    return math.sqrt(2.0 * g.half_length * float(np.sum(w * np.abs(c) ** 2)))


def l2_inner(f: Field, g: Field) -> float:
    _same_grid(f.grid, g.grid)
    return f.grid.dx * float(np.dot(f.values, g.values))


def l2_norm(f: Field) -> float:
    return math.sqrt(l2_inner(f, f))


# --- rfft-space helpers for the time steppers -------------------------------


def rfft_weights(grid: Grid) -> np.ndarray:
    """Multiplicity of each rfft coefficient in the full spectrum."""
    w = np.full(grid.n_points // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w


def rfft_odd_symbol(grid: Grid) -> np.ndarray:
    """i*xi in rfft order with the Nyquist entry zeroed."""
    ik = 1j * grid.xi_r
    ik[-1] = 0.0
    return ik


def rfft_quadratic(grid: Grid, v: np.ndarray, multiplier: np.ndarray | None = None) -> float:
    """dx * sum |u_j|^2 (optionally with a spectral multiplier) from rfft data."""
    p = np.abs(v) ** 2
    if multiplier is not None:
        p = p * multiplier
    n = grid.n_points
    return grid.dx * float(np.dot(rfft_weights(grid), p)) / n
