from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import fft as sfft

from .errors import GridMismatch, NonFiniteSymbol, PreconditionFailed

SQRT_2PI = math.sqrt(2.0 * math.pi)

# Frequency -> complex symbol, evaluated on the whole discrete frequency array.
Symbol = Callable[[np.ndarray], np.ndarray]


# -------------------------
# Grid
# -------------------------

@dataclass(frozen=True)
class Grid:
    """Periodic window of the h-lattice with ``n_points`` sites.

    Site ``n`` sits at ``x_n = (n - n_points/2) h - offset``; the matching
    frequencies are ``ξ_k = 2πk/(n_points h)`` for ``k = -n_points/2 … n_points/2 - 1``.
    """

    h: float
    n_points: int
    offset: float = 0.0

    def __post_init__(self) -> None:
        h = float(self.h)
        if not (h > 0 and math.isfinite(h)):
            raise PreconditionFailed(f"grid width must be positive, got {self.h}")
        n = int(self.n_points)
        if n != self.n_points or n < 8 or n % 2:
            raise PreconditionFailed(f"n_points must be an even integer >= 8, got {self.n_points}")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "n_points", n)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def window_half_length(self) -> float:
        return self.n_points * self.h / 2.0

    @property
    def dxi(self) -> float:
        """Frequency spacing, the Parseval quadrature weight."""
        return 2.0 * math.pi / (self.n_points * self.h)

    def positions(self) -> np.ndarray:
        return (np.arange(self.n_points) - self.n_points // 2) * self.h - self.offset

    def mode_indices(self) -> np.ndarray:
        return np.arange(-(self.n_points // 2), self.n_points // 2)

    def frequencies(self) -> np.ndarray:
        return self.mode_indices() * self.dxi

    def refined(self, h: float) -> "Grid":
        """Same window (length and offset) sampled at width ``h``."""
        n = int(round(self.n_points * self.h / h))
        n += n % 2
        return Grid(h=h, n_points=n, offset=self.offset)


def symbol(grid: Grid) -> np.ndarray:
    """σ(ξ_k) = sin(ξ_k h)/h, exactly zero at ξ = 0 and at the Nyquist mode."""
    sigma = np.sin(grid.frequencies() * grid.h) / grid.h
    sigma[0] = 0.0  # k = -N/2
    sigma[grid.n_points // 2] = 0.0  # k = 0
    return sigma


def _phase(grid: Grid) -> np.ndarray:
    # e^{-iξ_k x_0}: moves the FFT origin from site 0 to position x_0
    return np.exp(-1j * grid.frequencies() * grid.positions()[0])


def _central(values: np.ndarray, h: float) -> np.ndarray:
    return (np.roll(values, -1, axis=-1) - np.roll(values, 1, axis=-1)) / (2.0 * h)


def _forward(values: np.ndarray, h: float) -> np.ndarray:
    return (np.roll(values, -1, axis=-1) - values) / h


def _backward(values: np.ndarray, h: float) -> np.ndarray:
    return (values - np.roll(values, 1, axis=-1)) / h


def _check_same_grid(*grids: Grid) -> None:
    first = grids[0]
    for g in grids[1:]:
        if g != first:
            raise GridMismatch(f"grid mismatch: {first} vs {g}")


def _drop_imaginary(values: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    if np.max(np.abs(values.imag), initial=0.0) <= rtol * max(scale, 1e-300):
        return values.real.copy()
    return values


# -------------------------
# Values
# -------------------------

@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.array(self.values, copy=True)
        if vals.dtype.kind not in "fc":
            vals = vals.astype(float)
        if vals.shape != (self.grid.n_points,):
            raise PreconditionFailed(
                f"expected {self.grid.n_points} values, got shape {vals.shape}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.n_points))

    @classmethod
    def from_function(cls, grid: Grid, f: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return cls(grid, f(grid.positions()))

    @property
    def positions(self) -> np.ndarray:
        return self.grid.positions()

    @property
    def is_real(self) -> bool:
        return self.values.dtype.kind == "f"

    def l2_norm(self) -> float:
        return math.sqrt(self.grid.h * float(np.sum(np.abs(self.values) ** 2)))

    def linf_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def inner(self, other: "GridFunction") -> complex | float:
        """l²_h pairing h Σ u_n conj(w_n)."""
        _check_same_grid(self.grid, other.grid)
        val = self.grid.h * np.sum(self.values * np.conj(other.values))
        return float(val.real) if self.is_real and other.is_real else complex(val)

    def real(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.real)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self.grid, other.grid)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self.grid, other.grid)
        return GridFunction(self.grid, self.values - other.values)

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.grid, -self.values)

    def __mul__(self, scalar: complex | float) -> "GridFunction":
        return GridFunction(self.grid, self.values * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpectralFunction:
    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.array(self.coeffs, dtype=complex, copy=True)
        if c.shape != (self.grid.n_points,):
            raise PreconditionFailed(f"expected {self.grid.n_points} coefficients, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def l2_norm(self) -> float:
        return math.sqrt(self.grid.dxi * float(np.sum(np.abs(self.coeffs) ** 2)))


# -------------------------
# Transforms
# -------------------------

def dft(v: GridFunction) -> SpectralFunction:
    """v̂(ξ_k) = h/√(2π) Σ_n e^{-iξ_k x_n} v_n."""
    g = v.grid
    coeffs = (g.h / SQRT_2PI) * _phase(g) * sfft.fftshift(sfft.fft(v.values))
    return SpectralFunction(g, coeffs)


def idft(g: SpectralFunction, real: bool = False) -> GridFunction:
    """v_n = (1/√(2π)) Σ_k e^{iξ_k x_n} c_k · 2π/(n_points h)."""
    grid = g.grid
    vals = (SQRT_2PI / grid.h) * sfft.ifft(sfft.ifftshift(g.coeffs * np.conj(_phase(grid))))
    return GridFunction(grid, vals.real if real else vals)


def spectral_values(grid: Grid, coeffs: np.ndarray, like: GridFunction | None = None) -> GridFunction:
    """idft that keeps real data real when the operator preserved conjugate symmetry."""
    return idft(SpectralFunction(grid, coeffs), real=bool(like is not None and like.is_real))


# -------------------------
# Finite differences
# -------------------------

def d_central(v: GridFunction) -> GridFunction:
    return GridFunction(v.grid, _central(v.values, v.grid.h))


def d_plus(v: GridFunction) -> GridFunction:
    return GridFunction(v.grid, _forward(v.values, v.grid.h))


def d_minus(v: GridFunction) -> GridFunction:
    return GridFunction(v.grid, _backward(v.values, v.grid.h))


def multiplier(v: GridFunction, m: Symbol) -> GridFunction:
    grid = v.grid
    sym = np.broadcast_to(np.asarray(m(grid.frequencies()), dtype=complex), (grid.n_points,))
    if not np.all(np.isfinite(sym)):
        bad = grid.frequencies()[~np.isfinite(sym)]
        raise NonFiniteSymbol(f"symbol not finite at {bad.size} modes (first ξ={bad[0]:.6g})")
    out = idft(SpectralFunction(grid, sym * dft(v).coeffs)).values
    return GridFunction(grid, _drop_imaginary(out) if v.is_real else out)


def sobolev_norm(v: GridFunction, s: float, homogeneous: bool = True) -> float:
    """ḣ^s_h norm with multiplier |sin(ξh)/h|^s; modes where it vanishes are left out."""
    c = dft(v).coeffs
    zeta = np.abs(symbol(v.grid))
    mask = zeta > 0
    hom2 = v.grid.dxi * float(np.sum(zeta[mask] ** (2.0 * s) * np.abs(c[mask]) ** 2))
    if homogeneous:
        return math.sqrt(hom2)
    return math.sqrt(v.l2_norm() ** 2 + hom2)


def truncate(f_hat: Symbol, grid: Grid, real: bool = True) -> GridFunction:
    """T_h f: the grid function whose discrete transform equals f̂ on the discrete frequencies.

    ``f_hat`` is the unitary continuous transform (1/√(2π)) ∫ f(x) e^{-iξx} dx.
    With ``real`` the target is a real function; the unpaired Nyquist mode then
    only keeps its real-compatible part.
    """
    xi = grid.frequencies()
    coeffs = np.broadcast_to(np.asarray(f_hat(xi), dtype=complex), xi.shape)
    if not np.all(np.isfinite(coeffs)):
        raise NonFiniteSymbol("transform not finite on the discrete frequency set")
    return idft(SpectralFunction(grid, coeffs), real=real)


def convolve(v: GridFunction, w: GridFunction) -> GridFunction:
    """(v*w)_n = h Σ_m v_m w_{n-m}, periodic, with the window's centre site as origin.

    (1/h)·𝟙{centre} is the unit. On a centred window dft(v*w) = √(2π)·v̂·ŵ;
    a nonzero offset multiplies the right side by e^{-iξ·offset}.
    """
    _check_same_grid(v.grid, w.grid)
    grid = v.grid
    w_origin = np.roll(w.values, -(grid.n_points // 2))
    out = grid.h * sfft.ifft(sfft.fft(v.values) * sfft.fft(w_origin))
    return GridFunction(grid, out.real if (v.is_real and w.is_real) else out)


def boundary_mass_fraction(v: GridFunction, margin: float = 0.05) -> float:
    """Share of squared l² mass on sites within ``margin`` of either window edge."""
    n = v.grid.n_points
    k = max(1, int(math.ceil(margin * n)))
    sq = np.abs(v.values) ** 2
    total = float(np.sum(sq))
    if total == 0.0:
        return 0.0
    return float(np.sum(sq[:k]) + np.sum(sq[n - k:])) / total
