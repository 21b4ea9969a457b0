"""Discrete Littlewood-Paley decomposition adapted to the central-difference symbol.

Bands live in the variable ζ(ξ) = |sin(ξh)|/h instead of |ξ|, so modes near the
Nyquist frequency (where ζ vanishes again) are treated as low frequencies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from .errors import (
    NonPositiveParameter,
    ParameterOrder,
    PreconditionFailed,
    ZeroLocalization,
    ZeroNorm,
)
from .grid import Grid, GridFunction, Symbol, d_central, dft, spectral_values, symbol, truncate
from .profiles import continuous_sobolev_norm

BAND_LO = 3.0 / 4.0
BAND_HI = 8.0 / 3.0  # 4/3 · 2^{j+1} = 8/3 · 2^j


def smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


def smooth_cutoff(r: np.ndarray, lo: float = 1.0, hi: float = 4.0 / 3.0) -> np.ndarray:
    """1 on [0, lo], 0 on [hi, ∞), quintic smoothstep in between."""
    r = np.asarray(r, dtype=float)
    return 1.0 - smoothstep((r - lo) / (hi - lo))


def annulus(j: int) -> Tuple[float, float]:
    return BAND_LO * 2.0 ** j, BAND_HI * 2.0 ** j


# -------------------------
# Geometry
# -------------------------

@dataclass(frozen=True, eq=False)
class BandGeometry:
    grid: Grid
    j_min: int
    j_max: int

    @classmethod
    def for_grid(cls, grid: Grid) -> "BandGeometry":
        inv_h = 1.0 / grid.h
        j_max = int(math.floor(math.log2(inv_h / BAND_LO)))
        while BAND_LO * 2.0 ** (j_max + 1) <= inv_h:
            j_max += 1
        while BAND_LO * 2.0 ** j_max > inv_h:
            j_max -= 1
        zeta = np.abs(symbol(grid))
        zeta_min = float(np.min(zeta[zeta > 0]))
        # smallest band index whose lower cutoff sits under every nonzero ζ
        j_min = int(math.floor(math.log2(BAND_LO * zeta_min)))
        while 2.0 ** j_min * (4.0 / 3.0) > zeta_min:
            j_min -= 1
        return cls(grid=grid, j_min=j_min, j_max=j_max)

    def zeta(self, xi: np.ndarray | None = None) -> np.ndarray:
        if xi is None:
            return np.abs(symbol(self.grid))
        return np.abs(np.sin(np.asarray(xi) * self.grid.h)) / self.grid.h

    @property
    def bands(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def in_band(self, j: int, xi: np.ndarray | None = None) -> np.ndarray:
        """Indicator of F_h(j) = {ξ : ζ(ξ) ∈ 𝒞_j}."""
        lo, hi = annulus(j)
        z = self.zeta(xi)
        return (z >= lo) & (z <= hi)


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    geometry: BandGeometry
    cutoff: Callable[[np.ndarray], np.ndarray] = smooth_cutoff
    _table: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        zeta = self.geometry.zeta()
        rows = [self._phi(j, zeta) for j in self.geometry.bands]
        table = np.vstack(rows)
        table.setflags(write=False)
        object.__setattr__(self, "_table", table)

    @property
    def grid(self) -> Grid:
        return self.geometry.grid

    def _phi(self, j: int, zeta: np.ndarray) -> np.ndarray:
        return self.cutoff(zeta / 2.0 ** (j + 1)) - self.cutoff(zeta / 2.0 ** j)

    def phi(self, j: int, xi: np.ndarray | None = None) -> np.ndarray:
        """φ_j at the discrete frequencies, or at ``xi`` when given."""
        if xi is None and self.geometry.j_min <= j <= self.geometry.j_max:
            return self._table[j - self.geometry.j_min]
        return self._phi(j, self.geometry.zeta(xi))

    @property
    def table(self) -> np.ndarray:
        """Rows φ_{j_min} … φ_{j_max} on the discrete frequencies."""
        return self._table


@lru_cache(maxsize=32)
def default_partition(grid: Grid) -> PartitionOfUnity:
    return PartitionOfUnity(BandGeometry.for_grid(grid))


def _partition(v: GridFunction, p: PartitionOfUnity | None) -> PartitionOfUnity:
    if p is None:
        return default_partition(v.grid)
    if p.grid != v.grid:
        raise PreconditionFailed("partition was built for a different grid")
    return p


# -------------------------
# Localization and norms
# -------------------------

def localize(v: GridFunction, j: int, p: PartitionOfUnity | None = None) -> GridFunction:
    """δ_h^j v = idft(v̂·φ_j)."""
    p = _partition(v, p)
    return spectral_values(v.grid, dft(v).coeffs * p.phi(j), like=v)


def band_norms(v: GridFunction, p: PartitionOfUnity | None = None) -> np.ndarray:
    """‖δ_h^j v‖_{l²_h} for j = j_min … j_max, by Parseval."""
    p = _partition(v, p)
    power = np.abs(dft(v).coeffs) ** 2
    return np.sqrt(v.grid.dxi * (p.table ** 2 @ power))


def _weights(p: PartitionOfUnity, s: float) -> np.ndarray:
    return 2.0 ** (np.arange(p.geometry.j_min, p.geometry.j_max + 1) * float(s))


def besov_norm(v: GridFunction, s: float, p: PartitionOfUnity | None = None) -> float:
    p = _partition(v, p)
    return float(np.sum(_weights(p, s) * band_norms(v, p)))


def _split_masks(p: PartitionOfUnity, kappa: float, eps: float) -> Tuple[np.ndarray, np.ndarray]:
    J = math.log2(kappa / eps)
    if abs(J - round(J)) < 1e-12:
        J = float(round(J))
    js = np.arange(p.geometry.j_min, p.geometry.j_max + 1)
    return js <= J, js >= J


def besov_norm_split(
    v: GridFunction,
    s: float,
    kappa: float,
    eps: float,
    p: PartitionOfUnity | None = None,
) -> Tuple[float, float]:
    """Low (j <= J_ε) and high (j >= J_ε) parts with 2^{J_ε} = κ/ε.

    An integer J_ε puts its band in both sums.
    """
    if kappa <= 0 or eps <= 0:
        raise NonPositiveParameter(f"kappa and eps must be positive, got {kappa}, {eps}")
    p = _partition(v, p)
    terms = _weights(p, s) * band_norms(v, p)
    low, high = _split_masks(p, kappa, eps)
    return float(np.sum(terms[low])), float(np.sum(terms[high]))


def bernstein_split_check(
    v: GridFunction,
    s: float,
    s_prime: float,
    kappa: float,
    eps: float,
    p: PartitionOfUnity | None = None,
) -> Tuple[bool, bool]:
    """Low part of B^s bounded by (κ/ε)^{s'} times low part of B^{s-s'}; high part mirrored."""
    low_s, high_s = besov_norm_split(v, s, kappa, eps, p)
    low_shift, high_shift = besov_norm_split(v, s - s_prime, kappa, eps, p)
    ratio = kappa / eps
    tol = 1e-12
    low_ok = low_s <= ratio ** s_prime * low_shift * (1 + tol) + 1e-300
    high_ok = high_shift <= ratio ** (-s_prime) * high_s * (1 + tol) + 1e-300
    return bool(low_ok), bool(high_ok)


def bernstein_check(
    v: GridFunction, j: int, p: PartitionOfUnity | None = None
) -> Tuple[bool, bool, float]:
    p = _partition(v, p)
    loc = localize(v, j, p)
    norm = loc.l2_norm()
    if norm <= 1e-12 * max(v.l2_norm(), 1e-300):
        raise ZeroLocalization(f"band {j} holds no energy of v")
    ratio = d_central(loc).l2_norm() / norm
    lo, hi = annulus(j)
    return ratio >= lo, ratio <= hi, ratio


def band_measure(j: int, grid: Grid, quad_points: int = 100_000) -> float:
    """Lebesgue measure of F_h(j) ⊂ [-π/h, π/h] by midpoint sampling."""
    if quad_points < 1000:
        raise PreconditionFailed("band_measure needs at least 1000 sample points")
    width = 2.0 * math.pi / grid.h
    step = width / quad_points
    xi = -math.pi / grid.h + (np.arange(quad_points) + 0.5) * step
    geometry = BandGeometry(grid=grid, j_min=j, j_max=j)
    return float(np.count_nonzero(geometry.in_band(j, xi))) * step


def band_table(v: GridFunction, s: float, p: PartitionOfUnity | None = None,
               quad_points: int = 20_000) -> List[Dict[str, float]]:
    """Per-band rows for besov_norm introspection."""
    p = _partition(v, p)
    contrib = _weights(p, s) * band_norms(v, p)
    rows: List[Dict[str, float]] = []
    for j, c in zip(p.geometry.bands, contrib):
        lo, hi = annulus(j)
        rows.append({
            "j": j,
            "band_lo": lo,
            "band_hi": hi,
            "measure": band_measure(j, v.grid, quad_points),
            "norm_contribution": float(c),
        })
    return rows


def linf_embedding_check(v: GridFunction, p: PartitionOfUnity | None = None) -> float:
    """‖v without its ζ = 0 modes‖_{l∞_h} / ‖v‖_{Ḃ^{1/2}_h}."""
    p = _partition(v, p)
    denom = besov_norm(v, 0.5, p)
    if denom <= 0.0:
        raise ZeroNorm("Besov norm of order 1/2 vanishes")
    mask = np.abs(symbol(v.grid)) > 0
    w = spectral_values(v.grid, dft(v).coeffs * mask, like=v)
    return w.linf_norm() / denom


def uniform_besov_check(f_hat: Symbol, s: float, s_prime: float,
                        grids: Sequence[Grid]) -> List[float]:
    """‖T_h f‖_{Ḃ^s_h} / ‖f‖_{H^{s'}(ℝ)} for each grid."""
    if s >= s_prime:
        raise ParameterOrder(f"need s < s', got s={s}, s'={s_prime}")
    if s <= 0:
        raise ParameterOrder(f"need s > 0, got {s}")
    denom = continuous_sobolev_norm(f_hat, s_prime)
    out: List[float] = []
    for grid in grids:
        num = besov_norm(truncate(f_hat, grid), s)
        out.append(0.0 if denom == 0.0 else num / denom)
    return out
