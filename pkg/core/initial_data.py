from __future__ import annotations

import math
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.integrate import quad_vec

from .errors import PreconditionFailed, SupportOverflow
from .grid import Grid, GridFunction, dft, truncate
from .lp import smooth_cutoff
from .profiles import SQRT_2PI, ContinuousProfile

DECAY_REGULARIZATION = 1e-6
WINDOW_MARGIN = 0.05  # share of the window kept clear at each edge
RHO_BUMP_CENTER = 1.0
U_BUMP_CENTER = 1.5
QUAD_EPSABS = 1e-12


# -------------------------
# Bumps
# -------------------------

def bump(y: np.ndarray) -> np.ndarray:
    """e^{-1/(1-y²)} on (-1, 1), zero outside."""
    y = np.asarray(y, dtype=float)
    gap = 1.0 - y * y
    inside = gap > 0
    out = np.zeros_like(y)
    out[inside] = np.exp(-1.0 / gap[inside])
    return out


def _bump_cosine_transform(xi: np.ndarray) -> np.ndarray:
    """(2/√(2π)) ∫_0^1 bump(y) cos(ξy) dy, even in ξ."""
    xi = np.abs(np.atleast_1d(np.asarray(xi, dtype=float)))
    uniq, inverse = np.unique(xi, return_inverse=True)
    res, _ = quad_vec(
        lambda y: bump(np.array([y]))[0] * np.cos(uniq * y),
        0.0,
        1.0,
        epsabs=QUAD_EPSABS,
        epsrel=1e-10,
        limit=20_000,
    )
    return (2.0 / SQRT_2PI) * np.asarray(res)[inverse]


def bump_profile(center: float, name: str) -> ContinuousProfile:
    def transform(xi: np.ndarray) -> np.ndarray:
        xi_arr = np.asarray(xi, dtype=float)
        flat = xi_arr.ravel()
        vals = np.exp(-1j * flat * center) * _bump_cosine_transform(flat)
        return vals.reshape(xi_arr.shape)

    return ContinuousProfile(
        name=name,
        func=lambda x: bump(np.asarray(x) - center),
        transform=transform,
        support=(center - 1.0, center + 1.0),
    )


def relax_profiles() -> Tuple[ContinuousProfile, ContinuousProfile]:
    """Density and velocity bumps on (0, 2) and (0.5, 2.5)."""
    return bump_profile(RHO_BUMP_CENTER, "rho_bump"), bump_profile(U_BUMP_CENTER, "u_bump")


# -------------------------
# Decay data
# -------------------------

def _bridge(x: np.ndarray) -> np.ndarray:
    """C∞ cutoff: 1 on [-1, 1], 0 outside [-2, 2]."""
    ax = np.abs(np.asarray(x, dtype=float))

    def s(t: np.ndarray) -> np.ndarray:
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = np.exp(-1.0 / t[pos])
        return out

    a, b = s(2.0 - ax), s(ax - 1.0)
    return a / (a + b)


def _power_profile(x: np.ndarray, shift: float) -> np.ndarray:
    return (np.asarray(x, dtype=float) ** 2 + shift) ** -0.25


def decay_values(x: np.ndarray, L: float) -> np.ndarray:
    """(x² + 10⁻⁶)^{-1/4} cut off smoothly between L/2 and 3L/4."""
    x = np.asarray(x, dtype=float)
    return _power_profile(x, DECAY_REGULARIZATION) * smooth_cutoff(np.abs(x), 0.5 * L, 0.75 * L)


def _peak(x: np.ndarray) -> np.ndarray:
    # the nearly singular part near 0; what is left of the data is smooth
    return (_power_profile(x, DECAY_REGULARIZATION) - _power_profile(x, 1.0)) * _bridge(x)


def _peak_transform(xi: np.ndarray) -> np.ndarray:
    xi = np.abs(np.asarray(xi, dtype=float))
    uniq, inverse = np.unique(xi, return_inverse=True)
    res, _ = quad_vec(
        lambda x: _peak(np.array([x]))[0] * np.cos(uniq * x),
        0.0,
        2.0,
        epsabs=QUAD_EPSABS,
        epsrel=1e-10,
        limit=20_000,
        points=[1e-3, 1e-2, 1e-1, 1.0],
    )
    return (2.0 / SQRT_2PI) * np.asarray(res)[inverse]


def decay_transform(grid: Grid) -> np.ndarray:
    """Continuous transform of the decay data at the discrete frequencies of ``grid``.

    The peak near the origin is integrated adaptively; the smooth remainder is
    transformed on a 4x finer grid over the same window, whose frequency lattice
    contains the coarse one.
    """
    L = grid.window_half_length
    fine = Grid(h=grid.h / 4.0, n_points=4 * grid.n_points, offset=grid.offset)
    x = fine.positions()
    remainder = GridFunction(fine, decay_values(x, L) - _peak(x))
    start = fine.n_points // 2 - grid.n_points // 2
    smooth_part = dft(remainder).coeffs[start:start + grid.n_points]
    return smooth_part + _peak_transform(grid.frequencies())


# -------------------------
# Entry point
# -------------------------

def _check_support(grid: Grid, lo: float, hi: float) -> None:
    x = grid.positions()
    pad = WINDOW_MARGIN * 2.0 * grid.window_half_length
    if lo < x[0] + pad or hi > x[-1] - pad:
        raise SupportOverflow(
            f"data support [{lo:g}, {hi:g}] does not fit the window "
            f"[{x[0]:g}, {x[-1]:g}] with a {WINDOW_MARGIN:.0%} margin"
        )


@lru_cache(maxsize=16)
def make_initial_data(name: str, grid: Grid) -> Tuple[GridFunction, GridFunction]:
    """(ρ₀, u₀) = T_h of the named continuous data."""
    if name == "decay_data":
        L = grid.window_half_length
        _check_support(grid, -0.75 * L, 0.75 * L)
        coeffs = decay_transform(grid)
        rho0 = truncate(lambda xi: coeffs, grid)
        return rho0, rho0
    if name == "relax_data":
        rho_star, u_star = relax_profiles()
        _check_support(grid, rho_star.support[0], u_star.support[1])
        return truncate(rho_star.transform, grid), truncate(u_star.transform, grid)
    raise PreconditionFailed(f"unknown initial data '{name}'")
