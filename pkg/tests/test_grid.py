from __future__ import annotations

import math

import numpy as np
import pytest

from core.errors import GridMismatch, NonFiniteSymbol, PreconditionFailed
from core.grid import (
    SQRT_2PI,
    Grid,
    GridFunction,
    SpectralFunction,
    boundary_mass_fraction,
    convolve,
    d_central,
    d_minus,
    d_plus,
    dft,
    idft,
    multiplier,
    sobolev_norm,
    symbol,
    truncate,
)
from core.profiles import gaussian_profile

SWEEP = [2.0 ** -k for k in range(3, 9)]


def _direct_dft(v: GridFunction) -> np.ndarray:
    g = v.grid
    E = np.exp(-1j * np.outer(g.frequencies(), g.positions()))
    return (g.h / SQRT_2PI) * (E @ v.values)


def _delta(grid: Grid) -> GridFunction:
    vals = np.zeros(grid.n_points)
    vals[grid.n_points // 2] = 1.0 / grid.h
    return GridFunction(grid, vals)


# -------------------------
# Grid
# -------------------------

@pytest.mark.parametrize("h, n", [(0.0, 16), (-1.0, 16), (0.1, 7), (0.1, 6), (0.1, 15), (math.inf, 16)])
def test_grid_rejects_bad_parameters(h, n):
    with pytest.raises(PreconditionFailed):
        Grid(h=h, n_points=n)


def test_frequencies_cover_half_open_nyquist_interval(grid):
    xi = grid.frequencies()
    assert xi[0] == pytest.approx(-math.pi / grid.h)
    assert np.all(xi < math.pi / grid.h)
    assert xi[grid.n_points // 2] == 0.0
    np.testing.assert_allclose(np.diff(xi), grid.dxi)


def test_symbol_has_exact_zeros(grid):
    sigma = symbol(grid)
    assert sigma[0] == 0.0 and sigma[grid.n_points // 2] == 0.0
    assert np.count_nonzero(sigma == 0.0) == 2


def test_refined_grid_keeps_the_window():
    g = Grid(h=2.0 ** -4, n_points=1024, offset=-1.25)
    fine = g.refined(2.0 ** -6)
    assert fine.n_points == 4096 and fine.offset == -1.25
    assert fine.window_half_length == g.window_half_length


def test_grid_function_is_immutable_and_checks_shape(grid):
    v = GridFunction.zeros(grid)
    with pytest.raises(ValueError):
        v.values[0] = 1.0
    with pytest.raises(PreconditionFailed):
        GridFunction(grid, np.zeros(grid.n_points + 2))


def test_l2_norm_and_inner(grid, random_function):
    v = random_function(grid)
    assert v.l2_norm() ** 2 == pytest.approx(grid.h * np.sum(np.abs(v.values) ** 2), rel=1e-14)
    assert v.inner(v) == pytest.approx(v.l2_norm() ** 2, rel=1e-13)


def test_arithmetic_requires_same_grid(grid):
    other = Grid(h=grid.h, n_points=grid.n_points, offset=0.5)
    with pytest.raises(GridMismatch):
        GridFunction.zeros(grid) + GridFunction.zeros(other)


# -------------------------
# Transforms
# -------------------------

def test_scaled_delta_has_flat_transform(grid):
    np.testing.assert_allclose(dft(_delta(grid)).coeffs, 1.0 / SQRT_2PI, atol=1e-13)


def test_zero_maps_to_zero(grid):
    assert np.all(dft(GridFunction.zeros(grid)).coeffs == 0)
    assert np.all(idft(SpectralFunction(grid, np.zeros(grid.n_points))).values == 0)


@pytest.mark.parametrize("n", [8, 64, 256, 512])
@pytest.mark.parametrize("offset", [0.0, 0.37, -1.25])
def test_fast_transform_matches_direct_sum(n, offset, random_function):
    g = Grid(h=2.0 ** -3, n_points=n, offset=offset)
    v = random_function(g)
    direct = _direct_dft(v)
    np.testing.assert_allclose(dft(v).coeffs, direct, rtol=0, atol=1e-12 * np.max(np.abs(direct)))


@pytest.mark.parametrize("h", SWEEP)
@pytest.mark.parametrize("n", [256, 8192])
def test_parseval(h, n, random_function):
    v = random_function(Grid(h=h, n_points=n))
    c = dft(v).coeffs
    assert v.l2_norm() ** 2 == pytest.approx(v.grid.dxi * np.sum(np.abs(c) ** 2), rel=1e-12)


@pytest.mark.parametrize("offset", [0.0, 0.3])
def test_inversion(offset, random_function):
    v = random_function(Grid(h=2.0 ** -5, n_points=512, offset=offset))
    np.testing.assert_allclose(idft(dft(v)).values, v.values, atol=1e-12 * v.linf_norm())


def test_single_coefficient_is_a_plane_wave(grid):
    k = 37
    c = np.zeros(grid.n_points, dtype=complex)
    c[k] = 1.0
    v = idft(SpectralFunction(grid, c))
    x, xi = grid.positions(), grid.frequencies()[k]
    expected = grid.dxi / SQRT_2PI * np.exp(1j * xi * x)
    np.testing.assert_allclose(v.values, expected, atol=1e-13)


# -------------------------
# Finite differences
# -------------------------

def test_central_difference_of_constant_vanishes(grid):
    v = GridFunction(grid, np.full(grid.n_points, 3.5))
    assert np.all(d_central(v).values == 0)


def test_central_difference_of_cosine(grid):
    xi = grid.frequencies()[grid.n_points // 2 + 5]
    x = grid.positions()
    v = GridFunction(grid, np.cos(xi * x))
    expected = -(math.sin(xi * grid.h) / grid.h) * np.sin(xi * x)
    np.testing.assert_allclose(d_central(v).values, expected, atol=1e-12)


@pytest.mark.parametrize("h", SWEEP)
def test_integration_by_parts(h, random_function):
    g = Grid(h=h, n_points=256)
    u, v = random_function(g), random_function(g)
    scale = d_central(u).l2_norm() * v.l2_norm()
    assert abs(u.inner(d_central(v)) + d_central(u).inner(v)) <= 1e-12 * scale
    w = random_function(g, complex_values=False)
    assert abs(w.inner(d_central(w))) <= 1e-12 * d_central(w).l2_norm() * w.l2_norm()


def test_difference_symbols(grid, random_function):
    v = random_function(grid)
    c = dft(v).coeffs
    xi, h = grid.frequencies(), grid.h
    tol = 1e-13 * np.max(np.abs(c)) / h
    np.testing.assert_allclose(dft(d_central(v)).coeffs, 1j * np.sin(xi * h) / h * c, atol=tol)
    np.testing.assert_allclose(dft(d_plus(v)).coeffs, (np.exp(1j * xi * h) - 1) / h * c, atol=tol)
    np.testing.assert_allclose(dft(d_minus(v)).coeffs, (1 - np.exp(-1j * xi * h)) / h * c, atol=tol)


def test_central_is_mean_of_one_sided(grid, random_function):
    v = random_function(grid, complex_values=False)
    mean = (d_plus(v).values + d_minus(v).values) / 2.0
    scale = v.linf_norm() / grid.h
    np.testing.assert_allclose(d_central(v).values, mean, rtol=0, atol=8 * np.finfo(float).eps * scale)


# -------------------------
# Multipliers and Sobolev norms
# -------------------------

def test_multiplier_identity_and_central_symbol(grid, random_function):
    v = random_function(grid, complex_values=False)
    same = multiplier(v, lambda xi: np.ones_like(xi))
    assert same.is_real
    np.testing.assert_allclose(same.values, v.values, atol=1e-12 * v.linf_norm())
    d = multiplier(v, lambda xi: 1j * np.sin(xi * grid.h) / grid.h)
    np.testing.assert_allclose(d.values, d_central(v).values, atol=1e-12 * d_central(v).linf_norm())


def test_multiplier_square_matches_double_difference(grid, random_function):
    v = random_function(grid)
    m = multiplier(v, lambda xi: np.abs(np.sin(xi * grid.h) / grid.h) ** 2)
    dd = d_central(d_central(v))
    np.testing.assert_allclose(m.values, -dd.values, atol=1e-11 * dd.linf_norm())


def test_multiplier_rejects_infinite_symbol(grid, gaussian_on):
    with np.errstate(divide="ignore"):
        with pytest.raises(NonFiniteSymbol):
            multiplier(gaussian_on(), lambda xi: 1.0 / xi)


def test_sobolev_norms(grid, random_function):
    v = random_function(grid)
    assert sobolev_norm(v, 1.0) == pytest.approx(d_central(v).l2_norm(), rel=1e-12)
    c = dft(v).coeffs
    keep = symbol(grid) != 0
    assert sobolev_norm(v, 0.0) == pytest.approx(math.sqrt(grid.dxi * np.sum(np.abs(c[keep]) ** 2)), rel=1e-12)
    full = sobolev_norm(v, 1.0, homogeneous=False)
    assert full == pytest.approx(math.hypot(v.l2_norm(), d_central(v).l2_norm()), rel=1e-12)
    assert math.isfinite(sobolev_norm(v, -1.0))


# -------------------------
# Truncation and convolution
# -------------------------

def test_truncate_zero(grid):
    assert np.all(truncate(lambda xi: np.zeros_like(xi), grid).values == 0)


def test_truncated_gaussian_converges_to_samples():
    prof = gaussian_profile(0.1)
    errors = []
    for k in (2, 4, 6):
        g = Grid(h=2.0 ** -k, n_points=16 * 2 ** k)
        v = truncate(prof.transform, g)
        errors.append(float(np.max(np.abs(v.values - prof(g.positions())))))
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 1e-12


def test_truncate_reproduces_transform_and_parseval(grid):
    prof = gaussian_profile(0.7)
    v = truncate(prof.transform, grid)
    target = prof.transform(grid.frequencies())
    np.testing.assert_allclose(dft(v).coeffs, target, atol=1e-12)
    assert v.l2_norm() ** 2 == pytest.approx(grid.dxi * np.sum(np.abs(target) ** 2), rel=1e-10)


def test_truncate_rejects_non_finite(grid):
    with pytest.raises(NonFiniteSymbol):
        truncate(lambda xi: np.full_like(xi, np.nan), grid)


def test_convolution_unit_and_commutativity(grid, random_function):
    v, w = random_function(grid), random_function(grid)
    np.testing.assert_allclose(convolve(v, _delta(grid)).values, v.values, atol=1e-12 * v.linf_norm())
    np.testing.assert_allclose(convolve(v, w).values, convolve(w, v).values, atol=1e-12 * v.linf_norm() * w.linf_norm())


@pytest.mark.parametrize("offset", [0.0, 0.75])
def test_convolution_theorem(offset, random_function):
    g = Grid(h=2.0 ** -5, n_points=256, offset=offset)
    v, w = random_function(g), random_function(g)
    lhs = dft(convolve(v, w)).coeffs
    rhs = SQRT_2PI * np.exp(-1j * g.frequencies() * offset) * dft(v).coeffs * dft(w).coeffs
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * np.max(np.abs(rhs)))


def test_convolution_needs_one_grid(grid):
    with pytest.raises(GridMismatch):
        convolve(GridFunction.zeros(grid), GridFunction.zeros(Grid(h=grid.h / 2, n_points=grid.n_points)))


def test_boundary_mass_fraction(grid, gaussian_on):
    assert boundary_mass_fraction(gaussian_on()) < 1e-12
    edge = np.zeros(grid.n_points)
    edge[0] = 1.0
    assert boundary_mass_fraction(GridFunction(grid, edge)) == 1.0
    assert boundary_mass_fraction(GridFunction.zeros(grid)) == 0.0
