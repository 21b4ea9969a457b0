from __future__ import annotations

import math

import numpy as np
import pytest

from core.errors import NonPositiveParameter, ParameterOrder, PreconditionFailed, ZeroLocalization, ZeroNorm
from core.grid import Grid, GridFunction, SpectralFunction, d_central, dft, idft, sobolev_norm, symbol
from core.initial_data import relax_profiles
from core.lp import (
    BandGeometry,
    PartitionOfUnity,
    annulus,
    band_measure,
    band_norms,
    band_table,
    bernstein_check,
    bernstein_split_check,
    besov_norm,
    besov_norm_split,
    default_partition,
    linf_embedding_check,
    localize,
    smooth_cutoff,
    uniform_besov_check,
)
from core.profiles import gaussian_profile

SWEEP = [2.0 ** -k for k in range(3, 9)]


def _from_mask(grid: Grid, mask: np.ndarray, rng: np.random.Generator) -> GridFunction:
    c = np.zeros(grid.n_points, dtype=complex)
    c[mask] = rng.standard_normal(mask.sum()) + 1j * rng.standard_normal(mask.sum())
    return idft(SpectralFunction(grid, c))


def _single_band(grid: Grid, j: int, rng: np.random.Generator) -> GridFunction:
    """Spectrum where ζ lies in (4/3·2^j, 3/2·2^j), seen by band j alone."""
    zeta = np.abs(symbol(grid))
    mask = (zeta > 4.0 / 3.0 * 2.0 ** j) & (zeta < 1.5 * 2.0 ** j)
    assert mask.any()
    return _from_mask(grid, mask, rng)


# -------------------------
# Geometry and partition
# -------------------------

def test_cutoff_shape():
    r = np.array([0.0, 0.5, 1.0, 7.0 / 6.0, 4.0 / 3.0, 2.0])
    chi = smooth_cutoff(r)
    np.testing.assert_allclose(chi, [1.0, 1.0, 1.0, 0.5, 0.0, 0.0], atol=1e-15)
    fine = smooth_cutoff(np.linspace(0, 2, 2001))
    assert np.all(np.diff(fine) <= 0)


def test_band_range_for_sixteenth(grid):
    geo = BandGeometry.for_grid(grid)
    assert geo.j_max == 4  # 3/4·16 <= 16 < 3/4·32
    zeta_min = np.min(geo.zeta()[geo.zeta() > 0])
    assert 4.0 / 3.0 * 2.0 ** geo.j_min <= zeta_min < 8.0 / 3.0 * 2.0 ** geo.j_min


@pytest.mark.parametrize("h", SWEEP)
def test_partition_sums_to_one(h):
    p = default_partition(Grid(h=h, n_points=256))
    total = p.table.sum(axis=0)
    live = p.geometry.zeta() > 0
    np.testing.assert_allclose(total[live], 1.0, atol=1e-14)
    assert np.all(total[~live] == 0.0)
    assert p.table.min() >= 0.0 and p.table.max() <= 1.0


@pytest.mark.parametrize("h", SWEEP)
def test_support_inside_annulus(h):
    p = default_partition(Grid(h=h, n_points=256))
    zeta = p.geometry.zeta()
    for j, row in zip(p.geometry.bands, p.table):
        lo, hi = annulus(j)
        on = row > 0
        assert np.all((zeta[on] >= lo) & (zeta[on] <= hi))
        assert np.all(p.geometry.in_band(j)[on])


def test_bands_just_outside_the_range_are_empty(grid):
    p = default_partition(grid)
    assert np.all(p.phi(p.geometry.j_min - 1) == 0)
    assert np.all(p.phi(p.geometry.j_max + 1) == 0)


def test_partition_is_read_only(grid):
    with pytest.raises(ValueError):
        default_partition(grid).table[0, 0] = 2.0


def test_partition_for_other_grid_rejected(grid, random_function):
    other = default_partition(Grid(h=grid.h, n_points=2 * grid.n_points))
    with pytest.raises(PreconditionFailed):
        localize(random_function(grid), 0, other)


# -------------------------
# Localization
# -------------------------

def test_single_band_function_is_its_own_localization(grid, rng):
    v = _single_band(grid, 2, rng)
    np.testing.assert_allclose(localize(v, 2).values, v.values, atol=1e-13 * v.linf_norm())
    for j in default_partition(grid).geometry.bands:
        if abs(j - 2) >= 2:
            assert np.max(np.abs(localize(v, j).values)) <= 1e-14 * v.linf_norm()
    for s in (0.0, 0.5, 1.5):
        assert besov_norm(v, s) == pytest.approx(2.0 ** (2 * s) * v.l2_norm(), rel=1e-12)


def test_localizations_sum_to_function_without_zero_modes(grid, random_function):
    v = random_function(grid)
    total = sum((localize(v, j) for j in default_partition(grid).geometry.bands), GridFunction.zeros(grid))
    c = dft(v).coeffs * (symbol(grid) != 0)
    expected = idft(SpectralFunction(grid, c))
    np.testing.assert_allclose(total.values, expected.values, atol=1e-12 * v.linf_norm())


def test_almost_orthogonality(grid, random_function):
    v = random_function(grid)
    bands = list(default_partition(grid).geometry.bands)
    for j in bands:
        lj = localize(v, j)
        for k in bands:
            if abs(j - k) >= 2:
                assert np.max(np.abs(localize(lj, k).values)) <= 1e-14 * v.linf_norm()


def test_zero_function(grid):
    z = GridFunction.zeros(grid)
    assert np.all(localize(z, 0).values == 0)
    assert besov_norm(z, 1.0) == 0.0
    assert np.all(band_norms(z) == 0)


# -------------------------
# Norms
# -------------------------

def test_band_norms_match_localized_norms(grid, random_function):
    v = random_function(grid)
    direct = [localize(v, j).l2_norm() for j in default_partition(grid).geometry.bands]
    np.testing.assert_allclose(band_norms(v), direct, rtol=1e-12)


def test_besov_dominates_covered_l2_norm(grid, random_function):
    v = random_function(grid)
    covered = sobolev_norm(v, 0.0)
    assert besov_norm(v, 0.0) >= covered * (1 - 1e-12)


@pytest.mark.parametrize("s", [0.0, 0.5, 1.0, 2.0])
def test_sobolev_bounded_by_besov(s, grid, random_function):
    v = random_function(grid)
    assert sobolev_norm(v, s) <= (8.0 / 3.0) ** s * besov_norm(v, s) * (1 + 1e-12)


def test_split_extremes(grid, random_function):
    v = random_function(grid)
    p = default_partition(grid)
    full = besov_norm(v, 1.0)
    kappa = 0.5
    low, high = besov_norm_split(v, 1.0, kappa, 1.5 * kappa * 2.0 ** -p.geometry.j_min)
    assert low == 0.0 and high == pytest.approx(full, rel=1e-14)
    low, high = besov_norm_split(v, 1.0, kappa, kappa * 2.0 ** (-p.geometry.j_max - 1))
    assert high == 0.0 and low == pytest.approx(full, rel=1e-14)


def test_split_counts_integer_boundary_band_twice(grid, random_function):
    v = random_function(grid)
    p = default_partition(grid)
    terms = 2.0 ** np.arange(p.geometry.j_min, p.geometry.j_max + 1) * band_norms(v)
    J = 1
    low, high = besov_norm_split(v, 1.0, 0.5, 0.5 * 2.0 ** -J)
    assert low + high == pytest.approx(terms.sum() + terms[J - p.geometry.j_min], rel=1e-13)
    low, high = besov_norm_split(v, 1.0, 0.5, 0.5 * 2.0 ** -1.5)
    assert low + high == pytest.approx(terms.sum(), rel=1e-13)


def test_split_rejects_non_positive(grid, random_function):
    with pytest.raises(NonPositiveParameter):
        besov_norm_split(random_function(grid), 1.0, 0.0, 0.1)
    with pytest.raises(NonPositiveParameter):
        besov_norm_split(random_function(grid), 1.0, 0.5, -0.1)


@pytest.mark.parametrize("eps", [0.3, 0.05, 0.01])
def test_bernstein_split_inequalities(eps, grid, random_function):
    low_ok, high_ok = bernstein_split_check(random_function(grid), 2.25, 1.0, 0.5, eps)
    assert low_ok and high_ok


# -------------------------
# Bernstein
# -------------------------

def test_bernstein_on_single_mode(grid):
    # ξh = π/2 gives ζ = 1/h = 16 = 2^4, which band 3 carries
    c = np.zeros(grid.n_points, dtype=complex)
    c[grid.n_points // 2 + grid.n_points // 4] = 1.0
    v = idft(SpectralFunction(grid, c))
    lower_ok, upper_ok, ratio = bernstein_check(v, 3)
    assert lower_ok and upper_ok
    assert ratio == pytest.approx(16.0, rel=1e-12)
    with pytest.raises(ZeroLocalization):
        bernstein_check(v, 0)


def test_bernstein_on_random_functions(grid, rng):
    p = default_partition(grid)
    for _ in range(50):
        v = GridFunction(grid, rng.standard_normal(grid.n_points))
        for j in p.geometry.bands:
            if p.phi(j).max() < 0.5:
                continue  # no mode sits well inside the band
            lower_ok, upper_ok, ratio = bernstein_check(v, j, p)
            assert lower_ok and upper_ok, (j, ratio)


def test_bernstein_ratio_matches_definition(grid, random_function):
    v = random_function(grid)
    loc = localize(v, 2)
    _, _, ratio = bernstein_check(v, 2)
    assert ratio == pytest.approx(d_central(loc).l2_norm() / loc.l2_norm(), rel=1e-12)


# -------------------------
# Measures and embeddings
# -------------------------

def test_band_measure_empty_above_top(grid):
    j = BandGeometry.for_grid(grid).j_max + 1
    assert band_measure(j, grid) == 0.0


def test_band_measure_scales_like_two_to_the_j():
    worst = 0.0
    for h in SWEEP:
        g = Grid(h=h, n_points=256)
        geo = BandGeometry.for_grid(g)
        for j in geo.bands:
            worst = max(worst, band_measure(j, g, 20_000) / 2.0 ** j)
    assert 0.0 < worst <= 16.0


def test_band_measure_is_symmetric(grid):
    geo = BandGeometry(grid=grid, j_min=2, j_max=2)
    n = 200_000
    step = 2.0 * math.pi / grid.h / n
    xi = -math.pi / grid.h + (np.arange(n) + 0.5) * step
    inside = geo.in_band(2, xi)
    positive = np.count_nonzero(inside & (xi > 0)) * step
    assert positive == pytest.approx(0.5 * band_measure(2, grid, n), rel=1e-3)


def test_band_measure_needs_enough_points(grid):
    with pytest.raises(PreconditionFailed):
        band_measure(0, grid, quad_points=999)


def test_band_table_rows(grid, random_function):
    v = random_function(grid)
    rows = band_table(v, 1.0, quad_points=5000)
    assert len(rows) == len(default_partition(grid).geometry.bands)
    assert set(rows[0]) == {"j", "band_lo", "band_hi", "measure", "norm_contribution"}
    assert sum(r["norm_contribution"] for r in rows) == pytest.approx(besov_norm(v, 1.0), rel=1e-12)


def test_linf_embedding_bounded_across_grids(rng):
    worst = 0.0
    for h in SWEEP:
        g = Grid(h=h, n_points=256)
        for _ in range(10):
            v = GridFunction(g, rng.standard_normal(g.n_points))
            worst = max(worst, linf_embedding_check(v))
    assert worst <= 3.0


def test_linf_embedding_zero(grid):
    with pytest.raises(ZeroNorm):
        linf_embedding_check(GridFunction.zeros(grid))


# -------------------------
# Uniform estimates for truncated data
# -------------------------

def _window_grids(exponents, length: float = 32.0, offset: float = 0.0):
    return [Grid(h=2.0 ** -k, n_points=int(length * 2 ** k), offset=offset) for k in exponents]


def test_uniform_besov_for_gaussian():
    ratios = uniform_besov_check(gaussian_profile().transform, 1.0, 2.0, _window_grids(range(3, 9)))
    assert max(ratios) <= 1.2 * min(ratios)


def test_uniform_besov_for_bump():
    rho_star, _ = relax_profiles()
    grids = _window_grids(range(3, 8), offset=-1.25)
    ratios = uniform_besov_check(rho_star.transform, 1.0, 2.0, grids)
    assert max(ratios) <= 1.2 * min(ratios)


def test_uniform_besov_zero_and_order():
    grids = _window_grids([3, 4])
    assert uniform_besov_check(lambda xi: np.zeros_like(xi), 1.0, 2.0, grids) == [0.0, 0.0]
    with pytest.raises(ParameterOrder):
        uniform_besov_check(gaussian_profile().transform, 2.0, 2.0, grids)
    with pytest.raises(ParameterOrder):
        uniform_besov_check(gaussian_profile().transform, 0.0, 2.0, grids)


def test_custom_cutoff_is_used(grid):
    p = PartitionOfUnity(BandGeometry.for_grid(grid), cutoff=lambda r: smooth_cutoff(r, 1.0, 4.0))
    live = p.geometry.zeta() > 0
    assert np.max(np.abs(p.table.sum(axis=0)[live] - 1.0)) > 0.1
