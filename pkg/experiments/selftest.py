"""Invariant suites of the discrete Fourier / Littlewood-Paley framework.

Each suite returns a SuiteResult with its worst residual; the run passes iff
every suite does. ``selftest.inject_fault`` swaps in a deliberately broken
ingredient so that the failure path can be exercised end to end.
"""
from __future__ import annotations

import math
from typing import Callable, Dict, List, Optional

import numpy as np

from core.config import ExperimentConfig
from core.csv_io import write_rows
from core.errors import ConfigError
from core.grid import (
    SQRT_2PI,
    Grid,
    GridFunction,
    convolve,
    d_central,
    d_minus,
    d_plus,
    dft,
    idft,
)
from core.lp import BandGeometry, PartitionOfUnity, default_partition, linf_embedding_check, smooth_cutoff
from core.models import ExperimentOutcome, SuiteResult
from experiments.base import ExperimentHandler, RunContext
from experiments.stability import stability_cases, trichotomy_holds

SWEEP_EXPONENTS = range(3, 9)
SWEEP_POINTS = 256
ORACLE_SIZES = (16, 128, 512)
IDENTITY_TOL = 1e-12
PARTITION_TOL = 1e-13

FAULTS = ("partition-of-unity",)

Suite = Callable[[ExperimentConfig, np.random.Generator, Optional[str]], SuiteResult]


def _sweep_grids() -> List[Grid]:
    return [Grid(h=2.0 ** -k, n_points=SWEEP_POINTS) for k in SWEEP_EXPONENTS]


def _config_grid(cfg: ExperimentConfig) -> Grid:
    return Grid(h=cfg.grid.h, n_points=cfg.grid.n_points, offset=cfg.grid.offset)


def _random(grid: Grid, rng: np.random.Generator, complex_values: bool = True) -> GridFunction:
    v = rng.standard_normal(grid.n_points)
    if complex_values:
        v = v + 1j * rng.standard_normal(grid.n_points)
    return GridFunction(grid, v)


def _result(name: str, worst: float, tol: float, detail: str = "") -> SuiteResult:
    return SuiteResult(name=name, passed=bool(worst <= tol), worst_residual=float(worst), detail=detail)


# -------------------------
# Transform identities
# -------------------------

def suite_parseval(cfg, rng, fault) -> SuiteResult:
    worst = 0.0
    for grid in _sweep_grids():
        v = _random(grid, rng)
        worst = max(worst, abs(v.l2_norm() - dft(v).l2_norm()) / v.l2_norm())
    return _result("parseval", worst, IDENTITY_TOL)


def suite_inversion(cfg, rng, fault) -> SuiteResult:
    worst = 0.0
    for grid in _sweep_grids() + [Grid(h=2.0 ** -4, n_points=SWEEP_POINTS, offset=0.3)]:
        v = _random(grid, rng)
        back = idft(dft(v))
        worst = max(worst, float(np.max(np.abs(back.values - v.values))) / v.linf_norm())
    return _result("inversion", worst, IDENTITY_TOL)


def suite_fft_oracle(cfg, rng, fault) -> SuiteResult:
    worst = 0.0
    for n in ORACLE_SIZES:
        grid = Grid(h=2.0 ** -4, n_points=n, offset=0.1)
        v = _random(grid, rng)
        E = np.exp(-1j * np.outer(grid.frequencies(), grid.positions()))
        direct = (grid.h / SQRT_2PI) * (E @ v.values)
        fast = dft(v).coeffs
        worst = max(worst, float(np.max(np.abs(fast - direct))) / float(np.max(np.abs(direct))))
    return _result("fft-oracle", worst, IDENTITY_TOL)


def suite_convolution(cfg, rng, fault) -> SuiteResult:
    worst = 0.0
    for grid in _sweep_grids():
        v, w = _random(grid, rng), _random(grid, rng)
        lhs = dft(convolve(v, w)).coeffs
        rhs = SQRT_2PI * dft(v).coeffs * dft(w).coeffs
        worst = max(worst, float(np.max(np.abs(lhs - rhs))) / float(np.max(np.abs(rhs))))
    return _result("convolution", worst, IDENTITY_TOL)


def suite_ibp(cfg, rng, fault) -> SuiteResult:
    """⟨𝒟v, w⟩ = -⟨v, 𝒟w⟩ and ⟨D₊v, w⟩ = -⟨v, D₋w⟩."""
    worst = 0.0
    for grid in _sweep_grids():
        v, w = _random(grid, rng), _random(grid, rng)
        scale = d_central(v).l2_norm() * w.l2_norm() + v.l2_norm() * d_central(w).l2_norm()
        worst = max(worst, abs(d_central(v).inner(w) + v.inner(d_central(w))) / scale)
        scale = d_plus(v).l2_norm() * w.l2_norm() + v.l2_norm() * d_minus(w).l2_norm()
        worst = max(worst, abs(d_plus(v).inner(w) + v.inner(d_minus(w))) / scale)
    return _result("ibp", worst, IDENTITY_TOL)


# -------------------------
# Littlewood-Paley
# -------------------------

def _partition_for(grid: Grid, fault: Optional[str]) -> PartitionOfUnity:
    if fault == "partition-of-unity":
        # cutoff reaching zero at 4 instead of 4/3: the lowest band no longer closes
        return PartitionOfUnity(BandGeometry.for_grid(grid), cutoff=lambda r: smooth_cutoff(r, 1.0, 4.0))
    return default_partition(grid)


def suite_partition(cfg, rng, fault) -> SuiteResult:
    worst = 0.0
    for grid in _sweep_grids():
        p = _partition_for(grid, fault)
        live = p.geometry.zeta() > 0
        worst = max(worst, float(np.max(np.abs(p.table.sum(axis=0)[live] - 1.0))))
    return _result("partition-of-unity", worst, PARTITION_TOL)


def suite_almost_orthogonality(cfg, rng, fault) -> SuiteResult:
    """φ_j φ_k vanishes identically once |j - k| >= 2."""
    worst = 0.0
    for grid in _sweep_grids():
        table = default_partition(grid).table
        for a in range(table.shape[0]):
            for b in range(a + 2, table.shape[0]):
                worst = max(worst, float(np.max(np.abs(table[a] * table[b]))))
    return _result("almost-orthogonality", worst, 0.0)


def suite_bernstein(cfg, rng, fault) -> SuiteResult:
    """‖𝒟_h δ_j v‖ / ‖δ_j v‖ inside [3/4·2^j, 8/3·2^j] for random v and every active band."""
    grid = _config_grid(cfg)
    p = default_partition(grid)
    trials = cfg.selftest.trials
    V = rng.standard_normal((trials, grid.n_points)) + 1j * rng.standard_normal((trials, grid.n_points))
    power = np.abs(np.vstack([dft(GridFunction(grid, row)).coeffs for row in V])) ** 2
    sig2 = p.geometry.zeta() ** 2
    band_sq = power @ (p.table ** 2).T
    deriv_sq = power @ (p.table ** 2 * sig2).T
    active = band_sq > 1e-24 * power.sum(axis=1, keepdims=True)
    ratio = np.sqrt(np.where(active, deriv_sq, 0.0) / np.where(active, band_sq, 1.0))
    scale = 2.0 ** np.arange(p.geometry.j_min, p.geometry.j_max + 1)
    lo, hi = 0.75 * scale, (8.0 / 3.0) * scale
    margin = np.maximum((lo - ratio) / lo, (ratio - hi) / hi)
    worst = float(np.max(np.where(active, margin, -np.inf)))
    violations = int(np.sum(active & (margin > 0)))
    return _result("bernstein", worst, 0.0,
                   detail=f"{violations} violations over {int(active.sum())} band samples")


def suite_embedding(cfg, rng, fault) -> SuiteResult:
    """l∞ norm against Ḃ^{1/2}, relative to the band-count bound max_j (dξ·#F_j / 2π 2^j)^{1/2}."""
    grid = _config_grid(cfg)
    p = default_partition(grid)
    counts = np.count_nonzero(p.table, axis=1)
    js = np.arange(p.geometry.j_min, p.geometry.j_max + 1)
    bound = float(np.max(np.sqrt(grid.dxi * counts / (2.0 * math.pi) / 2.0 ** js)))
    worst = 0.0
    for _ in range(20):
        worst = max(worst, linf_embedding_check(_random(grid, rng, complex_values=False), p) / bound)
    return _result("embedding", worst, 1.0 + 1e-12, detail=f"bound {bound:.4g}")


def suite_stability(cfg, rng, fault) -> SuiteResult:
    cases = stability_cases(cfg, rng)
    worst = max(r.max_amplification for _, r in cases if r.scheme == "central")
    ok = trichotomy_holds(cases, cfg.times.T, cfg.grid.h)
    return SuiteResult(name="stability", passed=ok, worst_residual=worst - 1.0,
                       detail="central stable, downwind one-sided unstable" if ok else "trichotomy broken")


SUITES: Dict[str, Suite] = {
    "parseval": suite_parseval,
    "inversion": suite_inversion,
    "fft-oracle": suite_fft_oracle,
    "convolution": suite_convolution,
    "ibp": suite_ibp,
    "partition-of-unity": suite_partition,
    "almost-orthogonality": suite_almost_orthogonality,
    "bernstein": suite_bernstein,
    "embedding": suite_embedding,
    "stability": suite_stability,
}


class SelftestHandler(ExperimentHandler):
    command = "selftest"

    def run(self, cfg: ExperimentConfig, ctx: RunContext) -> ExperimentOutcome:
        fault = cfg.selftest.inject_fault
        if fault is not None and fault not in FAULTS:
            raise ConfigError(f"no fault known for '{fault}' (have {', '.join(FAULTS)})",
                              key="selftest.inject_fault")
        rng = np.random.default_rng(ctx.seed)
        results: List[SuiteResult] = []
        for name, suite in SUITES.items():
            res = suite(cfg, rng, fault)
            results.append(res)
            ctx.event("suite_result", res.model_dump())
            print(f"{'PASS' if res.passed else 'FAIL'} {name:<22} worst={res.worst_residual:.3e} {res.detail}")

        path = write_rows(ctx.path("_selftest.csv"), ["suite", "passed", "worst_residual"],
                          ([r.name, int(r.passed), r.worst_residual] for r in results))
        failed = [r.name for r in results if not r.passed]
        return ExperimentOutcome(
            command=self.command,
            run_id=ctx.run_id,
            passed=not failed,
            summary={r.name: r.worst_residual for r in results},
            files=[str(path)],
            notes=[f"failed: {', '.join(failed)}"] if failed else [],
            failed_suite=failed[0] if failed else None,
        )
