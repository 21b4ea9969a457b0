from __future__ import annotations

import math
from typing import List, Tuple

import numpy as np

from core.config import ExperimentConfig, system_spec
from core.csv_io import write_stability
from core.grid import Grid
from core.models import ExperimentOutcome, StabilityReport
from core.solver import stability_report
from core.system import random_system
from experiments.base import ExperimentHandler, RunContext

RANDOM_PAIRS = 20
SCALAR_POS = (np.array([[1.0]]), np.array([[0.0]]))
SCALAR_NEG = (np.array([[-1.0]]), np.array([[0.0]]))


def stability_cases(cfg: ExperimentConfig, rng: np.random.Generator) -> List[Tuple[str, StabilityReport]]:
    """Central scheme on the configured and on random symmetric systems, one-sided schemes on ±∂x."""
    grid = Grid(h=cfg.grid.h, n_points=cfg.grid.n_points, offset=cfg.grid.offset)
    T = cfg.times.T
    cases = [("system", stability_report("central", system_spec(cfg), T, grid))]
    for k in range(RANDOM_PAIRS):
        N = int(rng.integers(2, 5))
        spec = random_system(rng, N, int(rng.integers(1, N)))
        cases.append((f"random_{k}", stability_report("central", spec, T, grid)))
    for label, pair in (("speed_pos", SCALAR_POS), ("speed_neg", SCALAR_NEG)):
        for scheme in ("plus", "minus", "central"):
            cases.append((label, stability_report(scheme, pair, T, grid)))
    return cases


def trichotomy_holds(cases: List[Tuple[str, StabilityReport]], T: float, h: float) -> bool:
    """Central always stable; the one-sided scheme pointing downwind blows up like e^{T/h}.

    Compared in log space, so long horizons do not overflow.
    """
    log_blowup = T / h - math.log(2.0)
    by_key = {(label, r.scheme): r for label, r in cases}
    central_ok = all(r.stable for _, r in cases if r.scheme == "central")
    downwind = (by_key[("speed_pos", "plus")], by_key[("speed_neg", "minus")])
    upwind = (by_key[("speed_pos", "minus")], by_key[("speed_neg", "plus")])
    return (
        central_ok
        and all(r.log_amplification >= log_blowup for r in downwind)
        and all(r.stable for r in upwind)
    )


class StabilityHandler(ExperimentHandler):
    command = "stability"

    def run(self, cfg: ExperimentConfig, ctx: RunContext) -> ExperimentOutcome:
        rng = np.random.default_rng(ctx.seed)
        cases = stability_cases(cfg, rng)
        files = [str(write_stability(ctx.path("_stability.csv"), cases))]
        passed = trichotomy_holds(cases, cfg.times.T, cfg.grid.h)
        worst_central = max(r.max_amplification for _, r in cases if r.scheme == "central")
        return ExperimentOutcome(
            command=self.command,
            run_id=ctx.run_id,
            passed=passed,
            summary={
                "worst_central_amplification": worst_central,
                "plus_log_amplification": next(r.log_amplification for l, r in cases
                                           if l == "speed_pos" and r.scheme == "plus"),
            },
            files=files,
        )
