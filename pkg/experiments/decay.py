from __future__ import annotations

import numpy as np

from core.analysis import choose_corrector_constants, decay_constant, decay_rate_fit, decay_record
from core.config import ExperimentConfig, system_spec
from core.csv_io import write_decay, write_fit_report
from core.grid import Grid
from core.initial_data import make_initial_data
from core.models import ExperimentOutcome
from core.solver import VectorGridFunction
from core.system import require_kalman
from experiments.base import ExperimentHandler, RunContext

SLOPE_RANGE = (-0.55, -0.45)
LYAPUNOV_RTOL = 1e-9


class DecayHandler(ExperimentHandler):
    command = "decay"

    def run(self, cfg: ExperimentConfig, ctx: RunContext) -> ExperimentOutcome:
        spec = system_spec(cfg)
        cert = require_kalman(spec)
        ctx.event("kalman_checked", {"rank": cert.numerical_rank, "N": spec.N})

        grid = Grid(h=cfg.grid.h, n_points=cfg.grid.n_points, offset=cfg.grid.offset)
        rho0, _ = make_initial_data("decay_data", grid)
        U0 = VectorGridFunction(tuple(rho0 for _ in range(spec.N)))
        consts = choose_corrector_constants(spec)
        times = cfg.times.sample_times()
        record = decay_record(spec, U0, times, consts)
        ctx.event("solve_done", {"samples": len(record.times), "h": grid.h, "n_points": grid.n_points})

        fit = decay_rate_fit(record, cfg.times.fit_lo, cfg.times.fit_hi)
        ctx.event("fit_done", fit.model_dump())
        L = np.asarray(record.lyapunov)
        monotone = bool(np.all(np.diff(L) <= LYAPUNOV_RTOL * L[0]))

        files = [
            str(write_decay(ctx.path("_decay.csv"), record)),
            str(write_fit_report(ctx.path("_decay_fit.txt"), {"decay": fit})),
        ]
        passed = SLOPE_RANGE[0] <= fit.slope <= SLOPE_RANGE[1]
        notes = [f"fit window [{cfg.times.fit_lo:g}, {cfg.times.fit_hi:g}], target slope -1/2"]
        if not monotone:
            notes.append("Lyapunov functional increased between samples")
        return ExperimentOutcome(
            command=self.command,
            run_id=ctx.run_id,
            passed=passed,
            summary={
                "slope": fit.slope,
                "stderr": fit.stderr,
                "r_squared": fit.r_squared,
                "decay_constant": decay_constant(record),
                "eta0": consts.eta0,
                "eps_k": consts.eps_k,
                "lyapunov_monotone": monotone,
            },
            files=files,
            notes=notes,
        )
