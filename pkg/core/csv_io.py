from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, List, Mapping, Sequence

import numpy as np

from .grid import GridFunction
from .models import DecayRecord, RelaxationErrorRecord, SlopeFit, StabilityReport

RELAX_COLUMNS = ["eps", "h", "T", "sup_besov", "l1t_besov", "darcy_besov", "sup_linf", "darcy_linf"]
STABILITY_COLUMNS = ["case", "scheme", "max_amplification", "log_amplification", "stable", "worst_frequency"]


def _fmt(v: object) -> str:
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_rows(path: Path) -> List[dict]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_grid_function(path: Path, v: GridFunction) -> Path:
    """``x,value`` for real data, ``x,re,im`` otherwise."""
    x = v.positions
    if v.is_real:
        return write_rows(path, ["x", "value"], zip(x, np.real(v.values)))
    return write_rows(path, ["x", "re", "im"], zip(x, v.values.real, v.values.imag))


def write_decay(path: Path, record: DecayRecord) -> Path:
    rows = zip(record.times, record.norm_u2, record.norm_dhU, record.lyapunov)
    return write_rows(path, ["t", "norm_u2", "norm_dhU", "lyapunov"], rows)


def write_relaxation(path: Path, records: Sequence[RelaxationErrorRecord]) -> Path:
    rows = ([r.eps, r.h, r.T, *r.columns().values()] for r in records)
    return write_rows(path, RELAX_COLUMNS, rows)


def write_stability(path: Path, reports: Sequence[tuple[str, StabilityReport]]) -> Path:
    rows = (
        [label, r.scheme, r.max_amplification, r.log_amplification, int(r.stable), r.worst_frequency]
        for label, r in reports
    )
    return write_rows(path, STABILITY_COLUMNS, rows)


def write_fit_report(path: Path, fits: Mapping[str, SlopeFit]) -> Path:
    """Plain text, one ``column=slope±stderr`` per line."""
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{name}={fit.slope:.6f}±{fit.stderr:.6f}" for name, fit in fits.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
