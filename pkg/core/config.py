from __future__ import annotations

import hashlib
import json
import os
import re
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError, PDHSError
from .system import SystemSpec, builtin_system, validate_system

COMMANDS = ("decay", "relax-sweep", "relax-table", "stability", "selftest")

_POWER = re.compile(r"^\s*([+-]?\d+(?:\.\d*)?)\s*\^\s*([+-]?\d+(?:\.\d*)?)\s*$")
_LINE = re.compile(r"^([A-Za-z_]+)\.([A-Za-z_0-9]+)\s*=\s*(.*)$")


# -------------------------
# Sections
# -------------------------

class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class GridSection(_Section):
    h: float = Field(gt=0)
    n_points: int = Field(ge=8)
    offset: float = 0.0


class SystemSection(_Section):
    builtin: Optional[str] = "euler"
    A: Optional[List[List[float]]] = None
    B: Optional[List[List[float]]] = None
    N2: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _one_source(self) -> "SystemSection":
        explicit = (self.A, self.B, self.N2)
        if self.builtin is None and any(v is None for v in explicit):
            raise ValueError("give either builtin or all of A, B, N2")
        if self.builtin is not None and any(v is not None for v in explicit):
            raise ValueError("builtin and explicit matrices are exclusive")
        return self

    def to_spec(self) -> SystemSpec:
        if self.builtin is not None:
            return builtin_system(self.builtin)
        return validate_system(self.A, self.B, self.N2)


class TimesSection(_Section):
    T: float = Field(gt=0)
    samples: int = Field(default=201, ge=2)
    spacing: Literal["linear", "log"] = "linear"
    fit_lo: float = Field(default=10.0, ge=0)
    fit_hi: float = Field(default=200.0, gt=0)

    @model_validator(mode="after")
    def _window(self) -> "TimesSection":
        if self.fit_lo >= self.fit_hi:
            raise ValueError("fit_lo must be below fit_hi")
        return self

    def sample_times(self) -> np.ndarray:
        """Ascending sample times on [0, T], t = 0 always included."""
        if self.spacing == "linear":
            return np.linspace(0.0, self.T, self.samples)
        return np.concatenate([[0.0], np.geomspace(1e-2, self.T, self.samples - 1)])


class RelaxationSection(_Section):
    eps: List[float] = Field(default_factory=lambda: [2.0 ** -k for k in range(2, 7)], min_length=1)
    kappa: float = Field(default=0.5, gt=0)
    s: float = 2.25
    s_prime: float = 3.0
    table_eps: float = Field(default=2.0 ** -5, gt=0, lt=1)
    h_list: List[float] = Field(default_factory=lambda: [2.0 ** -k for k in range(4, 7)], min_length=1)

    @model_validator(mode="after")
    def _ranges(self) -> "RelaxationSection":
        if any(not 0 < e < 1 for e in self.eps):
            raise ValueError("every eps must lie in (0, 1)")
        if any(h <= 0 for h in self.h_list):
            raise ValueError("h_list entries must be positive")
        if not 2 < self.s < self.s_prime:
            raise ValueError("need 2 < s < s_prime")
        return self


class OutputSection(_Section):
    directory: str = "out"
    prefix: str = "pdhs"


class SelftestSection(_Section):
    inject_fault: Optional[str] = None
    trials: int = Field(default=1000, ge=1)


class ExperimentConfig(_Section):
    grid: GridSection
    system: SystemSection = Field(default_factory=SystemSection)
    times: TimesSection
    relaxation: RelaxationSection = Field(default_factory=RelaxationSection)
    output: OutputSection = Field(default_factory=OutputSection)
    selftest: SelftestSection = Field(default_factory=SelftestSection)


_DEFAULTS: Dict[str, Dict[str, Dict[str, Any]]] = {
    "decay": {
        "grid": {"h": 2.0 ** -4, "n_points": 16384},
        "times": {"T": 200.0, "samples": 400, "spacing": "log"},
    },
    "relax-sweep": {
        "grid": {"h": 2.0 ** -4, "n_points": 1024, "offset": -1.25},
        "times": {"T": 5.0},
    },
    "stability": {
        "grid": {"h": 2.0 ** -4, "n_points": 256},
        "times": {"T": 1.0},
    },
    "selftest": {
        "grid": {"h": 2.0 ** -4, "n_points": 256},
        "times": {"T": 1.0},
    },
}
_DEFAULTS["relax-table"] = _DEFAULTS["relax-sweep"]


def default_config(command: str) -> ExperimentConfig:
    if command not in _DEFAULTS:
        raise ConfigError(f"unknown command '{command}'", key="command")
    return ExperimentConfig.model_validate(_DEFAULTS[command])


# -------------------------
# Text format
# -------------------------

def _scalar(tok: str) -> Any:
    tok = tok.strip()
    if tok.lower() == "none":
        return None
    m = _POWER.match(tok)
    if m:
        return float(m.group(1)) ** float(m.group(2))
    for cast in (int, float):
        try:
            return cast(tok)
        except ValueError:
            pass
    return tok.strip("'\"")


def _value(raw: str, key: str) -> Any:
    raw = raw.strip()
    if raw.startswith("["):
        try:
            return json.loads(raw)
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed JSON value ({e.msg})", key=key) from e
    if "," in raw:
        return [_scalar(t) for t in raw.split(",") if t.strip()]
    if not raw:
        raise ConfigError("missing value", key=key)
    return _scalar(raw)


def parse_config(text: str, command: str) -> ExperimentConfig:
    """Overlay ``section.key = value`` lines on the defaults of ``command``."""
    data = default_config(command).model_dump()
    seen: Dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise ConfigError(f"line {lineno} is not 'section.key = value'", key=line.split("=")[0].strip())
        section, name, raw = m.groups()
        key = f"{section}.{name}"
        if section not in data or name not in data[section]:
            raise ConfigError("unknown key", key=key)
        if key in seen:
            raise ConfigError(f"set twice (lines {seen[key]} and {lineno})", key=key)
        seen[key] = lineno
        value = _value(raw, key)
        current = data[section][name]
        if isinstance(current, list) and value is not None and not isinstance(value, list):
            value = [value]
        data[section][name] = value
    if data["system"].get("A") is not None and "system.builtin" not in seen:
        data["system"]["builtin"] = None
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        loc = ".".join(str(p) for p in err["loc"][:2])
        raise ConfigError(err["msg"], key=loc or "config") from e


def _render(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        if value and isinstance(value[0], list):
            return json.dumps(value)
        return ", ".join(_render(v) for v in value) + ("," if len(value) == 1 else "")
    return str(value)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Every field, floats in repr form, so that parse_config gives ``cfg`` back."""
    lines: List[str] = []
    for section, fields in cfg.model_dump().items():
        for name, value in fields.items():
            lines.append(f"{section}.{name} = {_render(value)}")
    return "\n".join(lines) + "\n"


# -------------------------
# Loading
# -------------------------

def load_config(path: str | Path | None, command: str) -> ExperimentConfig:
    """Config file (or the defaults) with environment overrides applied."""
    text = ""
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config file ({e.strerror})", key="--config") from e
    cfg = parse_config(text, command)
    out_dir = os.getenv("PDHS_OUT_DIR")
    if out_dir:
        cfg.output.directory = out_dir
    return cfg


def env_threads() -> Optional[int]:
    raw = os.getenv("PDHS_THREADS")
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError as e:
        raise ConfigError(f"not an integer: {raw!r}", key="PDHS_THREADS") from e
    if n < 1:
        raise ConfigError("must be at least 1", key="PDHS_THREADS")
    return n


def system_spec(cfg: ExperimentConfig) -> SystemSpec:
    """The configured system; validation errors surface as config errors."""
    try:
        return cfg.system.to_spec()
    except PDHSError as e:
        if e.exit_code == 2:
            raise
        raise ConfigError(str(e), key="system") from e


def make_run_id(command: str, cfg: ExperimentConfig) -> str:
    raw = f"{command}\n{serialize_config(cfg)}"
    return hashlib.sha256(raw.encode("utf-8")).hexdigest()
