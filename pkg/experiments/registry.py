from __future__ import annotations

from typing import Dict

from core.errors import ConfigError

from .base import ExperimentHandler
from .decay import DecayHandler
from .relax import RelaxSweepHandler, RelaxTableHandler
from .selftest import SelftestHandler
from .stability import StabilityHandler

_HANDLERS: Dict[str, ExperimentHandler] = {
    h.command: h
    for h in (DecayHandler(), RelaxSweepHandler(), RelaxTableHandler(), StabilityHandler(), SelftestHandler())
}


def get_handler(command: str) -> ExperimentHandler:
    try:
        return _HANDLERS[command]
    except KeyError:
        raise ConfigError(f"no handler registered (have {', '.join(sorted(_HANDLERS))})", key=command) from None


def commands() -> list[str]:
    return list(_HANDLERS)
