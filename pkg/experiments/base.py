from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

from core.config import ExperimentConfig, default_config
from core.event_logger import log_event
from core.models import ExperimentOutcome


@dataclass(frozen=True)
class RunContext:
    run_id: str
    out_dir: Path
    prefix: str
    threads: int = 1
    seed: int = 0
    log_path: Optional[Path] = None

    def path(self, suffix: str) -> Path:
        """``<out_dir>/<prefix><suffix>``."""
        return self.out_dir / f"{self.prefix}{suffix}"

    def event(self, event_name: str, properties: Dict[str, Any]) -> None:
        log_event(event_name, self.run_id, properties, experiment_id=self.prefix, log_path=self.log_path)


class ExperimentHandler(ABC):
    command: str

    def default_config(self) -> ExperimentConfig:
        return default_config(self.command)

    @abstractmethod
    def run(self, cfg: ExperimentConfig, ctx: RunContext) -> ExperimentOutcome:
        """Run the experiment, write its files and return the verdict."""
        raise NotImplementedError
