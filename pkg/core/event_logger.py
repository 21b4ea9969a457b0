from __future__ import annotations

import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional


def event_log_path(out_dir: str | Path) -> Path:
    """PDHS_EVENT_LOG when set, else events.jsonl next to the run outputs."""
    env = os.getenv("PDHS_EVENT_LOG")
    return Path(env) if env else Path(out_dir) / "events.jsonl"


def log_event(
    event_name: str,
    run_id: str,
    properties: Dict[str, Any],
    experiment_id: Optional[str] = None,
    log_path: Optional[Path] = None,
) -> Dict[str, Any]:
    # Always log to stderr as JSON; stdout carries the run summary
    payload = {
        "ts_utc": datetime.now(timezone.utc).isoformat(),
        "event_name": event_name,
        "run_id": run_id,
        "experiment_id": experiment_id,
        "properties": properties,
    }
    line = json.dumps(payload, default=str)
    print(line, file=sys.stderr)

    if log_path is not None:
        log_path.parent.mkdir(parents=True, exist_ok=True)
        with log_path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")
    return payload
