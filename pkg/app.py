from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv
from scipy import fft as sfft

from core.config import env_threads, load_config, make_run_id, serialize_config
from core.errors import ConfigError, PDHSError
from core.event_logger import event_log_path, log_event
from core.models import ExperimentOutcome
from core.output_pdf import render_report
from experiments.base import RunContext
from experiments.registry import commands, get_handler

EXIT_OK = 0
EXIT_FAILED = 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdhs",
        description="Semi-discrete partially dissipative systems: decay, relaxation and self-test runs.",
    )
    parser.add_argument("command", choices=commands(), help="experiment to run")
    parser.add_argument("--config", type=Path, default=None, help="flat 'section.key = value' config file")
    parser.add_argument("--out", type=Path, default=None, help="output directory (overrides the config)")
    parser.add_argument("--threads", type=int, default=None, help="FFT workers and sweep threads")
    parser.add_argument("--seed", type=int, default=0, help="seed for random test vectors")
    parser.add_argument("--report-pdf", action="store_true", help="also write <prefix>_report.pdf")
    return parser


def _print_outcome(outcome: ExperimentOutcome) -> None:
    print(f"{outcome.command}: {'PASS' if outcome.passed else 'FAIL'}")
    for key in sorted(outcome.summary):
        print(f"  {key} = {outcome.summary[key]}")
    for f in outcome.files:
        print(f"  wrote {f}")
    for note in outcome.notes:
        print(f"  note: {note}")
    if outcome.failed_suite:
        print(f"  failing suite: {outcome.failed_suite}")


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    run_id = "-"
    log_path: Optional[Path] = None
    try:
        handler = get_handler(args.command)
        cfg = load_config(args.config, args.command)
        if args.out is not None:
            cfg.output.directory = str(args.out)
        threads = args.threads if args.threads is not None else (env_threads() or 1)
        if threads < 1:
            raise ConfigError("must be at least 1", key="--threads")

        run_id = make_run_id(args.command, cfg)
        out_dir = Path(cfg.output.directory)
        log_path = event_log_path(out_dir)
        ctx = RunContext(
            run_id=run_id,
            out_dir=out_dir,
            prefix=cfg.output.prefix,
            threads=threads,
            seed=args.seed,
            log_path=log_path,
        )
        ctx.event("run_start", {"command": args.command, "threads": threads, "seed": args.seed})
        ctx.event("config_loaded", cfg.model_dump())

        with sfft.set_workers(threads):
            outcome = handler.run(cfg, ctx)

        if args.report_pdf:
            pdf_path = ctx.path("_report.pdf")
            pdf_path.write_bytes(render_report(outcome, serialize_config(cfg)))
            outcome.files.append(str(pdf_path))

        _print_outcome(outcome)
        ctx.event("run_done", {"passed": outcome.passed, "failed_suite": outcome.failed_suite})
        return EXIT_OK if outcome.passed else EXIT_FAILED

    except PDHSError as e:
        print(f"error: {e}", file=sys.stderr)
        log_event("error", run_id, {"type": type(e).__name__, "message": str(e), "exit_code": e.exit_code},
                  log_path=log_path)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
