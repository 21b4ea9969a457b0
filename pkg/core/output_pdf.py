from __future__ import annotations

from io import BytesIO
from typing import Any, Dict, List

from reportlab.lib.pagesizes import A4
from reportlab.pdfgen import canvas

from .models import ExperimentOutcome

TOP_MARGIN = 40
BOTTOM_MARGIN = 60


def _fmt_value(v: Any) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return ", ".join(_fmt_value(x) for x in v)
    return str(v)


class _Page:
    """Top-down line writer that breaks pages when it runs out of room."""

    def __init__(self, c: canvas.Canvas):
        self.c = c
        self.width, self.height = A4
        self.y = self.height - TOP_MARGIN

    def line(self, text: str, font: str = "Helvetica", size: int = 10, indent: int = 40, gap: int = 14) -> None:
        if self.y < BOTTOM_MARGIN:
            self.c.showPage()
            self.y = self.height - TOP_MARGIN
        self.c.setFont(font, size)
        self.c.drawString(indent, self.y, text)
        self.y -= gap

    def heading(self, text: str) -> None:
        self.y -= 6
        self.line(text, font="Helvetica-Bold", size=11, gap=16)

    def pair(self, key: str, value: Any) -> None:
        if self.y < BOTTOM_MARGIN:
            self.c.showPage()
            self.y = self.height - TOP_MARGIN
        self.c.setFont("Helvetica", 9)
        self.c.drawString(50, self.y, key)
        self.c.drawRightString(self.width - 60, self.y, _fmt_value(value))
        self.y -= 12


def render_report(outcome: ExperimentOutcome, config_text: str = "") -> bytes:
    """One-page (or longer) run summary: verdict, numbers, files, notes."""
    buf = BytesIO()
    c = canvas.Canvas(buf, pagesize=A4)
    page = _Page(c)

    page.line(f"Run report: {outcome.command}", font="Helvetica-Bold", size=14, gap=22)
    page.line(f"Run id: {outcome.run_id[:16]}", size=9)
    verdict = "PASS" if outcome.passed else "FAIL"
    if outcome.failed_suite:
        verdict += f" (suite {outcome.failed_suite})"
    page.line(f"Verdict: {verdict}", font="Helvetica-Bold")

    page.heading("Summary")
    summary: Dict[str, Any] = outcome.summary
    for key in sorted(summary):
        page.pair(key, summary[key])

    if outcome.files:
        page.heading("Files written")
        for f in outcome.files:
            page.line(f"- {f}", size=9, indent=50, gap=12)

    if outcome.notes:
        page.heading("Notes")
        for note in outcome.notes[:20]:
            page.line(f"- {note}", size=9, indent=50, gap=12)

    if config_text:
        page.heading("Configuration")
        lines: List[str] = config_text.strip().splitlines()
        for ln in lines:
            page.line(ln, font="Courier", size=8, indent=50, gap=10)

    c.showPage()
    c.save()
    return buf.getvalue()
