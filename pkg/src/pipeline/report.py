"""Experiment report models and their tabular rendering."""

import io
from typing import Optional, Union

from pydantic import BaseModel, Field
from rich import box
from rich.console import Console
from rich.table import Table

from ..evaluation.metrics import EvalReport


class IterationMetrics(BaseModel):
    iteration: int
    sp: EvalReport
    wa: EvalReport


class CellResult(BaseModel):
    """Outcome of one grid cell; ``error`` is set when the cell failed."""

    label: str
    use_prompt: bool
    strategy: str
    layers: Union[str, list[int]]
    iterations: list[IterationMetrics] = Field(default_factory=list)
    error: Optional[str] = None

    @property
    def final(self) -> Optional[IterationMetrics]:
        return self.iterations[-1] if self.iterations else None


class LayerSweepRow(BaseModel):
    layers: str
    fold_wer: list[float]
    mean_wer: float


class LayerSweepResult(BaseModel):
    strategy: str
    n_folds: int
    rows: list[LayerSweepRow]

    @property
    def best(self) -> LayerSweepRow:
        return min(self.rows, key=lambda row: row.mean_wer)


class ExperimentReport(BaseModel):
    seed: int
    bootstrap: EvalReport
    subtitles: EvalReport
    cells: list[CellResult]
    layer_sweep: Optional[LayerSweepResult] = None


def fmt_rate(value: Optional[float]) -> str:
    """Percentage with two decimals; absent rates render as '-'."""
    return "-" if value is None else f"{value:.2f}"


def fmt_share(value: Optional[float]) -> str:
    return "-" if value is None else f"{100 * value:.0f}%"


# ==================== Tables ====================


def eval_table(reports: dict[str, EvalReport], title: str = "Evaluation") -> Table:
    """One row per named report: WER, rWER, oWER and error-type breakdown."""
    table = Table(title=title, box=box.ROUNDED, border_style="cyan")
    table.add_column("System", style="cyan")
    table.add_column("WER", justify="right")
    table.add_column("rWER", justify="right")
    table.add_column("oWER", justify="right")
    table.add_column("Sub", justify="right", style="dim")
    table.add_column("Del", justify="right", style="dim")
    table.add_column("Ins", justify="right", style="dim")
    table.add_column("Del share", justify="right")
    table.add_column("Lead del", justify="right", style="dim")
    table.add_column("Ref words", justify="right", style="dim")

    for name, report in reports.items():
        table.add_row(
            name,
            fmt_rate(report.wer),
            fmt_rate(report.rwer),
            fmt_rate(report.ower),
            str(report.counts.substitutions),
            str(report.counts.deletions),
            str(report.counts.insertions),
            fmt_share(report.deletion_share),
            str(report.counts.leading_deletions),
            str(report.total_ref_words),
        )
    return table


def cells_table(report: ExperimentReport) -> Table:
    """Final-iteration metrics per grid cell, after the bootstrap and subtitle rows."""
    table = Table(title="Held-out results", box=box.ROUNDED, border_style="cyan")
    table.add_column("Cell", style="cyan")
    table.add_column("WER (SP)", justify="right")
    table.add_column("WER (WA)", justify="right")
    table.add_column("rWER", justify="right")
    table.add_column("oWER", justify="right")
    table.add_column("Status", style="dim")

    table.add_row("bootstrap pseudo labels", fmt_rate(report.bootstrap.wer), "-",
                  fmt_rate(report.bootstrap.rwer), fmt_rate(report.bootstrap.ower), "")
    table.add_row("subtitles", fmt_rate(report.subtitles.wer), "-",
                  fmt_rate(report.subtitles.rwer), fmt_rate(report.subtitles.ower), "")
    for cell in report.cells:
        final = cell.final
        if cell.error is not None or final is None:
            table.add_row(cell.label, "-", "-", "-", "-", f"[red]failed: {cell.error}[/red]")
            continue
        table.add_row(
            cell.label,
            fmt_rate(final.sp.wer),
            fmt_rate(final.wa.wer),
            fmt_rate(final.wa.rwer),
            fmt_rate(final.wa.ower),
            f"{len(cell.iterations)} iterations",
        )
    return table


def iterations_table(report: ExperimentReport) -> Table:
    """Held-out WER per iteration and cell, SP-only / weighted."""
    n_iterations = max((len(cell.iterations) for cell in report.cells), default=0)
    table = Table(title="WER across iterations (SP / WA)", box=box.ROUNDED, border_style="cyan")
    table.add_column("Cell", style="cyan")
    table.add_column("0", justify="right")
    for t in range(1, n_iterations + 1):
        table.add_column(str(t), justify="right")

    for cell in report.cells:
        row = [cell.label, fmt_rate(report.bootstrap.wer)]
        for metrics in cell.iterations:
            row.append(f"{fmt_rate(metrics.sp.wer)} / {fmt_rate(metrics.wa.wer)}")
        row += ["-"] * (n_iterations - len(cell.iterations))
        table.add_row(*row)
    return table


def sweep_table(sweep: LayerSweepResult) -> Table:
    table = Table(title=f"Layer sweep ({sweep.strategy})", box=box.ROUNDED, border_style="cyan")
    table.add_column("Layers", style="cyan")
    for k in range(1, sweep.n_folds + 1):
        table.add_column(f"Fold {k}", justify="right")
    table.add_column("Mean", justify="right", style="bold")

    best = sweep.best.layers
    for row in sweep.rows:
        label = f"{row.layers} *" if row.layers == best else row.layers
        table.add_row(label, *(fmt_rate(w) for w in row.fold_wer), fmt_rate(row.mean_wer))
    return table


def report_tables(report: ExperimentReport) -> list[Table]:
    tables = [cells_table(report), iterations_table(report)]
    if report.layer_sweep is not None:
        tables.append(sweep_table(report.layer_sweep))
    return tables


def render_report_text(report: ExperimentReport, width: int = 120) -> str:
    """Plain-text rendering of all report tables."""
    buffer = io.StringIO()
    console = Console(file=buffer, width=width, color_system=None, force_terminal=False)
    for table in report_tables(report):
        console.print(table)
    return buffer.getvalue()
