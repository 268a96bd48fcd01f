"""Rich console utilities for the subrefine CLI."""

from typing import Optional

from rich import box
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from ..core.events import (
    CellCompletedEvent,
    CellStartedEvent,
    CompleteEvent,
    EpochCompletedEvent,
    ErrorEvent,
    IterationCompletedEvent,
    IterationStartedEvent,
    ProgressEvent,
)
from ..pipeline.report import fmt_rate
from ..storage.manifest_storage import Utterance

# Global console instance
console = Console()


def format_duration(ms: int) -> str:
    """Format a duration in milliseconds as m:ss or s."""
    seconds = ms / 1000
    minutes = int(seconds // 60)
    secs = seconds - 60 * minutes
    if minutes > 0:
        return f"{minutes}:{int(secs):02d}"
    return f"{secs:.1f}s"


def header_panel(title: str, subtitle: str = "") -> Panel:
    """Create styled header panel."""
    content = f"[bold cyan]{title}[/bold cyan]"
    if subtitle:
        content += f"\n[dim]{subtitle}[/dim]"
    return Panel(
        content,
        box=box.ROUNDED,
        border_style="cyan",
        padding=(0, 2),
    )


def render_error(error_message: str) -> Panel:
    """Render error message."""
    return Panel(
        f"[red]{error_message}[/red]",
        title="[bold red]ERROR[/bold red]",
        border_style="red",
        box=box.DOUBLE,
        padding=(0, 2),
    )


def render_completion(message: str, details: Optional[dict[str, str]] = None) -> Panel:
    """Render the summary panel shown when a command finishes."""
    lines = [f"[green bold]#[/green bold] {message}"]
    for key, value in (details or {}).items():
        lines.append(f"  [dim]{key}:[/dim] {value}")
    return Panel("\n".join(lines), box=box.ROUNDED, border_style="green", padding=(0, 2))


def manifest_table(utterances: list[Utterance], title: str = "Manifest", limit: int = 10) -> Table:
    """Preview of the first utterances of a manifest."""
    table = Table(title=title, box=box.ROUNDED, border_style="cyan")
    table.add_column("#", style="cyan", justify="right", width=4)
    table.add_column("Id", style="white")
    table.add_column("Frames", style="dim", justify="right")
    table.add_column("Duration", style="dim", justify="right")
    table.add_column("Subtitle")
    table.add_column("Pseudo transcript")

    for i, utt in enumerate(utterances[:limit], 1):
        table.add_row(
            str(i),
            utt.id,
            str(utt.n_frames),
            format_duration(utt.duration_ms),
            utt.subtitle or "[dim]-[/dim]",
            utt.pseudo_transcript or "[dim]-[/dim]",
        )
    if len(utterances) > limit:
        table.caption = f"{len(utterances) - limit} more not shown"
    return table


def render_event(event: ProgressEvent) -> None:
    """Print one progress event as a console line."""
    if isinstance(event, EpochCompletedEvent):
        console.print(f"  [dim]epoch {event.epoch}/{event.total_epochs}  loss {event.mean_loss:.4f}[/dim]")
    elif isinstance(event, IterationStartedEvent):
        console.print(f"[yellow]>[/yellow] Iteration {event.iteration}/{event.total_iterations}")
    elif isinstance(event, IterationCompletedEvent):
        sp = event.details.get("sp_wer")
        console.print(
            f"[green]#[/green] Iteration {event.iteration}/{event.total_iterations}: "
            f"WER {fmt_rate(sp)} (SP) / {fmt_rate(event.wer)} (WA)"
        )
    elif isinstance(event, CellStartedEvent):
        console.print()
        console.print(header_panel(f"Cell {event.cell_index}/{event.total_cells}", event.cell))
    elif isinstance(event, CellCompletedEvent):
        suffix = " [dim](resumed)[/dim]" if event.resumed else ""
        console.print(f"[green bold]#[/green bold] {event.cell} done{suffix}")
    elif isinstance(event, ErrorEvent):
        where = f" in {event.cell}" if event.cell else ""
        console.print(f"[red bold]X[/red bold] Error{where}: {event.error_message}")
    elif isinstance(event, CompleteEvent):
        console.print()
        console.print(render_completion(event.message))
