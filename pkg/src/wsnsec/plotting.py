"""SVG line charts for CSV time series.

Figures are built on a bare ``Figure`` (no pyplot state) and saved with a
fixed hash salt and no date stamp, so identical input gives identical bytes.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Sequence

import matplotlib
from matplotlib.figure import Figure

matplotlib.rcParams["svg.hashsalt"] = "wsnsec"
matplotlib.rcParams["svg.fonttype"] = "path"


class PlotError(ValueError):
    pass


def read_series(csv_source: str | Path) -> tuple[list[str], list[list[float]]]:
    text = Path(csv_source).read_text() if isinstance(csv_source, Path) else csv_source
    rows = list(csv.reader(io.StringIO(text)))
    if len(rows) < 2:
        raise PlotError("CSV has no data rows")
    header, data = rows[0], rows[1:]
    if header[0] != "time":
        raise PlotError("first CSV column must be 'time'")
    cols = [[float(r[j]) for r in data] for j in range(len(header))]
    return header, cols


def emit_plot(csv_source: str | Path, output: str | Path, columns: Sequence[str] | None = None,
              title: str | None = None, ylabel: str | None = None) -> Path:
    """Render one line per series (every non-time column unless `columns` is given).

    Each line is tagged ``series-<column>`` in the SVG.
    """
    header, cols = read_series(csv_source)
    names = list(columns) if columns else header[1:]
    missing = [n for n in names if n not in header]
    if missing:
        raise PlotError(f"unknown columns: {', '.join(missing)}")
    fig = Figure(figsize=(7, 4))
    ax = fig.add_subplot()
    t = cols[0]
    for name in names:
        (line,) = ax.plot(t, cols[header.index(name)], label=name, marker="o" if len(t) == 1 else None)
        line.set_gid(f"series-{name}")
    ax.set_xlabel("time (s)")
    if ylabel:
        ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    output = Path(output)
    fig.savefig(output, format="svg", metadata={"Date": None})
    return output
