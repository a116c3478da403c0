"""Whitespace-delimited x/y series files for regenerating figures."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class PlotSeries:
    name: str  # file stem
    title: str  # what the figure shows
    columns: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self):
        r = np.atleast_2d(np.asarray(self.rows, dtype=float))
        if r.size and r.shape[1] != len(self.columns):
            raise ValueError("row width does not match the column names")
        object.__setattr__(self, "rows", r)


def _num(v: float) -> str:
    if np.isnan(v):
        return "nan"
    return repr(float(v))


def render(series: PlotSeries) -> str:
    lines = [f"# figure: {series.title}", "# columns: " + " ".join(series.columns)]
    for row in series.rows:
        lines.append(" ".join(_num(v) for v in row))
    return "\n".join(lines) + "\n"


def parse_plotdata(text: str) -> tuple[str, tuple[str, ...], np.ndarray]:
    title, cols, rows = "", (), []
    for line in text.splitlines():
        if line.startswith("# figure: "):
            title = line[len("# figure: "):]
        elif line.startswith("# columns: "):
            cols = tuple(line[len("# columns: "):].split())
        elif line.strip() and not line.startswith("#"):
            rows.append([float(x) for x in line.split()])
    return title, cols, np.array(rows, dtype=float).reshape(-1, len(cols))


def emit_plotdata(series: Sequence[PlotSeries], out_dir) -> list[Path]:
    """Write one .dat file per series; an empty list writes nothing."""
    if not series:
        return []
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    staged = []
    for s in series:
        dest = out / f"{s.name}.dat"
        tmp = out / f".{s.name}.dat.tmp"
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(render(s))
        staged.append((tmp, dest))
    for tmp, dest in staged:
        os.replace(tmp, dest)
    return [d for _, d in staged]
