"""Reading the simulator's CSV/JSON output contract."""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np


class PlotError(Exception):
    """Base for everything this package raises on purpose."""


class MissingColumnError(PlotError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"trace has no column {column!r}")


def load_trace(path) -> tuple[list[str], np.ndarray]:
    """Header list and (steps, columns) float array from a trace CSV."""
    p = Path(path)
    try:
        lines = p.read_text(encoding="utf-8").strip().splitlines()
    except OSError as exc:
        raise PlotError(f"cannot read {p}: {exc}") from exc
    if not lines:
        raise PlotError(f"trace {p} is empty")
    header = lines[0].split(",")
    try:
        data = np.array(
            [[float(cell) for cell in line.split(",")] for line in lines[1:]],
            dtype=np.float64,
        )
    except ValueError as exc:
        raise PlotError(f"trace {p} has a malformed row: {exc}") from exc
    if data.size == 0:
        data = data.reshape(0, len(header))
    if data.shape[1] != len(header):
        raise PlotError(f"trace {p}: rows do not match the header width")
    return header, data


def trace_column(header: list[str], data: np.ndarray, name: str) -> np.ndarray:
    if name not in header:
        raise MissingColumnError(name)
    return data[:, header.index(name)]


def vec_columns(header: list[str], data: np.ndarray, group: str) -> np.ndarray:
    """(steps, 3) block for a `<group>_{x,y,z}` column triple."""
    return np.column_stack(
        [trace_column(header, data, f"{group}_{axis}") for axis in ("x", "y", "z")]
    )


def target_count(header: list[str]) -> int:
    indices = {
        int(m.group(1)) for col in header if (m := re.fullmatch(r"target(\d+)_x", col))
    }
    return max(indices) if indices else 0


def load_meta_nearby(trace_path) -> dict | None:
    """meta.json written next to the trace, when present."""
    candidate = Path(trace_path).parent / "meta.json"
    if not candidate.exists():
        return None
    try:
        return json.loads(candidate.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError):
        return None
