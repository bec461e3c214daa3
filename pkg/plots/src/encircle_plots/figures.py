"""Figure kinds rendered from a trace file."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .trace import (
    MissingColumnError,
    PlotError,
    load_meta_nearby,
    load_trace,
    target_count,
    trace_column,
    vec_columns,
)

KINDS = ("trajectory2d", "trajectory3d", "as_error", "estimation_error", "radius")


class EmptyRangeError(PlotError):
    pass


@dataclass(frozen=True)
class PlotSpec:
    """One figure request: which trace, which kind, which steps, where to."""

    trace: str | Path
    kind: str
    out: str | Path
    k_range: tuple[int | None, int | None] = (None, None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PlotError(f"unknown figure kind {self.kind!r}; choose from {KINDS}")


def parse_k_range(text: str | None) -> tuple[int | None, int | None]:
    """`A:B` selects steps A <= k < B; a bare `K` selects 0..K inclusive."""
    if text is None or text.strip() == "":
        return (None, None)
    text = text.strip()
    try:
        if ":" in text:
            left, right = text.split(":", 1)
            return (int(left) if left else None, int(right) if right else None)
        snapshot = int(text)
    except ValueError as exc:
        raise PlotError(f"bad k-range {text!r}: {exc}") from exc
    return (0, snapshot + 1)


def _select(header, data, k_range):
    k = trace_column(header, data, "k")
    start, stop = k_range
    mask = np.ones(k.shape, dtype=bool)
    if start is not None:
        mask &= k >= start
    if stop is not None:
        mask &= k < stop
    if not np.any(mask):
        span = f"0..{int(k[-1])}" if k.size else "none"
        raise EmptyRangeError(
            f"k-range {k_range} selects no steps (trace covers {span})"
        )
    return k[mask], data[mask]


def snapshot(header: list[str], data: np.ndarray, k_range) -> dict:
    """Positions, estimate and radius at the last step of the range.

    Pure data extraction shared by both trajectory kinds, exposed so the
    drawn state can be checked without rasterizing anything.
    """
    k, rows = _select(header, data, k_range)
    agents = np.stack(
        [vec_columns(header, rows, f"agent{i}") for i in (1, 2)], axis=1
    )
    m = target_count(header)
    if m == 0:
        raise MissingColumnError("target1_x")
    targets = np.stack(
        [vec_columns(header, rows, f"target{j}") for j in range(1, m + 1)], axis=1
    )
    return {
        "k": int(k[-1]),
        "steps": k,
        "agent_paths": agents,  # (steps, 2, 3)
        "target_paths": targets,  # (steps, M, 3)
        "agents": agents[-1],
        "targets": targets[-1],
        "center_estimate": vec_columns(header, rows, "center_est")[-1],
        "radius": float(trace_column(header, rows, "radius")[-1]),
    }


def _circle_points(center: np.ndarray, radius: float, n: int = 241) -> np.ndarray:
    theta = np.linspace(0.0, 2.0 * np.pi, n)
    return np.column_stack(
        [
            center[0] + radius * np.cos(theta),
            center[1] + radius * np.sin(theta),
            np.full(n, center[2]),
        ]
    )


def _mode_tag(spec: PlotSpec) -> str:
    meta = load_meta_nearby(spec.trace)
    if not meta:
        return ""
    try:
        mode = meta["scenario"]["run"]["mode"]
    except (KeyError, TypeError):
        return ""
    note = " (aborted)" if meta.get("abort") else ""
    return f" [{mode}{note}]"


def _draw_trajectory2d(ax, shot):
    ax.plot(shot["agent_paths"][:, 0, 0], shot["agent_paths"][:, 0, 1], lw=0.8)
    ax.plot(shot["agent_paths"][:, 1, 0], shot["agent_paths"][:, 1, 1], lw=0.8)
    ax.plot(*shot["agents"][0, :2], "o", label="agent 1")
    ax.plot(*shot["agents"][1, :2], "s", label="agent 2")
    for j, target in enumerate(shot["targets"]):
        path = shot["target_paths"][:, j]
        ax.plot(path[:, 0], path[:, 1], ":", lw=0.6, color="gray")
        ax.plot(*target[:2], "^", color="tab:red", label="target" if j == 0 else None)
    est = shot["center_estimate"]
    ax.plot(est[0], est[1], "x", color="k", markersize=9, label="center estimate")
    circle = _circle_points(est, shot["radius"])
    ax.plot(circle[:, 0], circle[:, 1], "--", lw=0.9, label="preset circle")
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.legend(loc="best", fontsize=8)


def _draw_trajectory3d(ax, shot):
    ax.plot(*shot["agent_paths"][:, 0].T, lw=0.8)
    ax.plot(*shot["agent_paths"][:, 1].T, lw=0.8)
    ax.scatter(*shot["agents"][0], marker="o", label="agent 1")
    ax.scatter(*shot["agents"][1], marker="s", label="agent 2")
    for j, target in enumerate(shot["targets"]):
        ax.scatter(*target, marker="^", color="tab:red", label="target" if j == 0 else None)
    est = shot["center_estimate"]
    ax.scatter(*est, marker="x", color="k", label="center estimate")
    circle = _circle_points(est, shot["radius"])
    ax.plot(circle[:, 0], circle[:, 1], circle[:, 2], "--", lw=0.9, label="preset circle")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_zlabel("z [m]")
    ax.legend(loc="best", fontsize=8)


def _draw_as_error(ax, header, data, k_range):
    k, rows = _select(header, data, k_range)
    errors = vec_columns(header, rows, "sync_err")
    for i, axis in enumerate("xyz"):
        ax.plot(k, errors[:, i], lw=0.9, label=f"$e_{{s,{axis}}}$")
    ax.axhline(0.5, ls="--", lw=0.7, color="gray")
    ax.axhline(-0.5, ls="--", lw=0.7, color="gray")
    ax.set_xlabel("step k")
    ax.set_ylabel("anti-synchronization error [m]")
    ax.legend(loc="best", fontsize=8)


def _draw_estimation_error(ax, header, data, k_range):
    k, rows = _select(header, data, k_range)
    norm = np.linalg.norm(vec_columns(header, rows, "center_err"), axis=1)
    ax.semilogy(k, np.maximum(norm, 1e-17), lw=0.9)
    ax.set_xlabel("step k")
    ax.set_ylabel("center estimation error [m]")


def _draw_radius(ax, header, data, k_range):
    k, rows = _select(header, data, k_range)
    ax.step(k, trace_column(header, rows, "radius"), where="post", lw=0.9)
    ax.set_xlabel("step k")
    ax.set_ylabel("orbit radius [m]")


def _save(fig, out) -> Path:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    # strip the writer's volatile metadata so reruns are byte-identical
    metadata = {
        ".png": {"Software": None},
        ".svg": {"Date": None},
        ".pdf": {"CreationDate": None},
    }.get(out.suffix.lower(), None)
    fig.savefig(out, dpi=150, metadata=metadata)
    return out


def render(spec: PlotSpec) -> Path:
    """Draw one figure and write it to spec.out; returns the written path."""
    header, data = load_trace(spec.trace)
    if spec.kind == "trajectory3d":
        fig = plt.figure(figsize=(6.0, 5.0))
        ax = fig.add_subplot(projection="3d")
    else:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
    try:
        if spec.kind in ("trajectory2d", "trajectory3d"):
            shot = snapshot(header, data, spec.k_range)
            if spec.kind == "trajectory2d":
                _draw_trajectory2d(ax, shot)
            else:
                _draw_trajectory3d(ax, shot)
            ax.set_title(f"positions at step {shot['k']}{_mode_tag(spec)}")
        elif spec.kind == "as_error":
            _draw_as_error(ax, header, data, spec.k_range)
            ax.set_title(f"AS error{_mode_tag(spec)}")
        elif spec.kind == "estimation_error":
            _draw_estimation_error(ax, header, data, spec.k_range)
            ax.set_title(f"estimation error{_mode_tag(spec)}")
        else:
            _draw_radius(ax, header, data, spec.k_range)
            ax.set_title(f"orbit radius{_mode_tag(spec)}")
        fig.tight_layout()
        return _save(fig, spec.out)
    finally:
        plt.close(fig)
