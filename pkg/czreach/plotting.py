# plotting.py
"""SVG drawings of reachable sets projected onto two state coordinates.

Each member is drawn as the polygon cut out by its supporting lines in 64
evenly spread directions, which is an outer approximation of the true
projection.
"""
import io
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from czreach.errors import DimensionError, EmptySet  # noqa: E402
from czreach.reach import ReachResult  # noqa: E402
from czreach.scenario import write_atomic  # noqa: E402

logger = logging.getLogger(__name__)

DIRECTIONS = 64


@dataclass
class PlotSummary:
    drawn: List[int] = field(default_factory=list)
    skipped: List[int] = field(default_factory=list)
    outlines: int = 0


def projection_outline(Z, dims, directions=DIRECTIONS):
    """Vertices of the outer polygon of Z projected onto ``dims``, counter-clockwise."""
    P = np.zeros((2, Z.dim))
    P[0, dims[0]] = 1.0
    P[1, dims[1]] = 1.0
    Zp = Z.linear_map(P)
    angles = 2.0 * np.pi * np.arange(directions) / directions
    normals = np.column_stack((np.cos(angles), np.sin(angles)))
    half = directions // 2
    offsets = np.empty(directions)
    # One LP pair gives the support value in d and in -d.
    for k in range(half):
        lo, hi = Zp.bound_along(normals[k])
        offsets[k] = hi
        offsets[k + half] = -lo
    vertices = np.empty((directions, 2))
    for k in range(directions):
        nxt = (k + 1) % directions
        M = np.vstack((normals[k], normals[nxt]))
        vertices[k] = np.linalg.solve(M, [offsets[k], offsets[nxt]])
    return vertices


def _parse_dims(result, dims):
    n = result.steps[0].dim
    if n is None or n < 2:
        raise DimensionError(f"plotting needs at least 2 state dimensions, got {n}")
    if len(dims) != 2 or dims[0] == dims[1] or not all(0 <= d < n for d in dims):
        raise DimensionError(f"plot dimensions {tuple(dims)} must be two distinct indices in 0..{n - 1}")
    return int(dims[0]), int(dims[1])


def plot_reach(
    result: ReachResult,
    dims: Sequence[int],
    out,
    unsafe_sets=(),
    trajectories: Optional[np.ndarray] = None,
    title: Optional[str] = None,
) -> PlotSummary:
    """Draw every step's members, the initial set shaded, unsafe sets shaded red; write SVG to ``out``."""
    i, j = _parse_dims(result, dims)
    summary = PlotSummary()
    fig, ax = plt.subplots(figsize=(6, 6))
    cmap = plt.get_cmap("viridis")
    T = max(result.horizon, 1)

    for u in unsafe_sets:
        poly = projection_outline(u.region, (i, j))
        ax.fill(poly[:, 0], poly[:, 1], color="tab:red", alpha=0.3, label=u.label or None)

    for t, step in enumerate(result.steps):
        color = cmap(t / T)
        if len(step) == 0:
            summary.skipped.append(t)
            ax.annotate(f"t={t}: empty", xy=(0.02, 0.98 - 0.04 * len(summary.skipped)),
                        xycoords="axes fraction", fontsize=8, va="top")
            continue
        for k, member in enumerate(step):
            try:
                poly = projection_outline(member, (i, j))
            except EmptySet:
                logger.debug("t=%d member %d is empty, not drawn", t, k)
                continue
            closed = np.vstack((poly, poly[:1]))
            label = f"t={t}" if k == 0 else None
            if t == 0:
                ax.fill(poly[:, 0], poly[:, 1], color=color, alpha=0.35, label=label)
            ax.plot(closed[:, 0], closed[:, 1], "-", color=color, linewidth=1.0,
                    label=None if t == 0 else label)
            summary.outlines += 1
        summary.drawn.append(t)

    if trajectories is not None and len(trajectories):
        pts = trajectories.reshape(-1, trajectories.shape[-1])
        ax.plot(pts[:, i], pts[:, j], ".", color="tab:red", markersize=1.5)

    ax.set_xlabel(f"x{i + 1}")
    ax.set_ylabel(f"x{j + 1}")
    if title:
        ax.set_title(title)
    ax.grid(True)
    ax.legend(fontsize=7, loc="best")

    buf = io.BytesIO()
    fig.savefig(buf, format="svg")
    plt.close(fig)
    write_atomic(out, buf.getvalue())
    logger.info("wrote %s (%d outlines, %d steps skipped)", out, summary.outlines, len(summary.skipped))
    return summary
