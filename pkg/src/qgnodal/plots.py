"""Figure rendering for the report paths.

Figures are written straight to files through the Agg canvas; nothing here
touches a GUI backend or global state. The delimited outputs remain the
interface of record, these are companions for eyeballing a run.

Edges are laid out by concatenated arclength: edge ``i`` occupies
``[off_i, off_i + l_i]`` on a shared horizontal axis with its id tick at the
midpoint, which keeps one axes readable for any graph.
"""
from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

__all__ = [
    "edge_offsets", "render_spectrum", "render_profile", "render_nodal",
    "render_heatflow", "render_bound_trials",
]


def _save(fig: Figure, path: str) -> str:
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=130)
    return path


def edge_offsets(graph):
    """Arclength offset of each edge on the shared axis, plus the total."""
    off = {}
    x = 0.0
    for e in graph.edges:
        off[e.id] = x
        x += e.length
    return off, x


def _edge_axis(ax, graph, off, total):
    for e in graph.edges:
        ax.axvline(off[e.id], color="0.85", lw=0.8, zorder=0)
    ax.axvline(total, color="0.85", lw=0.8, zorder=0)
    ax.set_xticks([off[e.id] + 0.5 * e.length for e in graph.edges])
    ax.set_xticklabels([str(e.id) for e in graph.edges], fontsize=8)
    ax.set_xlim(0.0, total)


def render_spectrum(spectrum, path: str) -> str:
    lams = list(spectrum.lambdas)
    fig = Figure(figsize=(6.0, 3.2))
    ax = fig.add_subplot(111)
    ax.plot(range(1, len(lams) + 1), lams, "o-", ms=4)
    ax.set_xlabel("index")
    ax.set_ylabel("eigenvalue")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)


def render_profile(fn, path: str, n: int = 200) -> str:
    """One combination (or eigenfunction) over the concatenated edges."""
    graph = fn.graph
    off, total = edge_offsets(graph)
    fig = Figure(figsize=(max(6.0, 1.2 * len(graph.edges)), 3.2))
    ax = fig.add_subplot(111)
    for e in graph.edges:
        xs = np.linspace(0.0, e.length, n)
        ax.plot(off[e.id] + xs, fn.value(e.id, xs), lw=1.2, color="C0")
    ax.axhline(0.0, color="0.6", lw=0.8)
    _edge_axis(ax, graph, off, total)
    ax.set_ylabel("value")
    fig.tight_layout()
    return _save(fig, path)


def render_nodal(fn, report, path: str, n: int = 200) -> str:
    graph = fn.graph
    off, total = edge_offsets(graph)
    fig = Figure(figsize=(max(6.0, 1.2 * len(graph.edges)), 3.2))
    ax = fig.add_subplot(111)
    for e in graph.edges:
        xs = np.linspace(0.0, e.length, n)
        ax.plot(off[e.id] + xs, fn.value(e.id, xs), lw=1.2, color="C0")
    for locus in report.loci:
        if locus.edge_id is not None:
            ax.plot([off[locus.edge_id] + locus.x], [0.0], "x", color="C3",
                    ms=7, mew=1.6)
    ax.axhline(0.0, color="0.6", lw=0.8)
    _edge_axis(ax, graph, off, total)
    ax.set_ylabel("value")
    ax.set_title(f"{report.total} zeros", fontsize=9)
    fig.tight_layout()
    return _save(fig, path)


def render_heatflow(trace, events, path: str) -> str:
    """Zero trajectories in the (position, y) strip with event markers."""
    graph = trace.fn.graph
    off, total = edge_offsets(graph)
    fig = Figure(figsize=(max(6.0, 1.2 * len(graph.edges)), 4.2))
    ax = fig.add_subplot(111)
    pos, ys = [], []
    for s in trace.slices:
        for eid, xs in s.zeros.items():
            for x in xs:
                pos.append(off[eid] + x)
                ys.append(s.y)
    ax.plot(pos, ys, ".", ms=1.6, color="C0", rasterized=True)
    # vertex-zero tracks sit on the shared end coordinate of an incident edge
    for s in trace.slices:
        for v in s.vertex_zeros:
            (ei, end) = graph.vertex_ends[v][0]
            e = graph.edges[ei]
            ax.plot([off[e.id] + (0.0 if end == 0 else e.length)], [s.y],
                    ".", ms=2.4, color="C2")
    colors = {"E3": "C3", "E4": "C1", "E5": "C4", "E6": "C2",
              "E1": "k", "E2": "k", "unknown": "0.5"}
    for e in events:
        if e.site[0] == "edge":
            x = off[e.site[1]] + e.site[2]
        elif e.site[0] in ("vertex", "boundary"):
            v = e.site[1]
            (ei, end) = graph.vertex_ends[v][0]
            ed = graph.edges[ei]
            x = off[ed.id] + (0.0 if end == 0 else ed.length)
        else:
            continue
        ax.plot([x], [e.y], "s", ms=5, mfc="none",
                mec=colors.get(e.kind, "0.5"), mew=1.4)
    _edge_axis(ax, graph, off, total)
    ax.set_ylabel("y")
    fig.tight_layout()
    return _save(fig, path)


def render_bound_trials(certs, path: str) -> str:
    """Measured counts against their certified windows, one trial per column."""
    fig = Figure(figsize=(max(6.0, 0.1 * len(certs)), 3.4))
    ax = fig.add_subplot(111)
    for i, c in enumerate(certs):
        ax.plot([i, i], [c.lower, c.upper], "-", color="0.75", lw=2)
        ok = c.passed is not False
        ax.plot([i], [c.measured], "o", ms=3, color="C0" if ok else "C3")
    ax.set_xlabel("trial")
    ax.set_ylabel("zero count")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)
