"""Zero location, classification and counting on metric graphs.

A function here is a finite real combination ``F = sum a_i f_{k_i}`` of
computed eigenfunctions. Its zeros are counted once each, classified as
edge-interior (transversal or tangential) or inner-vertex zeros; boundary
vertices never count. Counting is scale and sign invariant: all thresholds
compare against the sup norm of ``F`` over the graph.

Strategy per edge: sample densely enough to separate zeros (at least 16
samples per half-wavelength at the largest contributing eigenvalue), locate
sign changes and refine by bisection, then probe interior local minima of
``|F|`` that stay one-signed for tangential (even-order) zeros. Zeros within
one position tolerance of an inner vertex merge into that vertex's single
zero; zeros that close to a boundary vertex are discarded as distance-zero
artifacts of the boundary condition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateEdgeError
from .graphs import DIRICHLET, MetricGraph
from .spectral import Spectrum, _golden_min
from .tolerances import DEFAULT, Tolerances

__all__ = ["FunctionOnGraph", "ZeroLocus", "NodalReport",
           "count_zeros", "brute_force_count"]


class FunctionOnGraph:
    """Linear combination of eigenfunctions from one computed spectrum.

    ``indices`` are 1-based spectral indices, strictly increasing; every
    coefficient must be nonzero (a vanishing coefficient silently changes
    which bounds apply, so it is rejected rather than dropped).
    """

    def __init__(self, spectrum: Spectrum, indices: Sequence[int],
                 coeffs: Sequence[float]):
        indices = tuple(int(k) for k in indices)
        coeffs = tuple(float(a) for a in coeffs)
        if len(indices) != len(coeffs) or not indices:
            raise ValueError("indices and coefficients must align and be non-empty")
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError(f"indices must be strictly increasing, got {indices}")
        if indices[0] < 1 or indices[-1] > len(spectrum):
            raise ValueError(
                f"indices {indices} outside the computed window 1..{len(spectrum)}")
        if any(not math.isfinite(a) or a == 0.0 for a in coeffs):
            raise ValueError(f"coefficients must be finite and nonzero, got {coeffs}")
        self.spectrum = spectrum
        self.indices = indices
        self.coeffs = coeffs
        self.pairs = [spectrum.pair(k) for k in indices]
        self.graph = spectrum.graph
        self.lambdas = tuple(p.lam for p in self.pairs)

    @property
    def m(self) -> int:
        return len(self.indices)

    @property
    def lam_max(self) -> float:
        return max(abs(l) for l in self.lambdas)

    def value(self, edge_id, x):
        out = None
        for a, p in zip(self.coeffs, self.pairs):
            term = a * p.value(edge_id, x)
            out = term if out is None else out + term
        return out

    def derivative(self, edge_id, x):
        out = None
        for a, p in zip(self.coeffs, self.pairs):
            term = a * p.derivative(edge_id, x)
            out = term if out is None else out + term
        return out

    def vertex_value(self, v) -> float:
        return sum(a * p.vertex_value(v) for a, p in zip(self.coeffs, self.pairs))


@dataclass(frozen=True)
class ZeroLocus:
    """One zero of the function: either edge-interior at ``(edge_id, x)``
    with kind ``transversal``/``tangential``, or an inner-vertex zero."""

    kind: str                      # "transversal" | "tangential" | "vertex"
    edge_id: object = None
    x: Optional[float] = None
    vertex: object = None
    residual: float = 0.0          # |F| at the located zero, relative to sup

    def to_obj(self) -> dict:
        if self.kind == "vertex":
            return {"kind": self.kind, "vertex": self.vertex,
                    "residual": self.residual}
        return {"kind": self.kind, "edge": self.edge_id, "x": self.x,
                "residual": self.residual}


@dataclass(frozen=True)
class NodalReport:
    total: int
    loci: tuple
    per_edge: dict
    sup_norm: float
    tangential_present: bool
    vertex_zero_present: bool
    approximate: bool              # unresolved near-coincident cluster seen
    clusters: tuple

    def to_obj(self) -> dict:
        return {
            "total": self.total,
            "per_edge": {str(k): v for k, v in self.per_edge.items()},
            "tangential_present": self.tangential_present,
            "vertex_zero_present": self.vertex_zero_present,
            "approximate": self.approximate,
            "sup_norm": self.sup_norm,
            "loci": [l.to_obj() for l in self.loci],
            "clusters": [list(c) for c in self.clusters],
        }


def _bisect_scalar(fn, a, b, fa, fb, x_tol):
    while b - a > x_tol:
        m = 0.5 * (a + b)
        fm = fn(m)
        if fm == 0.0:
            return m, 0.0
        if (fa < 0) != (fm < 0):
            b, fb = m, fm
        else:
            a, fa = m, fm
    m = 0.5 * (a + b)
    return m, fn(m)


def _edge_samples(fn: FunctionOnGraph, edge, min_intervals: int = 32):
    n = max(min_intervals,
            int(math.ceil(16.0 * edge.length * math.sqrt(max(fn.lam_max, 1.0)) / math.pi)))
    xs = np.linspace(0.0, edge.length, n + 1)
    return xs, fn.value(edge.id, xs)


def count_zeros(fn: FunctionOnGraph, tol: Tolerances = DEFAULT) -> NodalReport:
    """Locate, classify and count the zeros of ``fn`` (see module docstring).

    Raises :class:`DegenerateEdgeError` when the function is numerically
    identically zero on some edge, in which case a zero count is undefined.
    """
    graph = fn.graph
    samples = {}
    sup = 0.0
    for e in graph.edges:
        xs, ys = _edge_samples(fn, e)
        samples[e.id] = (xs, ys)
        sup = max(sup, float(np.max(np.abs(ys))))
    if sup <= 0.0:
        raise DegenerateEdgeError("function is identically zero on the whole graph")

    vertex_vals = {v: fn.vertex_value(v) for v in graph.vertices}
    inner = set(graph.inner_vertices)
    vertex_zero = {v for v in inner
                   if abs(vertex_vals[v]) <= tol.vertex_zero * sup}

    loci = []
    per_edge = {}
    clusters = []
    approximate = False
    for e in graph.edges:
        xs, ys = samples[e.id]
        edge_sup = float(np.max(np.abs(ys)))
        if edge_sup <= tol.degenerate_edge * sup:
            raise DegenerateEdgeError(
                f"function vanishes identically on edge {e.id!r} "
                f"(edge sup {edge_sup:.3g} vs graph sup {sup:.3g})")
        x_tol_abs = tol.x_zero * e.length
        edge_loci = _edge_zeros(fn, e, xs, ys, sup, x_tol_abs, tol, vertex_zero)
        edge_loci.sort(key=lambda l: l.x)
        # near-coincident loci are suspicious: report but flag approximate
        for a, b in zip(edge_loci, edge_loci[1:]):
            if b.x - a.x < tol.cluster_factor * x_tol_abs:
                approximate = True
                clusters.append((str(e.id), a.x, b.x))
        loci.extend(edge_loci)
        per_edge[e.id] = len(edge_loci)

    for v in graph.vertices:
        if v in vertex_zero:
            loci.append(ZeroLocus(kind="vertex", vertex=v,
                                  residual=abs(vertex_vals[v]) / sup))

    return NodalReport(
        total=len(loci),
        loci=tuple(loci),
        per_edge=per_edge,
        sup_norm=sup,
        tangential_present=any(l.kind == "tangential" for l in loci),
        vertex_zero_present=any(l.kind == "vertex" for l in loci),
        approximate=approximate,
        clusters=tuple(clusters),
    )


def _edge_zeros(fn, e, xs, ys, sup, x_tol_abs, tol, vertex_zero):
    """Transversal and tangential zeros strictly inside one edge."""
    graph = fn.graph
    n = len(xs)

    # endpoint policy: an endpoint sample joins the sign sequence unless the
    # function vanishes there (Dirichlet boundary or an inner-vertex zero)
    def endpoint_active(vertex, val):
        if abs(val) <= tol.vertex_zero * sup:
            return False
        return True

    active = np.ones(n, dtype=bool)
    if not endpoint_active(e.src, ys[0]):
        active[0] = False
    if not endpoint_active(e.dst, ys[-1]):
        active[-1] = False

    idx = np.nonzero(active)[0]
    found = []
    absy = np.abs(ys)

    # noise-floor samples flanked by one sign on both sides: a lens left by a
    # near-tangential configuration. Its grid-scale crossings are noise, so
    # the sweep below leaves them to the dip probe, which records one zero.
    noise = tol.tangential_confirm * sup
    lens = np.zeros(n, dtype=bool)
    for j in range(1, n - 1):
        lens[j] = (absy[j] <= noise and ys[j] != 0.0
                   and ys[j - 1] != 0.0 and ys[j + 1] != 0.0
                   and (ys[j - 1] < 0) == (ys[j + 1] < 0))

    def f(x):
        return float(fn.value(e.id, x))

    # exact zeros landing on interior grid samples (classify by flank signs)
    for j in idx:
        if ys[j] != 0.0 or j == 0 or j == n - 1:
            continue
        kind = "transversal" if (ys[j - 1] < 0) != (ys[j + 1] < 0) else "tangential"
        locus = _place_edge_zero(graph, e, float(xs[j]), 0.0, sup, x_tol_abs,
                                 vertex_zero, kind)
        if locus is not None:
            found.append(locus)

    # sign changes between consecutive active samples
    for j0, j1 in zip(idx, idx[1:]):
        if ys[j0] == 0.0 or ys[j1] == 0.0:
            continue  # exact grid zeros were placed above
        if lens[j0] or lens[j1]:
            continue
        if (ys[j0] < 0) == (ys[j1] < 0):
            continue
        x, res = _bisect_scalar(f, float(xs[j0]), float(xs[j1]),
                                ys[j0], ys[j1], x_tol_abs)
        locus = _place_edge_zero(graph, e, x, res, sup, x_tol_abs,
                                 vertex_zero, "transversal")
        if locus is not None:
            found.append(locus)

    # shallow-dip probes: one-signed interior local minima of |F|. A dip is
    # either a tangential (even-order) zero, a close pair of transversal
    # zeros hiding inside one grid cell, or a harmless shallow extremum; the
    # trigger is deliberately loose and the refinement sorts the three out.
    for j in range(1, n - 1):
        if absy[j] > absy[j - 1] or absy[j] > absy[j + 1]:
            continue
        lo_w, hi_w = max(0, j - 8), min(n, j + 9)
        local = float(np.max(absy[lo_w:hi_w]))
        if absy[j] > max(0.05 * local, tol.tangential_candidate * sup):
            continue
        if ys[j] == 0.0 or ys[j - 1] == 0.0 or ys[j + 1] == 0.0:
            continue
        if (ys[j - 1] < 0) != (ys[j + 1] < 0):
            continue  # bracketed sign change owns this dip
        if not lens[j] and (ys[j] < 0) != (ys[j - 1] < 0):
            continue  # grid-resolved crossings around j: the sweep owns them
        a, b = float(xs[j - 1]), float(xs[j + 1])
        da, db = float(fn.derivative(e.id, a)), float(fn.derivative(e.id, b))
        if da != 0.0 and db != 0.0 and (da < 0) != (db < 0):
            # one interior extremum of F: land exactly on it
            x, _ = _bisect_scalar(lambda t: float(fn.derivative(e.id, t)),
                                  a, b, da, db, x_tol_abs * 1e-2)
        else:
            x, _ = _golden_min(lambda t: abs(f(t)), a, b)
        fx = f(x)
        if any(abs(x - l.x) < tol.cluster_factor * x_tol_abs for l in found):
            continue  # same zero as an already-located crossing
        if abs(fx) > noise and (fx < 0) != (ys[j - 1] < 0):
            # the dip dives through zero: a close pair of transversal zeros
            for (p, q, fp, fq) in ((a, x, ys[j - 1], fx), (x, b, fx, ys[j + 1])):
                xz, rz = _bisect_scalar(f, p, q, fp, fq, x_tol_abs)
                locus = _place_edge_zero(graph, e, xz, rz, sup, x_tol_abs,
                                         vertex_zero, "transversal")
                if locus is not None:
                    found.append(locus)
        elif abs(fx) <= tol.tangential_confirm * sup:
            # guard: golden may have landed on one member of an unresolved
            # pair; a true tangential zero keeps one sign on both flanks
            pl, pr = max(x - 10.0 * x_tol_abs, a), min(x + 10.0 * x_tol_abs, b)
            fl, fr = f(pl), f(pr)
            if fl != 0.0 and fr != 0.0 and (fl < 0) != (fr < 0):
                # x sits on one crossing of a pair: recover every crossing
                # between the outer flanks from the local sign pattern
                for (p, q, fp, fq) in ((a, pl, ys[j - 1], fl), (pl, pr, fl, fr),
                                       (pr, b, fr, ys[j + 1])):
                    if fp == 0.0 or fq == 0.0 or (fp < 0) == (fq < 0):
                        continue
                    xz, rz = _bisect_scalar(f, p, q, fp, fq, x_tol_abs)
                    locus = _place_edge_zero(graph, e, xz, rz, sup, x_tol_abs,
                                             vertex_zero, "transversal")
                    if locus is not None:
                        found.append(locus)
            else:
                locus = _place_edge_zero(graph, e, x, abs(fx), sup, x_tol_abs,
                                         vertex_zero, "tangential")
                if locus is not None:
                    found.append(locus)
    return found


def _place_edge_zero(graph, e, x, res, sup, x_tol_abs, vertex_zero, kind):
    """Attribute a refined zero position: merge into an inner-vertex zero,
    discard at a boundary vertex, otherwise keep as an edge locus (a genuine
    zero may hug an inner vertex whose own value is nonzero)."""
    for (vertex, at) in ((e.src, 0.0), (e.dst, e.length)):
        if abs(x - at) <= 2.0 * x_tol_abs:
            if vertex in vertex_zero:
                return None  # the vertex locus counts it once
            if graph.degree(vertex) == 1:
                return None  # boundary points never count
    return ZeroLocus(kind=kind, edge_id=e.id, x=float(x),
                     residual=abs(res) / sup)


def brute_force_count(fn: FunctionOnGraph, samples_per_edge: int = 1000,
                      tol: Tolerances = DEFAULT) -> int:
    """Independent sign-change count on a dense uniform grid.

    Counts strict sign alternations of interior samples (augmented by
    nonzero inner-vertex values at the edge ends) plus inner-vertex zeros.
    No refinement and no tangential detection: a cross-check, not an oracle
    for tangential configurations.
    """
    if samples_per_edge < 1000:
        raise ValueError(f"samples_per_edge must be >= 1000, got {samples_per_edge}")
    graph = fn.graph
    vertex_vals = {v: fn.vertex_value(v) for v in graph.vertices}
    edge_vals = {}
    sup = max((abs(val) for val in vertex_vals.values()), default=0.0)
    for e in graph.edges:
        xsin = e.length * np.arange(1, samples_per_edge + 1) / (samples_per_edge + 1.0)
        ys = fn.value(e.id, xsin)
        edge_vals[e.id] = ys
        sup = max(sup, float(np.max(np.abs(ys))))
    if sup <= 0.0:
        raise DegenerateEdgeError("function is identically zero on the whole graph")

    inner = set(graph.inner_vertices)
    vertex_zero = {v for v in inner
                   if abs(vertex_vals[v]) <= tol.vertex_zero * sup}
    count = len(vertex_zero)
    for e in graph.edges:
        seq = []
        if e.src in inner and e.src not in vertex_zero:
            seq.append(vertex_vals[e.src])
        seq.extend(edge_vals[e.id])
        if e.dst in inner and e.dst not in vertex_zero:
            seq.append(vertex_vals[e.dst])
        signs = np.sign(np.asarray(seq))
        signs = signs[signs != 0]
        count += int(np.sum(signs[:-1] != signs[1:]))
    return count
