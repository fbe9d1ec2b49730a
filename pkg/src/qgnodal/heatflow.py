"""Heat-flow deformation of eigenfunction combinations and its nodal events.

For ``F = sum a_i f_{k_i}`` the deformation

    g(x, y) = sum a_i exp(-lam_i y) f_{k_i}(x)

interpolates between the highest mode's nodal pattern (y -> -infinity) and
the lowest mode's (y -> +infinity). Slices in ``y`` are counted with the
same endpoint policy as the static counter, but sign-only (no tangential
refinement): a tangential configuration occupies a single ``y`` and shows up
as the event between two slices instead.

Coefficients are evaluated in log space and rescaled by the dominant
exponential at each ``y``; that leaves every zero set unchanged while
keeping all quantities representable over the whole propagation range.

Detected events between slices:

    E6 ("vertex")    the zero set crosses an inner vertex; the count may
                     rise by at most ``deg(v) - 2``, and the number of such
                     crossings per vertex is bounded by the sign-change
                     count of the exponential sum ``y -> F_y(v)``, hence by
                     the number of terms minus one.
    E5 ("boundary")  a zero line leaves through a boundary vertex.
    E3 / E4          zero lines collide / a line terminates inside an edge.
    E1 / E2          a line appears or splits inside an edge; forbidden by
                     the deformation's local structure, so a persistent one
                     is reported as a violation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import RangeExplosionError
from .graphs import MetricGraph
from .nodal import FunctionOnGraph, count_zeros
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "NodalEvent", "TraceSlice", "HeatFlowTrace", "ComboFlow", "evolve",
    "detect_events", "ExpSumBound", "vertex_crossing_bound",
    "HeatFlowAudit", "audit_trace", "trace_rows", "event_rows",
]


@dataclass(frozen=True)
class NodalEvent:
    y: float
    kind: str          # "E1".."E6" | "unknown"
    site: tuple        # ("edge", id, x) | ("vertex", id) | ("boundary", id) | ("unknown",)
    delta: int
    violation: bool = False
    note: str = ""

    def site_str(self) -> str:
        if self.site[0] == "edge":
            return f"edge:{self.site[1]}:{self.site[2]:.6g}"
        if self.site[0] in ("vertex", "boundary"):
            return f"{self.site[0]}:{self.site[1]}"
        return "unknown"

    def to_obj(self) -> dict:
        return {"y": self.y, "kind": self.kind, "site": self.site_str(),
                "delta": self.delta, "violation": self.violation,
                "note": self.note}


@dataclass
class TraceSlice:
    y: float
    zeros: dict            # edge id -> np.ndarray of positions
    vertex_zeros: tuple
    count: int
    sup: float


class ComboFlow:
    """Slice evaluator for the deformation of one combination."""

    def __init__(self, fn: FunctionOnGraph, tol: Tolerances = DEFAULT,
                 min_intervals: int = 32):
        self.fn = fn
        self.graph = fn.graph
        self.tol = tol
        self.lams = np.asarray(fn.lambdas)
        a = np.asarray(fn.coeffs)
        self.log_a = np.log(np.abs(a))
        self.sign_a = np.sign(a)
        lam_ref = max(fn.lam_max, 1.0)
        self.grids = {}
        self.mats = {}
        for e in self.graph.edges:
            n = max(min_intervals,
                    int(math.ceil(16.0 * e.length * math.sqrt(lam_ref) / math.pi)))
            n += n % 2
            xs = np.linspace(0.0, e.length, n + 1)
            self.grids[e.id] = xs
            self.mats[e.id] = np.column_stack(
                [p.value(e.id, xs) for p in fn.pairs])
        self.vvec = {v: np.array([p.vertex_value(v) for p in fn.pairs])
                     for v in self.graph.vertices}
        self.inner = tuple(self.graph.inner_vertices)

    def coeffs_at(self, y: float) -> np.ndarray:
        """Combination coefficients at ``y``, rescaled so the largest has
        magnitude one (zeros of the slice are unaffected by the rescale)."""
        exps = self.log_a - self.lams * y
        return self.sign_a * np.exp(exps - np.max(exps))

    def vertex_signal(self, v, y: float):
        """Signed value of the slice at vertex ``v`` plus its natural scale."""
        c = self.coeffs_at(y)
        w = self.vvec[v]
        return float(w @ c), float(np.abs(w) @ np.abs(c))

    def vertex_signal_series(self, v, ys: np.ndarray) -> np.ndarray:
        exps = self.log_a[None, :] - np.outer(np.asarray(ys), self.lams)
        exps -= exps.max(axis=1, keepdims=True)
        return (self.sign_a[None, :] * np.exp(exps)) @ self.vvec[v]

    def slice_at(self, y: float, refine: int = 1) -> TraceSlice:
        c = self.coeffs_at(y)
        vvals = {v: float(self.vvec[v] @ c) for v in self.graph.vertices}
        edge_vals = {}
        sup = max((abs(val) for val in vvals.values()), default=0.0)
        for e in self.graph.edges:
            if refine == 1:
                xs = self.grids[e.id]
                vals = self.mats[e.id] @ c
            else:
                base = self.grids[e.id]
                xs = np.linspace(0.0, e.length, (len(base) - 1) * refine + 1)
                vals = np.zeros_like(xs)
                for coef, p in zip(c, self.fn.pairs):
                    vals += coef * p.value(e.id, xs)
            edge_vals[e.id] = (xs, vals)
            m = float(np.max(np.abs(vals)))
            sup = max(sup, m)
        vtol = self.tol.vertex_zero * sup
        vz = tuple(v for v in self.inner if abs(vvals[v]) <= vtol)
        zeros = {}
        total = len(vz)
        for e in self.graph.edges:
            xs, vals = edge_vals[e.id]
            i0 = 0 if abs(vals[0]) > vtol else 1
            i1 = len(vals) if abs(vals[-1]) > vtol else len(vals) - 1
            seg = vals[i0:i1]
            sx = xs[i0:i1]
            if len(seg) < 2:
                zeros[e.id] = np.empty(0)
                continue
            prod = seg[:-1] * seg[1:]
            flips = np.nonzero(prod < 0.0)[0]
            pos = sx[flips] - seg[flips] * (sx[flips + 1] - sx[flips]) / (
                seg[flips + 1] - seg[flips])
            exact = np.nonzero(seg[1:-1] == 0.0)[0] + 1
            if len(exact):
                pos = np.sort(np.concatenate([pos, sx[exact]]))
            zeros[e.id] = pos
            total += len(pos)
        return TraceSlice(y=float(y), zeros=zeros, vertex_zeros=vz,
                          count=total, sup=sup)

    def count_at(self, y: float) -> int:
        return self.slice_at(y).count


@dataclass
class HeatFlowTrace:
    fn: FunctionOnGraph
    flow: ComboFlow
    ys: np.ndarray
    slices: list
    counts: np.ndarray
    dy: float
    target_low: int            # zero count of f_{k_M}: the y -> -inf pattern
    target_high: int           # zero count of f_{k_1}: the y -> +inf pattern
    stabilized_low: bool
    stabilized_high: bool
    curves: list               # per slice: edge id -> list of curve ids
    vertex_curves: list        # per slice: vertex id -> curve id

    @property
    def count_at_zero(self) -> int:
        j = int(np.argmin(np.abs(self.ys)))
        return int(self.counts[j])


def _single_target(fn: FunctionOnGraph, index: int, tol: Tolerances) -> int:
    single = FunctionOnGraph(fn.spectrum, (index,), (1.0,))
    return count_zeros(single, tol).total


def evolve(fn: FunctionOnGraph, *, y_min: float = None, y_max: float = None,
           dy: float = None, stabilization: int = 20, threads: int = 1,
           tol: Tolerances = DEFAULT) -> HeatFlowTrace:
    """Propagate the deformation over ``y`` and count zeros per slice.

    Without an explicit range the trace grows outward from ``y = 0`` until
    the count holds the expected extreme value for ``stabilization``
    consecutive slices on each side. The step is ``0.1`` divided by the
    spread of the participating eigenvalues. Growth is aborted when the
    coefficient ratio would pass 1e300 before stabilizing.
    """
    flow = ComboFlow(fn, tol)
    if fn.m == 1:
        s0 = flow.slice_at(0.0)
        tgt = _single_target(fn, fn.indices[0], tol)
        trace = HeatFlowTrace(
            fn=fn, flow=flow, ys=np.array([0.0]), slices=[s0],
            counts=np.array([s0.count]), dy=0.0,
            target_low=tgt, target_high=tgt,
            stabilized_low=s0.count == tgt, stabilized_high=s0.count == tgt,
            curves=[], vertex_curves=[])
        trace.curves, trace.vertex_curves = _assign_curves(flow, trace.slices, 0.0)
        return trace

    gap = fn.lambdas[-1] - fn.lambdas[0]
    dy = dy if dy is not None else 0.1 / gap
    spread = float(np.max(flow.log_a) - np.min(flow.log_a))
    target_low = _single_target(fn, fn.indices[-1], tol)
    target_high = _single_target(fn, fn.indices[0], tol)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        executor = ThreadPoolExecutor(max_workers=threads)
        mapper = executor.map
    else:
        executor = None
        mapper = map

    def guard(y):
        if gap * abs(y) + spread > 690.0:
            raise RangeExplosionError(
                f"coefficient ratio would exceed 1e300 at y = {y:.6g} before "
                f"the zero count stabilizes")

    try:
        s0 = flow.slice_at(0.0)
        adaptive = y_min is None and y_max is None
        if adaptive:
            down = _extend(flow, s0, -dy, target_low, stabilization, guard, mapper)
            up = _extend(flow, s0, +dy, target_high, stabilization, guard, mapper)
            stabilized_low = stabilized_high = True
        else:
            y_min = 0.0 if y_min is None else float(y_min)
            y_max = 0.0 if y_max is None else float(y_max)
            if y_min > 0.0 or y_max < 0.0:
                raise ValueError("explicit range must contain y = 0")
            n_down = int(math.ceil(-y_min / dy)) if y_min < 0 else 0
            n_up = int(math.ceil(y_max / dy)) if y_max > 0 else 0
            down = list(mapper(flow.slice_at, [-dy * (i + 1) for i in range(n_down)]))
            up = list(mapper(flow.slice_at, [dy * (i + 1) for i in range(n_up)]))
            stabilized_low = _trailing_run([s.count for s in down], target_low) >= min(
                stabilization, max(len(down), 1))
            stabilized_high = _trailing_run([s.count for s in up], target_high) >= min(
                stabilization, max(len(up), 1))
    finally:
        if executor is not None:
            executor.shutdown()

    slices = list(reversed(down)) + [s0] + up
    ys = np.array([s.y for s in slices])
    counts = np.array([s.count for s in slices])
    trace = HeatFlowTrace(
        fn=fn, flow=flow, ys=ys, slices=slices, counts=counts, dy=dy,
        target_low=target_low, target_high=target_high,
        stabilized_low=stabilized_low, stabilized_high=stabilized_high,
        curves=[], vertex_curves=[])
    trace.curves, trace.vertex_curves = _assign_curves(flow, slices, dy)
    return trace


def _trailing_run(counts, target) -> int:
    run = 0
    for c in reversed(counts):
        if c != target:
            break
        run += 1
    return run


def _extend(flow, s0, step, target, stabilization, guard, mapper,
            block: int = 16, max_slices: int = 500000):
    out = []
    run = 1 if s0.count == target else 0
    j = 0
    while run < stabilization:
        ys = [step * (j + i + 1) for i in range(block)]
        for y in ys:
            guard(y)
        news = list(mapper(flow.slice_at, ys))
        for s in news:
            out.append(s)
            run = run + 1 if s.count == target else 0
        j += block
        if j > max_slices:
            raise RangeExplosionError(
                f"no stabilization after {max_slices} slices "
                f"(target {target}, step {step:.3g})")
    return out


def _assign_curves(flow, slices, dy):
    """Greedy nearest matching of zero positions between consecutive slices;
    each matched chain gets one id (the trace CSV's curve_id column)."""
    next_id = 0
    curves = []
    vertex_curves = []
    vmap = {}
    prev = {}  # edge id -> list of [x, cid, vel]
    for s in slices:
        cur = {}
        nprev = {}
        for eid, xs_cur in s.zeros.items():
            grid = flow.grids[eid]
            spacing = grid[1] - grid[0]
            cands = []
            plist = prev.get(eid, [])
            for i, (x0, cid, vel) in enumerate(plist):
                radius = max(2.0 * spacing, 4.0 * abs(vel) * dy)
                for j, x1 in enumerate(xs_cur):
                    if abs(x1 - x0) <= radius:
                        cands.append((abs(x1 - x0), i, j))
            cands.sort()
            used_i, used_j = set(), set()
            ids = [-1] * len(xs_cur)
            state = []
            for (_, i, j) in cands:
                if i in used_i or j in used_j:
                    continue
                used_i.add(i)
                used_j.add(j)
                x0, cid, _ = plist[i]
                vel = (xs_cur[j] - x0) / dy if dy > 0 else 0.0
                ids[j] = cid
                state.append([float(xs_cur[j]), cid, vel])
            for j, x1 in enumerate(xs_cur):
                if ids[j] < 0:
                    ids[j] = next_id
                    next_id += 1
                    state.append([float(x1), ids[j], 0.0])
            cur[eid] = ids
            nprev[eid] = state
        vcur = {}
        for v in s.vertex_zeros:
            if v not in vmap:
                vmap[v] = next_id
                next_id += 1
            vcur[v] = vmap[v]
        curves.append(cur)
        vertex_curves.append(vcur)
        prev = nprev
    return curves, vertex_curves


# ── event detection ─────────────────────────────────────────────────────────

def detect_events(trace: HeatFlowTrace, tol: Tolerances = DEFAULT) -> list:
    """Locate and classify every change of the slice count (module docstring).

    Inner-vertex crossings are found first and independently, as sign
    changes of the exponential sums ``y -> F_y(v)``, bisected to high
    precision; every remaining count change is localized by recursive
    bisection of the slice count and classified from the local difference
    of the two bracketing zero sets.
    """
    flow = trace.flow
    graph = flow.graph
    ys = trace.ys
    if len(ys) < 2:
        return []

    stubs = _vertex_crossings(flow, ys)
    groups = _group_stubs(stubs, tol)

    # build the boundary chain: grid points interleaved with stub cuts;
    # grid points inside a cut span are dropped so spans stay contiguous
    cut_spans = []
    for g in groups:
        gy = g[0][0]
        near = [abs(gy - h[0][0]) for h in groups if h is not g]
        h = trace.dy / 16.0
        if near:
            h = min(h, min(near) / 4.0)
        h = min(h, (gy - ys[0]) / 2.0, (ys[-1] - gy) / 2.0)
        h = max(h, 1e-13 * max(1.0, abs(gy)))
        cut_spans.append((gy - h, gy + h, g))
    points = [(float(y), int(c)) for y, c in zip(ys, trace.counts)
              if not any(a < y < b for (a, b, _) in cut_spans)]
    for (a, b, _) in cut_spans:
        points.append((a, flow.count_at(a)))
        points.append((b, flow.count_at(b)))
    points.sort(key=lambda p: p[0])
    cut_lookup = {(a, b): g for (a, b, g) in cut_spans}

    events = []
    for (ya, ca), (yb, cb) in zip(points, points[1:]):
        if yb <= ya:
            continue
        g = cut_lookup.get((ya, yb))
        if g is not None:
            events.extend(_vertex_events(flow, g, ya, yb, ca, cb, tol))
        elif ca != cb:
            for (a, b, na, nb) in _split_changes(flow, ya, yb, ca, cb, tol):
                events.extend(_classify_bracket(flow, graph, a, b, na, nb, tol))
    events.sort(key=lambda e: e.y)
    return events


def _vertex_crossings(flow: ComboFlow, ys: np.ndarray) -> list:
    stubs = []
    for v in flow.inner:
        series = flow.vertex_signal_series(v, ys)
        sg = np.sign(series)
        for j in range(len(ys) - 1):
            if sg[j] == 0.0:
                stubs.append((float(ys[j]), v))
            elif sg[j + 1] != 0.0 and sg[j] != sg[j + 1]:
                stubs.append((_bisect_signal(flow, v, float(ys[j]), float(ys[j + 1]),
                                             float(series[j]), float(series[j + 1])), v))
    stubs.sort(key=lambda s: s[0])
    return stubs


def _bisect_signal(flow, v, a, b, fa, fb, rel: float = 1e-13) -> float:
    for _ in range(200):
        if b - a <= rel * max(1.0, abs(a), abs(b)):
            break
        m = 0.5 * (a + b)
        fm = flow.vertex_signal(v, m)[0]
        if fm == 0.0:
            return m
        if (fa < 0) != (fm < 0):
            b, fb = m, fm
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


def _group_stubs(stubs, tol: Tolerances):
    groups = []
    for (y, v) in stubs:
        if groups and abs(y - groups[-1][0][0]) <= tol.y_event * max(1.0, abs(y)):
            groups[-1].append((y, v))
        else:
            groups.append([(y, v)])
    return groups


def _near_vertex_zeros(flow: ComboFlow, s: TraceSlice, v) -> int:
    """Zeros of a slice lying in the half of an incident edge next to ``v``."""
    n = 1 if v in s.vertex_zeros else 0
    for (ei, end) in flow.graph.vertex_ends[v]:
        e = flow.graph.edges[ei]
        rho = 0.5 * e.length
        xs = s.zeros.get(e.id, ())
        for x in xs:
            d = x if end == 0 else e.length - x
            if d < rho:
                n += 1
    return n


def _vertex_events(flow, group, ya, yb, ca, cb, tol) -> list:
    """Events for one (near-)simultaneous group of inner-vertex crossings."""
    delta_global = cb - ca
    if len(group) == 1:
        (y, v) = group[0]
        return [NodalEvent(y=y, kind="E6", site=("vertex", v),
                           delta=delta_global)]
    sa = flow.slice_at(ya)
    sb = flow.slice_at(yb)
    out = []
    attributed = 0
    for (y, v) in group:
        d = _near_vertex_zeros(flow, sb, v) - _near_vertex_zeros(flow, sa, v)
        attributed += d
        out.append(NodalEvent(y=y, kind="E6", site=("vertex", v), delta=d))
    if attributed != delta_global:
        rest = delta_global - attributed
        out.append(NodalEvent(y=group[0][0], kind="unknown", site=("unknown",),
                              delta=rest,
                              note="simultaneous vertex crossings left "
                                   f"{rest:+d} unattributed"))
    return out


def _split_changes(flow, a, b, ca, cb, tol, depth: int = 0) -> list:
    if ca == cb:
        return []
    ytol = tol.y_event * max(1.0, abs(a), abs(b))
    if b - a <= ytol or depth > 60:
        return [(a, b, ca, cb)]
    m = 0.5 * (a + b)
    cm = flow.count_at(m)
    return (_split_changes(flow, a, m, ca, cm, tol, depth + 1)
            + _split_changes(flow, m, b, cm, cb, tol, depth + 1))


def _classify_bracket(flow, graph, a, b, ca, cb, tol) -> list:
    """Classify one localized count change from the bracketing zero sets."""
    sa = flow.slice_at(a)
    sb = flow.slice_at(b)
    y_mid = 0.5 * (a + b)
    items = []  # (edge id, x, side); side -1 vanishing, +1 appearing
    for e in graph.edges:
        xa = list(sa.zeros.get(e.id, ()))
        xb = list(sb.zeros.get(e.id, ()))
        spacing = flow.grids[e.id][1] - flow.grids[e.id][0]
        radius = max(4.0 * spacing, 0.02 * e.length)
        cands = sorted((abs(x1 - x0), i, j)
                       for i, x0 in enumerate(xa) for j, x1 in enumerate(xb)
                       if abs(x1 - x0) <= radius)
        used_i, used_j = set(), set()
        for (_, i, j) in cands:
            if i not in used_i and j not in used_j:
                used_i.add(i)
                used_j.add(j)
        items.extend((e.id, x, -1) for i, x in enumerate(xa) if i not in used_i)
        items.extend((e.id, x, +1) for j, x in enumerate(xb) if j not in used_j)
    for v in sa.vertex_zeros:
        if v not in sb.vertex_zeros:
            items.append((None, v, -1))
    for v in sb.vertex_zeros:
        if v not in sa.vertex_zeros:
            items.append((None, v, +1))

    clusters = _cluster_items(flow, graph, items)
    events = []
    attributed = 0
    for cluster in clusters:
        delta = sum(side for (_, _, side) in cluster)
        if delta == 0:
            continue
        attributed += delta
        events.append(_cluster_event(flow, graph, cluster, sa, sb, y_mid,
                                     delta, a, b, tol))
    if attributed != cb - ca:
        rest = cb - ca - attributed
        events.append(NodalEvent(y=y_mid, kind="unknown", site=("unknown",),
                                 delta=rest,
                                 note=f"{rest:+d} count change not localized "
                                      "to any zero-set difference"))
    return events


def _cluster_items(flow, graph, items):
    """Union items by spatial proximity (same-edge distance, or meeting at a
    shared vertex end)."""
    n = len(items)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj

    def near_vertices(item):
        eid, x, _ = item
        if eid is None:
            return {x}  # vertex item: x holds the vertex id
        e = flow.graph.edge(eid)
        spacing = flow.grids[eid][1] - flow.grids[eid][0]
        r = max(3.0 * spacing, 0.02 * e.length)
        out = set()
        if x <= r:
            out.add(e.src)
        if e.length - x <= r:
            out.add(e.dst)
        return out

    for i in range(n):
        for j in range(i + 1, n):
            ei, xi, _ = items[i]
            ej, xj, _ = items[j]
            if ei is not None and ei == ej:
                spacing = flow.grids[ei][1] - flow.grids[ei][0]
                e = flow.graph.edge(ei)
                if abs(xi - xj) <= max(8.0 * spacing, 0.05 * e.length):
                    union(i, j)
                    continue
            if near_vertices(items[i]) & near_vertices(items[j]):
                union(i, j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(items[i])
    return list(groups.values())


def _cluster_event(flow, graph, cluster, sa, sb, y_mid, delta, a, b,
                   tol) -> NodalEvent:
    edge_items = [(eid, x, side) for (eid, x, side) in cluster if eid is not None]
    vert_items = [(x, side) for (eid, x, side) in cluster if eid is None]
    n_in = sum(1 for (_, _, s) in cluster if s < 0)

    # a common vertex adjacent to the whole cluster, if any
    shared = None
    for (eid, x, _) in edge_items:
        e = graph.edge(eid)
        spacing = flow.grids[eid][1] - flow.grids[eid][0]
        r = max(3.0 * spacing, 0.02 * e.length)
        here = set()
        if x <= r:
            here.add(e.src)
        if e.length - x <= r:
            here.add(e.dst)
        shared = here if shared is None else (shared & here)
    if vert_items:
        vids = {v for (v, _) in vert_items}
        shared = vids if shared is None else (shared & vids)

    if shared:
        v = sorted(shared, key=str)[0]
        if graph.degree(v) == 1:
            return NodalEvent(y=y_mid, kind="E5", site=("boundary", v),
                              delta=delta)
        # vertex touch without a sign change of the vertex signal
        return NodalEvent(y=y_mid, kind="E6", site=("vertex", v), delta=delta,
                          note="tangential vertex contact")

    eid = edge_items[0][0]
    x_mean = float(np.mean([x for (_, x, _) in edge_items]))
    if delta < 0:
        kind = "E3" if n_in >= 2 else "E4"
        return NodalEvent(y=y_mid, kind=kind, site=("edge", eid, x_mean),
                          delta=delta)
    # count increase inside an edge: re-probe on a 4x finer grid before
    # declaring the forbidden event
    fa = flow.slice_at(a, refine=4)
    fb = flow.slice_at(b, refine=4)
    d_fine = fb.count - fa.count
    if d_fine > 0:
        kind = "E1" if n_in == 0 else "E2"
        return NodalEvent(y=y_mid, kind=kind, site=("edge", eid, x_mean),
                          delta=delta, violation=True,
                          note="count increase inside an edge persists "
                               "under refinement")
    return NodalEvent(y=y_mid, kind="unknown", site=("edge", eid, x_mean),
                      delta=delta,
                      note="apparent interior increase vanishes under "
                           "refinement (sampling artifact)")


# ── exponential-sum bound at a vertex ───────────────────────────────────────

@dataclass(frozen=True)
class ExpSumBound:
    """Sign-change budget of ``y -> F_y(v)`` at one inner vertex.

    The exponential sum ``sum c_i e^{-lam_i y}`` has at most as many real
    zeros as sign changes in its coefficient sequence ordered by exponent
    (a Descartes rule for exponentials), which caps how often the nodal set
    can cross the vertex.
    """

    vertex: object
    coefficients: tuple       # a_i f_i(v), ordered by ascending eigenvalue
    dropped: int              # negligible terms excluded from the bound
    sign_changes: int
    zeros: tuple              # located sign crossings in the scan window

    def to_obj(self) -> dict:
        return {"vertex": self.vertex,
                "coefficients": list(self.coefficients),
                "dropped": self.dropped,
                "sign_changes": self.sign_changes,
                "zeros": list(self.zeros)}


def vertex_crossing_bound(fn: FunctionOnGraph, v, *, y_span=None,
                          tol: Tolerances = DEFAULT) -> ExpSumBound:
    """Sign-change count and located zeros of the vertex exponential sum."""
    if v not in set(fn.graph.inner_vertices):
        raise ValueError(f"{v!r} is not an inner vertex")
    coeffs = np.array([a * p.vertex_value(v)
                       for a, p in zip(fn.coeffs, fn.pairs)])
    lams = np.asarray(fn.lambdas)
    cmax = float(np.max(np.abs(coeffs))) if len(coeffs) else 0.0
    keep = np.abs(coeffs) > tol.coeff_drop * cmax
    kc, kl = coeffs[keep], lams[keep]
    dropped = int(len(coeffs) - len(kc))
    signs = np.sign(kc)
    changes = int(np.sum(signs[:-1] != signs[1:])) if len(signs) > 1 else 0

    zeros: list = []
    if changes > 0:
        if y_span is None:
            bal = []
            for i in range(len(kc)):
                for j in range(i + 1, len(kc)):
                    bal.append(math.log(abs(kc[i] / kc[j])) / (kl[j] - kl[i]))
            gap = float(np.min(np.diff(kl)))
            pad = (math.log(len(kc)) + 60.0) / gap
            lo, hi = min(bal) - pad, max(bal) + pad
        else:
            lo, hi = float(y_span[0]), float(y_span[1])
        grid = np.linspace(lo, hi, 4097)
        exps = np.log(np.abs(kc))[None, :] - np.outer(grid, kl)
        exps -= exps.max(axis=1, keepdims=True)
        series = (np.sign(kc)[None, :] * np.exp(exps)).sum(axis=1)
        sg = np.sign(series)
        for j in range(len(grid) - 1):
            if sg[j] != 0 and sg[j + 1] != 0 and sg[j] != sg[j + 1]:
                aY, bY = float(grid[j]), float(grid[j + 1])
                fa, fb = float(series[j]), float(series[j + 1])
                def h(y):
                    ex = np.log(np.abs(kc)) - kl * y
                    ex -= ex.max()
                    return float((np.sign(kc) * np.exp(ex)).sum())
                for _ in range(200):
                    if bY - aY <= 1e-13 * max(1.0, abs(aY), abs(bY)):
                        break
                    mY = 0.5 * (aY + bY)
                    fm = h(mY)
                    if fm == 0.0:
                        aY = bY = mY
                        break
                    if (fa < 0) != (fm < 0):
                        bY, fb = mY, fm
                    else:
                        aY, fa = mY, fm
                zeros.append(0.5 * (aY + bY))
    dedup = []
    for z in sorted(zeros):
        if not dedup or abs(z - dedup[-1]) > 1e-9 * max(1.0, abs(z)):
            dedup.append(z)
    return ExpSumBound(vertex=v, coefficients=tuple(float(c) for c in coeffs),
                       dropped=dropped, sign_changes=changes,
                       zeros=tuple(dedup))


# ── audits ──────────────────────────────────────────────────────────────────

@dataclass
class HeatFlowAudit:
    checks: dict               # name -> {"passed": bool, "detail": str}
    passed: bool
    summary: dict

    def to_obj(self) -> dict:
        return {"passed": self.passed, "summary": dict(self.summary),
                "checks": {k: dict(v) for k, v in self.checks.items()}}


def audit_trace(trace: HeatFlowTrace, events: list = None,
                tol: Tolerances = DEFAULT) -> HeatFlowAudit:
    """Check a trace and its events against the deformation's rules:
    extreme counts, the event ledger, monotonicity away from vertices, and
    the per-vertex crossing budget."""
    if events is None:
        events = detect_events(trace, tol)
    fn = trace.fn
    graph = fn.graph
    checks = {}

    def record(name, passed, detail=""):
        checks[name] = {"passed": bool(passed), "detail": detail}

    c_lo, c_hi = int(trace.counts[0]), int(trace.counts[-1])
    c0 = trace.count_at_zero
    record("extreme_counts",
           trace.stabilized_low and trace.stabilized_high
           and c_lo == trace.target_low and c_hi == trace.target_high,
           f"count {c_lo} at y={trace.ys[0]:.4g} (target {trace.target_low}), "
           f"count {c_hi} at y={trace.ys[-1]:.4g} (target {trace.target_high})")

    d_low = sum(e.delta for e in events if e.y <= 0.0)
    d_high = sum(e.delta for e in events if e.y > 0.0)
    record("ledger_from_low",
           c0 == trace.target_low + d_low,
           f"count at 0 is {c0}; {trace.target_low} + {d_low} from below")
    record("ledger_from_high",
           trace.target_high == c0 + d_high,
           f"target {trace.target_high}; count at 0 {c0} + {d_high} from above")
    record("ledger_total",
           c_hi - c_lo == sum(e.delta for e in events),
           f"ends differ by {c_hi - c_lo}, event deltas sum to "
           f"{sum(e.delta for e in events)}")

    bad = [e for e in events if e.violation or e.kind in ("E1", "E2")]
    record("no_interior_birth", not bad,
           "; ".join(f"{e.kind} at {e.site_str()} y={e.y:.4g}" for e in bad)
           or "no interior appearance or split")

    rising = [e for e in events if e.delta > 0]
    ok = all(e.kind == "E6" and e.site[0] == "vertex"
             and e.delta <= graph.degree(e.site[1]) - 2 for e in rising)
    record("increase_only_at_vertices", ok,
           "; ".join(f"{e.kind} {e.site_str()} delta {e.delta:+d}" for e in rising)
           or "no increases")

    falling_bad = [e for e in events
                   if e.kind in ("E3", "E4", "E5") and e.delta >= 0]
    record("decrease_kinds", not falling_bad,
           "; ".join(f"{e.kind} delta {e.delta:+d}" for e in falling_bad)
           or "all collision/termination/boundary events decrease")

    m = fn.m
    budget_ok = True
    match_ok = True
    details = []
    span = (float(trace.ys[0]), float(trace.ys[-1]))
    for v in graph.inner_vertices:
        ev_v = [e for e in events if e.kind == "E6" and e.site == ("vertex", v)]
        bound = vertex_crossing_bound(fn, v, y_span=span, tol=tol)
        if len(ev_v) > m - 1 or len(ev_v) > bound.sign_changes:
            budget_ok = False
            details.append(f"vertex {v}: {len(ev_v)} crossings, "
                           f"budget min({m - 1}, C={bound.sign_changes})")
        if len(bound.zeros) > bound.sign_changes:
            budget_ok = False
            details.append(f"vertex {v}: {len(bound.zeros)} sum zeros exceed "
                           f"C={bound.sign_changes}")
        for e in ev_v:
            if "tangential" in e.note:
                continue
            near = min((abs(e.y - z) for z in bound.zeros), default=math.inf)
            if near > tol.e6_vertex_match * max(1.0, abs(e.y)):
                match_ok = False
                details.append(f"vertex {v}: event y={e.y:.9g} is "
                               f"{near:.3g} from the nearest sum zero")
    record("vertex_crossing_budget", budget_ok,
           "; ".join(details) or "per-vertex crossings within min(M-1, C)")
    record("vertex_crossing_times", match_ok,
           "; ".join(d for d in details if "sum zero" in d)
           or "every vertex event matches an exponential-sum zero")

    unknown = [e for e in events if e.kind == "unknown"]
    record("unattributed", not unknown,
           "; ".join(f"delta {e.delta:+d} at y={e.y:.4g}: {e.note}"
                     for e in unknown) or "every change attributed")

    passed = all(c["passed"] for c in checks.values())
    summary = {
        "count_low_end": c_lo, "count_high_end": c_hi, "count_at_zero": c0,
        "target_low": trace.target_low, "target_high": trace.target_high,
        "n_events": len(events),
        "events": [e.to_obj() for e in events],
    }
    return HeatFlowAudit(checks=checks, passed=passed, summary=summary)


# ── delimited output ────────────────────────────────────────────────────────

def trace_rows(trace: HeatFlowTrace):
    """Rows (y, edge_id, x_zero, curve_id) for the trace CSV."""
    rows = []
    for i, s in enumerate(trace.slices):
        cur = trace.curves[i] if trace.curves else {}
        for e in trace.fn.graph.edges:
            xs = s.zeros.get(e.id, ())
            ids = cur.get(e.id, [-1] * len(xs))
            for x, cid in zip(xs, ids):
                rows.append((s.y, e.id, float(x), cid))
        vcur = trace.vertex_curves[i] if trace.vertex_curves else {}
        for v in s.vertex_zeros:
            rows.append((s.y, f"vertex:{v}", 0.0, vcur.get(v, -1)))
    return rows


def event_rows(events):
    """Rows (y, kind, site, delta) for the event CSV."""
    return [(e.y, e.kind, e.site_str(), e.delta) for e in events]
