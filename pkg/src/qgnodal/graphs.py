"""Metric graphs: combinatorics, edge lengths, potentials, vertex conditions.

A metric graph here is a finite connected multigraph whose edges carry
positive lengths; each edge is identified with ``[0, length]`` oriented from
its ``src`` vertex. Degree-1 vertices form the boundary and carry a
Dirichlet (default) or Neumann condition; every other vertex is inner and
carries the standard matching conditions (continuity plus vanishing sum of
outgoing derivatives). Loops are stored once but contribute both of their
attachment points, so they count twice in their vertex's incident multiset.

The JSON interchange format is::

    {"vertices": [{"id": ...}, ...],
     "edges": [{"id": ..., "from": ..., "to": ..., "length": ...,
                "potential": 0.0 | {"samples": [[x, w], ...]}}, ...],
     "boundary": {"<vertex id>": "dirichlet" | "neumann"}}

Boundary entries omitted on input default to Dirichlet; serialization always
writes the condition of every degree-1 vertex explicitly.
"""
from __future__ import annotations

import json as _json
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import InvalidGraphError
from . import reports

VertexId = Union[str, int]
EdgeId = Union[str, int]

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


# ── potentials ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Constant:
    """Constant potential on an edge."""

    value: float = 0.0


@dataclass(frozen=True)
class Sampled:
    """Potential given by samples ``(x, w)`` on a strictly increasing grid
    spanning ``[0, length]``; evaluated in between by a C1 spline."""

    xs: tuple
    ws: tuple

    def __post_init__(self):
        object.__setattr__(self, "xs", tuple(float(x) for x in self.xs))
        object.__setattr__(self, "ws", tuple(float(w) for w in self.ws))


Potential = Union[Constant, Sampled]


def potential_max_abs(pot: Potential) -> float:
    if isinstance(pot, Constant):
        return abs(pot.value)
    return max((abs(w) for w in pot.ws), default=0.0)


def potential_min(pot: Potential) -> float:
    if isinstance(pot, Constant):
        return pot.value
    return min(pot.ws, default=0.0)


# ── graph structure ─────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Edge:
    id: EdgeId
    src: VertexId
    dst: VertexId
    length: float
    potential: Potential = Constant(0.0)


@dataclass(frozen=True)
class MetricGraph:
    """Immutable metric graph. Build through :func:`make_graph`, which
    normalizes the boundary map; mutate via ``dataclasses.replace`` on copies.
    """

    vertices: tuple
    edges: tuple
    boundary: tuple  # ((vertex id, condition), ...) for every degree-1 vertex

    @cached_property
    def degrees(self) -> dict:
        deg = {v: 0 for v in self.vertices}
        for e in self.edges:
            deg[e.src] = deg.get(e.src, 0) + 1
            deg[e.dst] = deg.get(e.dst, 0) + 1
        return deg

    @cached_property
    def vertex_ends(self) -> dict:
        """vertex id -> tuple of (edge index, end) with end 0 at src, 1 at dst."""
        ends = {v: [] for v in self.vertices}
        for i, e in enumerate(self.edges):
            ends.setdefault(e.src, []).append((i, 0))
            ends.setdefault(e.dst, []).append((i, 1))
        return {v: tuple(lst) for v, lst in ends.items()}

    @cached_property
    def _boundary_map(self) -> dict:
        return dict(self.boundary)

    @cached_property
    def _edge_index(self) -> dict:
        return {e.id: i for i, e in enumerate(self.edges)}

    def edge(self, edge_id: EdgeId) -> Edge:
        return self.edges[self._edge_index[edge_id]]

    def degree(self, v: VertexId) -> int:
        return self.degrees[v]

    def boundary_condition(self, v: VertexId):
        """Condition string for a boundary vertex, None for inner vertices."""
        return self._boundary_map.get(v)

    @property
    def boundary_vertices(self) -> tuple:
        return tuple(v for v, _ in self.boundary)

    @cached_property
    def inner_vertices(self) -> tuple:
        return tuple(v for v in self.vertices if self.degrees[v] >= 2)

    @property
    def total_length(self) -> float:
        return sum(e.length for e in self.edges)


def make_graph(edges: Iterable, vertices: Sequence = None,
               boundary: Mapping = None) -> MetricGraph:
    """Assemble a MetricGraph from edge descriptions.

    ``edges`` may hold :class:`Edge` objects or ``(id, src, dst, length)`` /
    ``(id, src, dst, length, potential)`` tuples; a bare float potential is
    wrapped in :class:`Constant`. Vertices are inferred from edge endpoints
    in order of first appearance unless given explicitly. Every degree-1
    vertex missing from ``boundary`` gets a Dirichlet condition.
    """
    edge_objs = []
    for spec in edges:
        if isinstance(spec, Edge):
            e = spec
        else:
            eid, src, dst, length = spec[:4]
            pot = spec[4] if len(spec) > 4 else Constant(0.0)
            if isinstance(pot, (int, float)):
                pot = Constant(float(pot))
            e = Edge(eid, src, dst, float(length), pot)
        if isinstance(e.potential, (int, float)):
            e = replace(e, potential=Constant(float(e.potential)))
        edge_objs.append(e)

    if vertices is None:
        seen, vlist = set(), []
        for e in edge_objs:
            for v in (e.src, e.dst):
                if v not in seen:
                    seen.add(v)
                    vlist.append(v)
        vertices = vlist
    vertices = tuple(vertices)

    deg = {v: 0 for v in vertices}
    for e in edge_objs:
        for v in (e.src, e.dst):
            if v in deg:
                deg[v] += 1
    boundary = dict(boundary or {})
    for v in vertices:
        if deg.get(v, 0) == 1 and v not in boundary:
            boundary[v] = DIRICHLET
    bnd = tuple((v, boundary[v]) for v in vertices if v in boundary)
    return MetricGraph(vertices=vertices, edges=tuple(edge_objs), boundary=bnd)


# ── validation and topology ─────────────────────────────────────────────────

@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    connected: bool
    issues: tuple
    n_vertices: int
    n_edges: int
    n_boundary: int
    n_inner: int

    def to_obj(self) -> dict:
        return {
            "valid": self.valid,
            "connected": self.connected,
            "issues": list(self.issues),
            "n_vertices": self.n_vertices,
            "n_edges": self.n_edges,
            "n_boundary": self.n_boundary,
            "n_inner": self.n_inner,
        }


@dataclass(frozen=True)
class GraphTopology:
    beta: int
    n_boundary: int
    n_inner: int
    degree_sum_excess: int  # sum over inner vertices of (deg - 2)

    def to_obj(self) -> dict:
        return {
            "beta": self.beta,
            "n_boundary": self.n_boundary,
            "n_inner": self.n_inner,
            "degree_sum_excess": self.degree_sum_excess,
        }


def validate(graph: MetricGraph) -> ValidationReport:
    """Structural validation; never raises on a bad graph, reports instead."""
    issues = []
    vset = set()
    for v in graph.vertices:
        if v in vset:
            issues.append(f"duplicate vertex id {v!r}")
        vset.add(v)
    eids = set()
    for e in graph.edges:
        if e.id in eids:
            issues.append(f"duplicate edge id {e.id!r}")
        eids.add(e.id)
        for v in (e.src, e.dst):
            if v not in vset:
                issues.append(f"edge {e.id!r} references unknown vertex {v!r}")
        if not (math.isfinite(e.length) and e.length > 0.0):
            issues.append(f"edge {e.id!r} has non-positive length {e.length!r}")
        if isinstance(e.potential, Sampled):
            xs = e.potential.xs
            if len(xs) < 2 or len(xs) != len(e.potential.ws):
                issues.append(f"edge {e.id!r} potential needs matching sample arrays")
            elif any(b <= a for a, b in zip(xs, xs[1:])):
                issues.append(f"edge {e.id!r} potential grid not strictly increasing")
            elif abs(xs[0]) > 1e-9 * e.length or abs(xs[-1] - e.length) > 1e-9 * e.length:
                issues.append(f"edge {e.id!r} potential grid must span [0, length]")
    if not graph.edges:
        issues.append("graph has no edges")
    if not graph.vertices:
        issues.append("graph has no vertices")

    endpoints_known = not any("unknown vertex" in i for i in issues)
    connected = _connected(graph) if endpoints_known and graph.vertices else False
    if endpoints_known and graph.edges and not connected:
        issues.append("graph is not connected")

    deg = graph.degrees
    n_bnd = sum(1 for v in vset if deg.get(v, 0) == 1)
    n_inner = sum(1 for v in vset if deg.get(v, 0) >= 2)
    bmap = dict(graph.boundary)
    for v, cond in bmap.items():
        if v not in vset:
            issues.append(f"boundary condition on unknown vertex {v!r}")
        elif deg.get(v, 0) != 1:
            issues.append(f"boundary condition on non-boundary vertex {v!r} (degree {deg.get(v, 0)})")
        if cond not in (DIRICHLET, NEUMANN):
            issues.append(f"unknown boundary condition {cond!r} on vertex {v!r}")

    return ValidationReport(
        valid=not issues,
        connected=connected,
        issues=tuple(issues),
        n_vertices=len(graph.vertices),
        n_edges=len(graph.edges),
        n_boundary=n_bnd,
        n_inner=n_inner,
    )


def _connected(graph: MetricGraph) -> bool:
    if not graph.vertices:
        return False
    parent = {v: v for v in graph.vertices}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for e in graph.edges:
        if e.src in parent and e.dst in parent:
            ra, rb = find(e.src), find(e.dst)
            if ra != rb:
                parent[ra] = rb
    roots = {find(v) for v in graph.vertices}
    return len(roots) == 1


def topology(graph: MetricGraph) -> GraphTopology:
    """First Betti number and boundary/inner vertex counts.

    For a connected graph ``beta = |E| - |V| + 1`` and the inner-degree
    excess satisfies ``sum_inner (deg - 2) = n_boundary + 2 beta - 2``; the
    identity is asserted as an internal consistency check.
    """
    rep = validate(graph)
    if not rep.valid:
        raise InvalidGraphError(rep.issues)
    beta = len(graph.edges) - len(graph.vertices) + 1
    excess = sum(d - 2 for d in graph.degrees.values() if d >= 2)
    assert excess == rep.n_boundary + 2 * beta - 2, "degree-sum identity violated"
    return GraphTopology(
        beta=beta,
        n_boundary=rep.n_boundary,
        n_inner=rep.n_inner,
        degree_sum_excess=excess,
    )


# ── builders ────────────────────────────────────────────────────────────────

def build_interval(length: float = 1.0) -> MetricGraph:
    """Single edge with two Dirichlet endpoints."""
    if not (length > 0.0):
        raise ValueError(f"length must be positive, got {length}")
    return make_graph([("e1", "a", "b", length)])

def build_star(s: int, eps: float) -> MetricGraph:
    """Star with one edge of length 1 and ``s`` edges of length ``eps``,
    all free ends Dirichlet. The common vertex has degree ``s + 1``."""
    if s < 1:
        raise ValueError(f"star needs at least one short edge, got s={s}")
    if not (eps > 0.0):
        raise ValueError(f"eps must be positive, got {eps}")
    edges = [("long", "o", "c", 1.0)]
    edges += [(f"small{i}", "c", f"t{i}", float(eps)) for i in range(1, s + 1)]
    return make_graph(edges)

def build_ladder(m: int, eps: float) -> MetricGraph:
    """Two pendant edges of length 1/2 joined by ``m`` parallel edges of
    length ``eps``: v1 -e1- v2 = (m rungs) = v3 -e2- v4, Dirichlet at v1, v4."""
    if m < 2:
        raise ValueError(f"ladder needs at least two parallel edges, got m={m}")
    if not (eps > 0.0):
        raise ValueError(f"eps must be positive, got {eps}")
    edges = [("e1", "v1", "v2", 0.5)]
    edges += [(f"rung{i}", "v2", "v3", float(eps)) for i in range(1, m + 1)]
    edges += [("e2", "v3", "v4", 0.5)]
    return make_graph(edges)


def default_perturbation_targets(graph: MetricGraph) -> tuple:
    """Edges whose lengths a perturbation should jitter.

    Star and ladder builders name their short edges ``small*`` / ``rung*``;
    by convention only those move while the unit and half-unit edges stay
    fixed. Graphs without such names have every edge perturbed.
    """
    short = tuple(e.id for e in graph.edges
                  if isinstance(e.id, str) and (e.id.startswith("small") or e.id.startswith("rung")))
    return short if short else tuple(e.id for e in graph.edges)


def perturb_lengths(graph: MetricGraph, delta: float, seed: int,
                    edge_ids: Sequence = None) -> MetricGraph:
    """Replace each targeted length ``l`` by a draw from ``(l, l + delta)``.

    Draws are taken in edge-storage order from a PCG64 generator seeded with
    ``seed``, so the result is reproducible. ``delta = 0`` returns the graph
    unchanged.
    """
    if delta < 0.0:
        raise ValueError(f"delta must be non-negative, got {delta}")
    if delta == 0.0:
        return graph
    targets = set(default_perturbation_targets(graph) if edge_ids is None else edge_ids)
    rng = np.random.default_rng(seed)
    new_edges = []
    for e in graph.edges:
        if e.id in targets:
            new_edges.append(replace(e, length=e.length + delta * float(rng.uniform())))
        else:
            new_edges.append(e)
    return MetricGraph(vertices=graph.vertices, edges=tuple(new_edges), boundary=graph.boundary)


# ── serialization ───────────────────────────────────────────────────────────

def graph_to_obj(graph: MetricGraph) -> dict:
    edges = []
    for e in graph.edges:
        if isinstance(e.potential, Constant):
            pot = e.potential.value
        else:
            pot = {"samples": [[x, w] for x, w in zip(e.potential.xs, e.potential.ws)]}
        edges.append({"id": e.id, "from": e.src, "to": e.dst,
                      "length": e.length, "potential": pot})
    return {
        "vertices": [{"id": v} for v in graph.vertices],
        "edges": edges,
        "boundary": {str(v): cond for v, cond in graph.boundary},
    }


def to_json(graph: MetricGraph) -> str:
    return reports.dumps_json(graph_to_obj(graph))


def graph_from_obj(obj: Mapping) -> MetricGraph:
    try:
        vertices = [v["id"] for v in obj["vertices"]]
        raw_edges = obj["edges"]
    except (KeyError, TypeError) as exc:
        raise InvalidGraphError([f"malformed graph object: {exc}"]) from exc
    vset = set(vertices)
    edges = []
    for rec in raw_edges:
        try:
            pot = rec.get("potential", 0.0)
            if isinstance(pot, Mapping):
                samples = pot["samples"]
                xs = tuple(float(p[0]) for p in samples)
                ws = tuple(float(p[1]) for p in samples)
                potential: Potential = Sampled(xs, ws)
            else:
                potential = Constant(float(pot))
            edges.append(Edge(rec["id"], rec["from"], rec["to"],
                              float(rec["length"]), potential))
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise InvalidGraphError([f"malformed edge record {rec!r}: {exc}"]) from exc
    boundary = {}
    for key, cond in dict(obj.get("boundary", {})).items():
        # JSON object keys are strings; map back onto the declared vertex ids
        vid = key
        if key not in vset:
            for v in vertices:
                if str(v) == key:
                    vid = v
                    break
        boundary[vid] = cond
    return make_graph(edges, vertices=vertices, boundary=boundary)


def from_json(text: str) -> MetricGraph:
    try:
        obj = _json.loads(text)
    except _json.JSONDecodeError as exc:
        raise InvalidGraphError([f"not valid JSON: {exc}"]) from exc
    return graph_from_obj(obj)


def save_graph(path: str, graph: MetricGraph) -> str:
    return reports.write_text(path, to_json(graph))


def load_graph(path: str) -> MetricGraph:
    with open(path) as fh:
        return from_json(fh.read())


# ── random graphs ───────────────────────────────────────────────────────────

def random_tree(n_edges: int, seed, length_range=(0.5, 1.5)) -> MetricGraph:
    """Random tree grown by uniform attachment, with uniform random lengths."""
    if n_edges < 1:
        raise ValueError("a tree needs at least one edge")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    lo, hi = length_range
    edges = []
    for i in range(n_edges):
        attach = 0 if i == 0 else int(rng.integers(0, i + 1))
        edges.append((f"g{i}", f"v{attach}", f"v{i + 1}",
                      float(rng.uniform(lo, hi))))
    return make_graph(edges)


def random_connected_graph(n_edges: int, extra_cycles: int, seed,
                           allow_loops: bool = False,
                           length_range=(0.5, 1.5)) -> MetricGraph:
    """Random connected multigraph: a tree plus ``extra_cycles`` extra edges,
    so the first Betti number is exactly ``extra_cycles``."""
    if extra_cycles < 0 or n_edges < 1 + extra_cycles:
        raise ValueError(f"need n_edges > extra_cycles >= 0, got {n_edges}, {extra_cycles}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    lo, hi = length_range
    n_tree = n_edges - extra_cycles
    edges = []
    for i in range(n_tree):
        attach = 0 if i == 0 else int(rng.integers(0, i + 1))
        edges.append((f"g{i}", f"v{attach}", f"v{i + 1}", float(rng.uniform(lo, hi))))
    n_vert = n_tree + 1
    for j in range(extra_cycles):
        a = int(rng.integers(0, n_vert))
        if allow_loops and rng.uniform() < 0.25:
            b = a
        else:
            b = int(rng.integers(0, n_vert))
            if not allow_loops:
                while b == a:
                    b = int(rng.integers(0, n_vert))
        edges.append((f"g{n_tree + j}", f"v{a}", f"v{b}", float(rng.uniform(lo, hi))))
    return make_graph(edges)
