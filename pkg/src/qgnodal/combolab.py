"""Two-sided nodal bounds for eigenfunction combinations, and the extremal
constructions that meet them.

For ``F = sum_{i=1..M} a_i f_{k_i}`` with all ``a_i`` nonzero on a graph
whose computed spectral window is generic, the zero count ``N(F)`` obeys

    k_1 - 1 - (M - 1) X  <=  N(F)  <=  k_M - 1 + beta + (M - 1) X,

where ``beta`` is the first Betti number and ``X = n_boundary + 2 beta - 2``
equals the inner-degree excess ``sum_inner (deg - 2)``. At ``M = 1`` this
collapses to the classical ``k - 1 <= N(f_k) <= k - 1 + beta``.

The upper bound is met on thin stars: on a star with one unit edge and
``s`` short edges there are combinations of the first ``L`` eigenfunctions
with ``L - 1`` zeros on every short edge, giving ``(L - 1) s`` zeros. The
lower bound collapses low on thin two-ended ladders: the second and third
eigenfunctions there have ``m`` and ``2`` zeros, yet some combination of
the two has exactly one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import GenericityError, SearchError
from .graphs import (GraphTopology, MetricGraph, NEUMANN, build_ladder,
                     build_star, perturb_lengths, random_connected_graph,
                     topology)
from .nodal import FunctionOnGraph, NodalReport, count_zeros
from .spectral import GenericityReport, Spectrum, genericity_check, scan_spectrum
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "theorem_bounds", "BoundCertificate", "verify_bounds",
    "SaturationResult", "design_saturating_combo", "select_eps",
    "FindBResult", "find_b", "GenericEnsemble", "generic_perturbed_star",
    "generic_perturbed_ladder", "random_combo_trial", "run_bound_trials",
]


def theorem_bounds(topo: GraphTopology, k1: int, kM: int, M: int):
    """Two-sided bounds ``(lower, upper)`` on the zero count (see module
    docstring); ``lower`` may be negative, meaning vacuous."""
    if M < 1 or k1 < 1 or kM < k1:
        raise ValueError(f"need 1 <= k1 <= kM and M >= 1, got {k1}, {kM}, {M}")
    spread = (M - 1) * topo.degree_sum_excess
    return k1 - 1 - spread, kM - 1 + topo.beta + spread


@dataclass(frozen=True)
class BoundCertificate:
    """Outcome of checking one combination against the two-sided bounds.

    ``scope`` is ``proven`` on generic Dirichlet-boundary graphs,
    ``informational`` when a Neumann condition is present, and
    ``inapplicable`` when the computed window failed the genericity check
    (then ``passed`` is None rather than False).
    """

    indices: tuple
    coefficients: tuple
    k1: int
    kM: int
    m_terms: int
    beta: int
    n_boundary: int
    degree_sum_excess: int
    lower: int
    upper: int
    measured: int
    scope: str
    passed: Optional[bool]
    generic: bool
    tangential_present: bool
    vertex_zero_present: bool
    approximate: bool

    def to_obj(self) -> dict:
        return {
            "indices": list(self.indices),
            "coefficients": list(self.coefficients),
            "k1": self.k1,
            "kM": self.kM,
            "m_terms": self.m_terms,
            "beta": self.beta,
            "n_boundary": self.n_boundary,
            "degree_sum_excess": self.degree_sum_excess,
            "lower": self.lower,
            "upper": self.upper,
            "measured": self.measured,
            "scope": self.scope,
            "passed": self.passed,
            "generic": self.generic,
            "tangential_present": self.tangential_present,
            "vertex_zero_present": self.vertex_zero_present,
            "approximate": self.approximate,
        }


def verify_bounds(graph: MetricGraph, indices: Sequence[int],
                  coeffs: Sequence[float], *,
                  spectrum: Spectrum = None,
                  tol: Tolerances = DEFAULT) -> BoundCertificate:
    """Count the zeros of the combination and compare with the bounds."""
    indices = tuple(int(k) for k in indices)
    kM = max(indices)
    if spectrum is None or len(spectrum) < kM:
        spectrum = scan_spectrum(graph, kM, tol=tol)
    topo = topology(graph)
    gen = genericity_check(graph, kM, spectrum=spectrum, tol=tol)
    fn = FunctionOnGraph(spectrum, indices, coeffs)
    report = count_zeros(fn, tol)
    lower, upper = theorem_bounds(topo, min(indices), kM, len(indices))
    if not gen.generic:
        scope, passed = "inapplicable", None
    elif any(cond == NEUMANN for _, cond in graph.boundary):
        scope = "informational"
        passed = lower <= report.total <= upper
    else:
        scope = "proven"
        passed = lower <= report.total <= upper
    return BoundCertificate(
        indices=indices,
        coefficients=tuple(float(a) for a in coeffs),
        k1=min(indices), kM=kM, m_terms=len(indices),
        beta=topo.beta, n_boundary=topo.n_boundary,
        degree_sum_excess=topo.degree_sum_excess,
        lower=lower, upper=upper,
        measured=report.total,
        scope=scope, passed=passed, generic=gen.generic,
        tangential_present=report.tangential_present,
        vertex_zero_present=report.vertex_zero_present,
        approximate=report.approximate,
    )


# ── generic perturbed model graphs ──────────────────────────────────────────

@dataclass
class GenericEnsemble:
    """A perturbed model graph together with its computed generic window."""

    graph: MetricGraph
    spectrum: Spectrum
    genericity: GenericityReport
    seed: int
    delta: float


def _delta_schedule(delta: float, max_tries: int) -> list:
    # Unperturbed first, then jitters growing toward the cap.  Counting
    # results designed on the symmetric model survive only tiny length
    # changes, so full-size jitters are a last resort for stubborn windows.
    out = [0.0]
    scale = 1e-6
    while len(out) < max_tries:
        out.append(delta * min(1.0, scale))
        scale *= 100.0
    return out


def _retry_generic(build, count, seed, deltas, tol, what):
    failures = []
    for t, delta in enumerate(deltas):
        graph = build(seed + t, delta)
        spectrum = scan_spectrum(graph, count, tol=tol)
        gen = genericity_check(graph, count, spectrum=spectrum, tol=tol)
        if gen.generic:
            return GenericEnsemble(graph=graph, spectrum=spectrum,
                                   genericity=gen, seed=seed + t, delta=delta)
        failures.append(f"seed {seed + t}, delta {delta:.3g}: "
                        f"{'; '.join(gen.failures)}")
    raise GenericityError(
        f"no generic {what} found in {len(deltas)} tries: " + " | ".join(failures))


def generic_perturbed_star(s: int, eps: float, count: int, *,
                           delta: float = None, seed: int = 0,
                           max_tries: int = 16,
                           tol: Tolerances = DEFAULT) -> GenericEnsemble:
    """Star whose short lengths are jittered until the window is generic.

    The unperturbed graph is tried first; ``delta`` caps the jitter used
    when it fails.
    """
    if delta is None:
        delta = eps / 8.0

    def build(sd, d):
        return perturb_lengths(build_star(s, eps), d, sd)

    return _retry_generic(build, count, seed, _delta_schedule(delta, max_tries),
                          tol, f"star(s={s})")


def generic_perturbed_ladder(m: int, eps: float = 1.0 / 32.0, count: int = 3, *,
                             delta: float = None, seed: int = 0,
                             max_tries: int = 16,
                             tol: Tolerances = DEFAULT) -> GenericEnsemble:
    """Ladder whose rung lengths are jittered until the window is generic.

    The unperturbed graph is tried first; ``delta`` caps the jitter used
    when it fails.
    """
    if delta is None:
        delta = eps / 8.0

    def build(sd, d):
        return perturb_lengths(build_ladder(m, eps), d, sd)

    return _retry_generic(build, count, seed, _delta_schedule(delta, max_tries),
                          tol, f"ladder(m={m})")


# ── epsilon selection ───────────────────────────────────────────────────────

@dataclass(frozen=True)
class SelectEpsResult:
    eps: float
    j: int
    lam_max: float
    trials: tuple  # (j, eps, lam_max, short_wave_ok, simple_ok)

    def to_obj(self) -> dict:
        return {
            "eps": self.eps,
            "j": self.j,
            "lam_max": self.lam_max,
            "trials": [{"j": j, "eps": e, "lam_max": lm,
                        "short_wave_ok": sw, "simple_ok": si}
                       for (j, e, lm, sw, si) in self.trials],
        }


def select_eps(s: int, count: int, *, j_max: int = 20,
               tol: Tolerances = DEFAULT) -> SelectEpsResult:
    """Largest dyadic ``eps = 2^-j`` whose star keeps the first ``count``
    eigenvalues simple and below the short-edge resonance.

    The acceptance test is ``eps * sqrt(lam_count) < pi/2`` (no short edge
    supports a half-wave yet) plus open gaps in the computed window.
    """
    trials = []
    for j in range(1, j_max + 1):
        eps = 2.0 ** (-j)
        graph = build_star(s, eps)
        spectrum = scan_spectrum(graph, count, tol=tol)
        lam_max = spectrum.lam(count)
        short_wave_ok = eps * math.sqrt(max(lam_max, 0.0)) < math.pi / 2.0
        gen = genericity_check(graph, count, spectrum=spectrum, tol=tol)
        simple_ok = all(p.multiplicity == 1 for p in spectrum.pairs[:count]) \
            and all(g > gen.tol_gap_abs for g in gen.gaps)
        trials.append((j, eps, lam_max, short_wave_ok, simple_ok))
        if short_wave_ok and simple_ok:
            return SelectEpsResult(eps=eps, j=j, lam_max=lam_max,
                                   trials=tuple(trials))
    raise SearchError(
        f"no dyadic eps up to 2^-{j_max} gives {count} simple eigenvalues "
        f"below the short-edge resonance for s={s}")


# ── saturating combinations on stars ────────────────────────────────────────

@dataclass(frozen=True)
class SaturationResult:
    s: int
    L: int
    coefficients: tuple
    indices: tuple
    target: int                # (L - 1) * s
    measured: int
    achieved: bool
    designated_edge: object
    designated_count: int      # zeros on the designated short edge
    attempts_used: int
    flags: dict

    def to_obj(self) -> dict:
        return {
            "s": self.s,
            "L": self.L,
            "indices": list(self.indices),
            "coefficients": list(self.coefficients),
            "target": self.target,
            "measured": self.measured,
            "achieved": self.achieved,
            "designated_edge": self.designated_edge,
            "designated_count": self.designated_count,
            "attempts_used": self.attempts_used,
            "flags": dict(self.flags),
        }


def design_saturating_combo(graph: MetricGraph, L: int, *,
                            spectrum: Spectrum = None,
                            edge_id=None, seed: int = 0, attempts: int = 8,
                            tol: Tolerances = DEFAULT) -> SaturationResult:
    """Combination of the first ``L`` eigenfunctions with ``L - 1`` zeros
    prescribed on one designated short edge of a star.

    The coefficient vector is the nullspace of the ``(L-1) x L`` matrix of
    eigenfunction values at jittered interior points of the designated edge.
    On a thin star every short edge then carries ``L - 1`` zeros, so the
    total is ``(L - 1) s``: the upper bound for ``beta = 0``, ``k_i = i``.
    Jitter is retried when the resulting combination has a degenerate
    coefficient or an ambiguous zero pattern.
    """
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    topo = topology(graph)
    s = topo.n_boundary - 1
    if s < 1:
        raise ValueError("graph is not a star with short edges")
    if spectrum is None or len(spectrum) < L:
        spectrum = scan_spectrum(graph, L, tol=tol)
    if edge_id is None:
        shorts = [e.id for e in graph.edges
                  if isinstance(e.id, str) and e.id.startswith("small")]
        edge_id = shorts[0] if shorts else min(graph.edges, key=lambda e: e.length).id
    edge = graph.edge(edge_id)
    target = (L - 1) * s
    rng = np.random.default_rng(seed)

    last_flags: dict = {}
    measured = -1
    designated = -1
    coeffs = tuple()
    for attempt in range(1, attempts + 1):
        if L == 1:
            vec = np.array([1.0])
        else:
            jitter = rng.uniform(-0.3, 0.3, size=L - 1)
            points = edge.length * (np.arange(1, L) + jitter) / L
            A = np.empty((L - 1, L))
            for col in range(L):
                A[:, col] = spectrum.pair(col + 1).value(edge_id, points)
            _, _, vh = np.linalg.svd(A)
            vec = vh[-1]
        if np.min(np.abs(vec)) <= 1e-12 * np.max(np.abs(vec)):
            last_flags = {"degenerate_coefficient": True}
            continue
        fn = FunctionOnGraph(spectrum, tuple(range(1, L + 1)), tuple(vec))
        report = count_zeros(fn, tol)
        designated = report.per_edge.get(edge_id, 0)
        flags = {
            "tangential_present": report.tangential_present,
            "vertex_zero_present": report.vertex_zero_present,
            "approximate": report.approximate,
        }
        clean = not any(flags.values())
        measured = report.total
        coeffs = tuple(float(c) for c in vec)
        last_flags = flags
        if clean and designated == L - 1:
            return SaturationResult(
                s=s, L=L, coefficients=coeffs,
                indices=tuple(range(1, L + 1)), target=target,
                measured=measured, achieved=(measured == target),
                designated_edge=edge_id, designated_count=designated,
                attempts_used=attempt, flags=flags)
    return SaturationResult(
        s=s, L=L, coefficients=coeffs, indices=tuple(range(1, L + 1)),
        target=target, measured=measured, achieved=False,
        designated_edge=edge_id, designated_count=designated,
        attempts_used=attempts, flags=last_flags)


# ── the low-count combination on ladders ────────────────────────────────────

@dataclass(frozen=True)
class FindBResult:
    b: float                   # N(f2 + b f3) == 1 for the computed pairs
    c_normalized: float        # same combination as fhat2 - c fhat3 with unit
    #                            entering derivatives at the probe vertex
    n_f2: int
    n_f3: int
    derivative_f2: float
    derivative_f3: float
    verified: int
    table: tuple               # (c, count) over the search grid

    def to_obj(self) -> dict:
        return {
            "b": self.b,
            "c_normalized": self.c_normalized,
            "n_f2": self.n_f2,
            "n_f3": self.n_f3,
            "derivative_f2": self.derivative_f2,
            "derivative_f3": self.derivative_f3,
            "verified": self.verified,
            "table": [[c, n] for (c, n) in self.table],
        }


def find_b(graph: MetricGraph, *, spectrum: Spectrum = None,
           edge_id="e1", vertex="v1",
           tol: Tolerances = DEFAULT) -> FindBResult:
    """Coefficient ``b`` with ``N(f_2 + b f_3) = 1`` on a thin ladder.

    Both eigenfunctions are rescaled so their derivative into the graph at
    the boundary vertex ``v1`` (along ``edge_id``) is 1; in that gauge the
    working combination is ``fhat2 - c fhat3`` with ``c > 0``. The search
    walks a geometric grid of ``c``, brackets the plateau where the count is
    one, bisects both plateau edges and returns the midpoint, translated
    back to the computed pairs' normalization and re-verified.
    """
    if spectrum is None or len(spectrum) < 3:
        spectrum = scan_spectrum(graph, 3, tol=tol)
    gen = genericity_check(graph, 3, spectrum=spectrum, tol=tol)
    if not gen.generic:
        raise GenericityError(
            "spectral window is not generic: " + "; ".join(gen.failures))
    edge = graph.edge(edge_id)
    if edge.src != vertex and edge.dst != vertex:
        raise ValueError(f"vertex {vertex!r} is not an endpoint of edge {edge_id!r}")
    at = 0.0 if edge.src == vertex else edge.length
    sgn = 1.0 if edge.src == vertex else -1.0  # derivative into the edge

    p2, p3 = spectrum.pair(2), spectrum.pair(3)
    d2 = sgn * float(p2.derivative(edge_id, at))
    d3 = sgn * float(p3.derivative(edge_id, at))
    if abs(d2) <= 1e-12 * p2.sup_norm or abs(d3) <= 1e-12 * p3.sup_norm:
        raise SearchError(
            "an eigenfunction has zero entering derivative at the Dirichlet "
            "vertex, contradicting simplicity of the window")

    n_f2 = count_zeros(FunctionOnGraph(spectrum, (2,), (1.0,)), tol).total
    n_f3 = count_zeros(FunctionOnGraph(spectrum, (3,), (1.0,)), tol).total

    def count_at(c: float) -> int:
        fn = FunctionOnGraph(spectrum, (2, 3), (1.0 / d2, -c / d3))
        return count_zeros(fn, tol).total

    table = []

    def search(grid) -> Optional[float]:
        counts = []
        for c in grid:
            n = count_at(c)
            counts.append(n)
            table.append((float(c), n))
        for i, n in enumerate(counts):
            if n != 1:
                continue
            c_hit = grid[i]
            lo = grid[i - 1] if i > 0 and counts[i - 1] != 1 else None
            hi = grid[i + 1] if i + 1 < len(grid) and counts[i + 1] != 1 else None
            left = _edge_bisect(count_at, lo, c_hit) if lo is not None else c_hit
            right = _edge_bisect(count_at, hi, c_hit) if hi is not None else c_hit
            return 0.5 * (left + right)
        return None

    grid = [2.0 ** j for j in range(-8, 9)]
    c_mid = search(grid)
    if c_mid is None:
        dense = list(np.geomspace(1e-4, 1e3, 160))
        c_mid = search(dense)
    if c_mid is None:
        raise SearchError(
            "no coefficient with a single zero found; counts seen: "
            + ", ".join(f"{c:.3g}:{n}" for c, n in table))

    b = -c_mid * d2 / d3
    verified = count_zeros(FunctionOnGraph(spectrum, (2, 3), (1.0, b)), tol).total
    if verified != 1:
        raise SearchError(
            f"plateau midpoint c={c_mid:.6g} re-verified to {verified} zeros")
    return FindBResult(b=float(b), c_normalized=float(c_mid),
                       n_f2=n_f2, n_f3=n_f3,
                       derivative_f2=d2, derivative_f3=d3,
                       verified=verified, table=tuple(table))


def _edge_bisect(count_at, c_out: float, c_in: float, iters: int = 40) -> float:
    """Bisect between a coefficient outside the count==1 plateau and one
    inside it; returns the inner-side estimate of the plateau edge."""
    for _ in range(iters):
        mid = 0.5 * (c_out + c_in)
        if count_at(mid) == 1:
            c_in = mid
        else:
            c_out = mid
        if abs(c_in - c_out) <= 1e-3 * abs(c_in):
            break
    return c_in


# ── randomized certification trials ─────────────────────────────────────────

def random_generic_graph(seed: int, count: int, *, max_extra: int = 3,
                         tol: Tolerances = DEFAULT):
    """Random connected graph with a generic computed window (retries until
    genericity holds; loop edges are excluded because a loop eigenfunction
    can legitimately vanish at its base vertex)."""
    rng = np.random.default_rng(seed)
    for _ in range(24):
        n_edges = int(rng.integers(2, 8))
        extra = int(rng.integers(0, min(max_extra, n_edges - 1) + 1))
        graph = random_connected_graph(n_edges, extra, rng, allow_loops=False)
        try:
            spectrum = scan_spectrum(graph, count, tol=tol)
        except Exception:
            continue
        gen = genericity_check(graph, count, spectrum=spectrum, tol=tol)
        if gen.generic:
            return graph, spectrum
    raise GenericityError(f"no generic random graph found from seed {seed}")


def random_combo_trial(spectrum: Spectrum, rng, *, max_m: int = 4,
                       max_index: int = 8,
                       tol: Tolerances = DEFAULT) -> BoundCertificate:
    """One random combination on an already-certified random graph."""
    m = int(rng.integers(1, max_m + 1))
    indices = np.sort(rng.choice(np.arange(1, max_index + 1), size=m,
                                 replace=False))
    coeffs = []
    for _ in range(m):
        a = 0.0
        while abs(a) < 0.1:
            a = float(rng.uniform(-2.0, 2.0))
        coeffs.append(a)
    return verify_bounds(spectrum.graph, tuple(int(k) for k in indices),
                         tuple(coeffs), spectrum=spectrum, tol=tol)


def run_bound_trials(n_trials: int, seed: int = 0, *,
                     combos_per_graph: int = 5, max_m: int = 4,
                     max_index: int = 8, threads: int = 1,
                     tol: Tolerances = DEFAULT) -> list:
    """Randomized certification campaign: random generic graphs, several
    random combinations each; returns every certificate."""
    n_graphs = (n_trials + combos_per_graph - 1) // combos_per_graph

    def one_graph(g: int) -> list:
        graph_seed = seed + 1000 * g
        _, spectrum = random_generic_graph(graph_seed, max_index, tol=tol)
        rng = np.random.default_rng(graph_seed + 1)
        want = min(combos_per_graph, n_trials - g * combos_per_graph)
        return [random_combo_trial(spectrum, rng, max_m=max_m,
                                   max_index=max_index, tol=tol)
                for _ in range(want)]

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as ex:
            groups = list(ex.map(one_graph, range(n_graphs)))
    else:
        groups = [one_graph(g) for g in range(n_graphs)]
    return [cert for group in groups for cert in group]
