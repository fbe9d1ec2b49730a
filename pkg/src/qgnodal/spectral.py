"""Spectral solver for ``-d²/dx² + W`` on metric graphs.

The solver works edgewise in the fundamental-solution basis: on each edge
the two solutions of ``-psi'' + W psi = lam psi`` with

    u(0) = 1, u'(0) = 0        and        v(0) = 0, v'(0) = 1

span the solution space, so a candidate eigenfunction is a coefficient pair
per edge and the vertex conditions become a square real linear system of
size ``2 |E|``. Its determinant (the secular function) vanishes exactly at
eigenvalues. For constant potential ``q`` the pair is

    u = C(mu, x),  v = S(mu, x),   mu = lam - q,

with ``C = cos(sqrt(mu) x)`` and ``S = sin(sqrt(mu) x)/sqrt(mu)`` continued
through ``mu <= 0`` by their entire power series (cosh/sinh branch), so every
matrix entry is smooth in ``lam`` and sign-based root bracketing is safe
across ``mu = 0``. Sampled potentials are integrated by a fourth-order
Runge-Kutta sweep and evaluated in between by cubic Hermite interpolation.

Rows of the secular matrix are rescaled to unit max-norm, which keeps the
determinant's sign pattern while removing the exponential growth of the
cosh/sinh branch, so bracketing also works below the potential floor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidGraphError, NotARootError, SpectrumError
from .graphs import (DIRICHLET, NEUMANN, Constant, Edge, MetricGraph, Sampled,
                     potential_max_abs, potential_min, validate)
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "EdgeBasis", "Eigenpair", "Spectrum", "GenericityReport", "SecularSystem",
    "cs_eval", "edge_fundamental_solutions", "secular_value", "scan_spectrum",
    "eigenfunction_recover", "genericity_check", "l2_inner",
]


# ── fundamental solutions ───────────────────────────────────────────────────

def cs_eval(mu, x):
    """Entire fundamental pair ``C(mu, x)``, ``S(mu, x)`` for ``-y'' = mu y``.

    ``C`` solves with ``C(0)=1, C'(0)=0`` and ``S`` with ``S(0)=0, S'(0)=1``;
    the derivative relations are ``C' = -mu S`` and ``S' = C``, and the
    Wronskian identity ``C² + mu S² = 1`` holds exactly. Arguments broadcast.
    """
    mu_a, x_a = np.broadcast_arrays(np.asarray(mu, dtype=float),
                                    np.asarray(x, dtype=float))
    C = np.empty(mu_a.shape)
    S = np.empty(mu_a.shape)
    t = mu_a * x_a * x_a
    ser = np.abs(t) < 1e-10
    pos = (mu_a > 0.0) & ~ser
    neg = ~pos & ~ser
    if ser.any():
        ts = t[ser]
        C[ser] = 1.0 - ts / 2.0 + ts * ts / 24.0
        S[ser] = x_a[ser] * (1.0 - ts / 6.0 + ts * ts / 120.0)
    if pos.any():
        k = np.sqrt(mu_a[pos])
        kx = k * x_a[pos]
        C[pos] = np.cos(kx)
        S[pos] = np.sin(kx) / k
    if neg.any():
        w = np.sqrt(-mu_a[neg])
        wx = w * x_a[neg]
        C[neg] = np.cosh(wx)
        S[neg] = np.sinh(wx) / w
    if C.ndim == 0:
        return float(C), float(S)
    return C, S


def _grid_intervals(length: float, lam: float, min_intervals: int) -> int:
    """Even interval count giving at least 16 samples per half-wavelength."""
    k = math.sqrt(max(lam, 0.0))
    n = max(min_intervals, int(math.ceil(16.0 * length * k / math.pi)))
    return n + (n % 2)


class EdgeBasis:
    """Fundamental solution pair on one edge at a fixed spectral parameter.

    Exposes the values ``u, du, v, dv`` on an odd uniform grid (endpoints
    included) plus pointwise evaluation at arbitrary ``x`` in ``[0, length]``.
    """

    def __init__(self, edge: Edge, lam: float, xs, u, du, v, dv,
                 ddu=None, ddv=None):
        self.edge = edge
        self.edge_id = edge.id
        self.length = edge.length
        self.lam = float(lam)
        self.xs = xs
        self.u, self.du, self.v, self.dv = u, du, v, dv
        self._ddu, self._ddv = ddu, ddv  # second derivatives, sampled case only
        self._mu = None if isinstance(edge.potential, Sampled) else lam - edge.potential.value

    @property
    def endpoint(self):
        """(u, du, v, dv) at x = length."""
        return (self.u[-1], self.du[-1], self.v[-1], self.dv[-1])

    def eval(self, x):
        """Values and derivatives ``(u, du, v, dv)`` at ``x`` (scalar/array)."""
        xq = np.asarray(x, dtype=float)
        if np.any(xq < -1e-12 * self.length) or np.any(xq > self.length * (1 + 1e-12)):
            raise ValueError(f"x outside [0, {self.length}] on edge {self.edge_id!r}")
        xq = np.clip(xq, 0.0, self.length)
        if self._mu is not None:
            C, S = cs_eval(self._mu, xq)
            return C, -self._mu * S, S, C
        return self._interp(xq)

    def _interp(self, xq):
        h = self.xs[1] - self.xs[0]
        idx = np.clip((xq / h).astype(int), 0, len(self.xs) - 2)
        x0 = self.xs[idx]
        s = (xq - x0) / h
        out = []
        for f, d in ((self.u, self.du), (self.du, self._ddu),
                     (self.v, self.dv), (self.dv, self._ddv)):
            f0, f1 = f[idx], f[idx + 1]
            d0, d1 = d[idx], d[idx + 1]
            h00 = (1 + 2 * s) * (1 - s) ** 2
            h10 = s * (1 - s) ** 2
            h01 = s * s * (3 - 2 * s)
            h11 = s * s * (s - 1)
            out.append(h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1)
        return tuple(out)

    @cached_property
    def wronskian_defect(self) -> float:
        """max |u v' - u' v - 1| along the grid (exactly 0 in theory)."""
        w = self.u * self.dv - self.du * self.v
        return float(np.max(np.abs(w - 1.0)))


def _sampled_step_count(edge: Edge, lam: float, min_intervals: int) -> int:
    wmax = potential_max_abs(edge.potential)
    h_cap = min(edge.length / 256.0, 0.025 / math.sqrt(abs(lam) + wmax + 1.0))
    n = max(min_intervals, int(math.ceil(edge.length / h_cap)))
    return n + (n % 2)


@lru_cache(maxsize=128)
def _step_potential(pot: Sampled, length: float, n_steps: int):
    """Spline of a sampled potential plus its values at the RK4 abscissae.

    Keyed by the (immutable) potential itself so repeated sweeps over the
    same edge never re-evaluate the spline.
    """
    from scipy.interpolate import CubicSpline
    spline = CubicSpline(np.asarray(pot.xs), np.asarray(pot.ws))
    xs = np.linspace(0.0, length, n_steps + 1)
    h = length / n_steps
    return spline, spline(xs[:-1]), spline(xs[:-1] + h / 2.0), spline(xs[1:])


def _rk4_sweep(length: float, pot: Sampled, lam, n_steps: int):
    """Integrate u'' = (W - lam) u and v likewise across the edge.

    ``lam`` may be a scalar or a 1-d array (one sweep per parameter); returns
    grid arrays with a trailing parameter axis in the batched case. The two
    fundamental solutions ride in a trailing axis of one state array so each
    step is a single set of vector operations.
    """
    lam_a = np.asarray(lam, dtype=float)
    h = length / n_steps
    xs = np.linspace(0.0, length, n_steps + 1)
    _, w0, wm, w1 = _step_potential(pot, length, n_steps)
    shape = (n_steps + 1,) + lam_a.shape + (2,)
    y = np.empty(shape)
    dy = np.empty(shape)
    y[0, ..., 0], dy[0, ..., 0] = 1.0, 0.0
    y[0, ..., 1], dy[0, ..., 1] = 0.0, 1.0
    lam_e = lam_a[..., None]

    for i in range(n_steps):
        y0, p0 = y[i], dy[i]
        a1 = (w0[i] - lam_e) * y0
        y1 = y0 + 0.5 * h * p0
        p1 = p0 + 0.5 * h * a1
        a2 = (wm[i] - lam_e) * y1
        y2 = y0 + 0.5 * h * p1
        p2 = p0 + 0.5 * h * a2
        a3 = (wm[i] - lam_e) * y2
        y3 = y0 + h * p2
        p3 = p0 + h * a3
        a4 = (w1[i] - lam_e) * y3
        y[i + 1] = y0 + h / 6.0 * (p0 + 2 * p1 + 2 * p2 + p3)
        dy[i + 1] = p0 + h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
    return xs, y[..., 0], dy[..., 0], y[..., 1], dy[..., 1]


def edge_fundamental_solutions(edge: Edge, lam: float, *,
                               min_intervals: int = 128) -> EdgeBasis:
    """Fundamental pair on ``edge`` at spectral parameter ``lam``.

    Constant potential is evaluated in closed form; sampled potential is
    integrated by RK4 with step bounded well below
    ``min(length/64, 0.1/sqrt(|lam| + max|W| + 1))``.
    """
    if isinstance(edge.potential, Constant):
        n = _grid_intervals(edge.length, lam - min(edge.potential.value, 0.0),
                            min_intervals)
        xs = np.linspace(0.0, edge.length, n + 1)
        mu = lam - edge.potential.value
        C, S = cs_eval(mu, xs)
        return EdgeBasis(edge, lam, xs, C, -mu * S, S, C)
    n = max(_sampled_step_count(edge, lam, min_intervals),
            _grid_intervals(edge.length, lam + potential_max_abs(edge.potential),
                            min_intervals))
    n += n % 2
    xs, u, du, v, dv = _rk4_sweep(edge.length, edge.potential, lam, n)
    spline = _step_potential(edge.potential, edge.length, n)[0]
    wl = spline(xs) - lam
    return EdgeBasis(edge, lam, xs, u, du, v, dv, ddu=wl * u, ddv=wl * v)


def _edge_transfer_batch(edge: Edge, lams: np.ndarray):
    """Endpoint values ``(u, du, v, dv)`` at ``x = length`` for a batch of
    spectral parameters."""
    if isinstance(edge.potential, Constant):
        mu = lams - edge.potential.value
        C, S = cs_eval(mu, edge.length)
        return C, -mu * S, S, C
    # step count per parameter, rounded up to a power of two: the transfer
    # matrix is then a fixed function of lam alone, not of the batch it
    # happens to arrive in, so re-refining a root from another direction
    # reproduces the same zero
    lams = np.asarray(lams, dtype=float)
    groups: dict = {}
    for i, lam in enumerate(lams):
        n = _sampled_step_count(edge, float(lam), 64)
        groups.setdefault(1 << (n - 1).bit_length(), []).append(i)
    u = np.empty(lams.shape)
    du = np.empty(lams.shape)
    v = np.empty(lams.shape)
    dv = np.empty(lams.shape)
    for n, idx in groups.items():
        _, gu, gdu, gv, gdv = _rk4_sweep(edge.length, edge.potential,
                                         lams[idx], n)
        u[idx], du[idx], v[idx], dv[idx] = gu[-1], gdu[-1], gv[-1], gdv[-1]
    return u, du, v, dv


# ── secular system ──────────────────────────────────────────────────────────

class SecularSystem:
    """Vertex-condition linear system in the per-edge coefficient basis.

    Unknowns are ordered ``(c_u, c_v)`` per edge; rows are, in order: one
    condition per boundary vertex, then per inner vertex a continuity chain
    (degree - 1 rows) followed by the derivative-sum row. The row count is
    ``2 |E|`` for any valid graph.
    """

    def __init__(self, graph: MetricGraph, tol: Tolerances = DEFAULT):
        rep = validate(graph)
        if not rep.valid:
            raise InvalidGraphError(rep.issues)
        self.graph = graph
        self.tol = tol
        self.n = 2 * len(graph.edges)
        self._static = []   # (row, col, value)
        self._dynamic = []  # (row, col, edge index, component, sign)
        row = 0
        for v in graph.vertices:
            ends = graph.vertex_ends[v]
            if len(ends) == 1:
                (ei, end) = ends[0]
                cond = graph.boundary_condition(v) or DIRICHLET
                if cond == DIRICHLET:
                    self._add_value(row, ei, end, +1.0)
                else:
                    self._add_deriv_out(row, ei, end, +1.0)
                row += 1
        for v in graph.vertices:
            ends = graph.vertex_ends[v]
            if len(ends) < 2:
                continue
            for (a, b) in zip(ends, ends[1:]):
                self._add_value(row, a[0], a[1], +1.0)
                self._add_value(row, b[0], b[1], -1.0)
                row += 1
            for (ei, end) in ends:
                self._add_deriv_out(row, ei, end, +1.0)
            row += 1
        assert row == self.n, f"row count {row} != 2|E| = {self.n}"

    def _add_value(self, row, ei, end, sign):
        if end == 0:
            self._static.append((row, 2 * ei, sign))
        else:
            self._dynamic.append((row, 2 * ei, ei, 0, sign))      # u(l)
            self._dynamic.append((row, 2 * ei + 1, ei, 2, sign))  # v(l)

    def _add_deriv_out(self, row, ei, end, sign):
        # outgoing derivative: +psi'(0) at end 0, -psi'(l) at end 1
        if end == 0:
            self._static.append((row, 2 * ei + 1, sign))
        else:
            self._dynamic.append((row, 2 * ei, ei, 1, -sign))      # u'(l)
            self._dynamic.append((row, 2 * ei + 1, ei, 3, -sign))  # v'(l)

    def matrices(self, lams) -> np.ndarray:
        """Row-normalized secular matrices, shape (len(lams), n, n)."""
        lams = np.asarray(lams, dtype=float)
        B = lams.shape[0]
        transfers = [_edge_transfer_batch(e, lams) for e in self.graph.edges]
        out = np.zeros((B, self.n, self.n))
        for (r, c, val) in self._static:
            out[:, r, c] += val
        for (r, c, ei, comp, sign) in self._dynamic:
            out[:, r, c] += sign * transfers[ei][comp]
        norms = np.abs(out).max(axis=2)
        np.maximum(norms, 1e-12, out=norms)
        out /= norms[:, :, None]
        return out

    def matrix(self, lam: float) -> np.ndarray:
        return self.matrices(np.array([float(lam)]))[0]

    def values(self, lams) -> np.ndarray:
        return np.linalg.det(self.matrices(lams))

    def value(self, lam: float) -> float:
        return float(self.values(np.array([float(lam)]))[0])

    def nullspace(self, lam: float, cutoff: float):
        """Singular vectors with singular value below ``cutoff * sigma_max``."""
        mat = self.matrix(lam)
        _, sv, vh = np.linalg.svd(mat)
        m = int(np.sum(sv <= cutoff * sv[0]))
        return sv, vh[self.n - m:] if m else vh[:0]


def secular_value(graph: MetricGraph, lam: float,
                  tol: Tolerances = DEFAULT) -> float:
    """Row-normalized secular determinant at ``lam`` (zero iff eigenvalue)."""
    return SecularSystem(graph, tol).value(lam)


# ── root scanning ───────────────────────────────────────────────────────────

@dataclass(frozen=True)
class _Root:
    lam: float
    multiplicity: int


def _bisect_root(fn: Callable, a: float, b: float, fa: float, fb: float,
                 rel: float) -> float:
    """Standard bisection on a bracketing interval ``[a, b]``."""
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    for _ in range(200):
        if b - a <= rel * max(1.0, abs(a), abs(b)):
            break
        m = 0.5 * (a + b)
        fm = fn(m)
        if fm == 0.0:
            return m
        if (fa < 0) != (fm < 0):
            b, fb = m, fm
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


def _golden_min(fn: Callable, a: float, b: float, iters: int = 80):
    """Golden-section minimizer of ``fn`` on ``[a, b]``; returns (x, fn(x))."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    x = c if fc < fd else d
    return x, min(fc, fd)


def _bisect_roots_batch(values: Callable, a, b, fa, fb, rel: float,
                        max_iter: int = 200) -> np.ndarray:
    """Bisect many brackets at once; one matrix batch per iteration."""
    a = np.asarray(a, float).copy()
    b = np.asarray(b, float).copy()
    fa = np.asarray(fa, float).copy()
    fb = np.asarray(fb, float).copy()
    b[fa == 0.0] = a[fa == 0.0]
    a[fb == 0.0] = b[fb == 0.0]
    for _ in range(max_iter):
        thr = rel * np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
        if np.all(b - a <= thr):
            break
        m = 0.5 * (a + b)
        fm = np.asarray(values(m), float)
        exact = fm == 0.0
        left = (fa < 0.0) != (fm < 0.0)
        b = np.where(exact | left, m, b)
        fb = np.where(left & ~exact, fm, fb)
        a = np.where(exact | ~left, m, a)
        fa = np.where(~left & ~exact, fm, fa)
    return 0.5 * (a + b)


def _merge_windows(windows: list) -> list:
    """Merge overlapping (a, b, scale) intervals, keeping the largest scale."""
    out = []
    for a, b, scale in sorted(windows):
        if out and a <= out[-1][1]:
            pa, pb, ps = out[-1]
            out[-1] = (pa, max(pb, b), max(ps, scale))
        else:
            out.append((a, b, scale))
    return out


def _window_roots(system: SecularSystem, grid: np.ndarray, vals: np.ndarray,
                  tol: Tolerances) -> list:
    """Brackets and dips of the secular function on one scan window."""
    roots = []
    signs = np.sign(vals)
    flips = []
    for j in range(len(grid) - 1):
        if signs[j] != 0 and signs[j + 1] != 0 and signs[j] != signs[j + 1]:
            flips.append(j)
        elif signs[j] == 0:  # grid point lands exactly on a root
            roots.append(float(grid[j]))
    if flips:
        ja = np.array(flips)
        roots.extend(_bisect_roots_batch(
            system.values, grid[ja], grid[ja + 1], vals[ja], vals[ja + 1],
            tol.secular_bisect))
    # Dip candidates: sampled local minima of |det| well below the local
    # scale.  Each gets a fine sub-scan of its flanking cells, which either
    # resolves a close pair of simple roots into ordinary brackets or pins
    # an even-multiplicity root the sign scan cannot see.  Sub-scans that
    # rediscover an already-bracketed root are merged away later.
    absv = np.abs(vals)
    windows = []
    for j in range(1, len(grid) - 1):
        if absv[j] > absv[j - 1] or absv[j] > absv[j + 1]:
            continue
        lo_w, hi_w = max(0, j - 8), min(len(grid), j + 9)
        scale = float(np.max(absv[lo_w:hi_w]))
        if scale <= 0.0 or absv[j] > 0.2 * scale:
            continue
        windows.append((float(grid[j - 1]), float(grid[j + 1]), scale))
    for a, b, scale in _merge_windows(windows):
        sub = np.linspace(a, b, 129)
        sv = system.values(sub)
        ss = np.sign(sv)
        sflips = np.nonzero((ss[:-1] != 0) & (ss[1:] != 0)
                            & (ss[:-1] != ss[1:]))[0]
        if sflips.size:
            roots.extend(_bisect_roots_batch(
                system.values, sub[sflips], sub[sflips + 1], sv[sflips],
                sv[sflips + 1], tol.secular_bisect))
            continue
        hits = np.nonzero(ss == 0)[0]
        if hits.size:
            roots.extend(float(sub[h]) for h in hits)
            continue
        j = int(np.argmin(np.abs(sv)))
        x, fmin = _golden_min(lambda lam: abs(system.value(lam)),
                              float(sub[max(j - 1, 0)]),
                              float(sub[min(j + 1, len(sub) - 1)]))
        if fmin <= tol.secular_dip * scale:
            roots.append(x)
    return roots


def scan_spectrum(graph: MetricGraph, count: int, *,
                  tol: Tolerances = DEFAULT,
                  min_intervals: int = 128) -> "Spectrum":
    """First ``count`` eigenvalues (with multiplicity) and eigenfunctions.

    The scan walks ``lam = k²`` with step ``dk = pi / (8 L)`` (``L`` = total
    edge length), brackets sign changes of the row-normalized secular
    determinant, refines by bisection to relative accuracy 1e-12, detects
    even-order roots as determinant dips, and recovers eigenfunctions from
    the singular directions of the secular matrix. A window below zero is
    scanned first whenever the potential dips negative or a boundary
    condition is Neumann (either can push eigenvalues below zero).
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    system = SecularSystem(graph, tol)
    L = graph.total_length
    dk = math.pi / (8.0 * L)

    wmin = min(potential_min(e.potential) for e in graph.edges)
    has_neumann = any(cond == NEUMANN for _, cond in graph.boundary)
    lam_floor = 0.0
    if wmin < 0.0 or has_neumann:
        lam_floor = wmin - 1.0

    raw_roots: list = []
    k_cap = (count + len(graph.vertices) + len(graph.edges) + 8) * math.pi / L + 1.0

    start_lam = (0.5 * dk) ** 2
    if lam_floor < 0.0:
        grid = np.linspace(lam_floor, start_lam, 1025)
        vals = system.values(grid)
        raw_roots.extend(_window_roots(system, grid, vals, tol))

    chunk = 512
    k0 = -0.5 * dk  # first sampled k is 0.5 dk
    carry_lam, carry_val = None, None
    mult_sum = 0
    roots: list = []
    while k0 < k_cap:
        ks = k0 + dk * np.arange(1, chunk + 1)
        ks = ks[ks <= k_cap + dk]
        lams = ks * ks
        vals = system.values(lams)
        if carry_lam is not None:
            # two-sample overlap so a dip candidate at the seam still has
            # neighbors on both sides
            lams = np.concatenate((carry_lam, lams))
            vals = np.concatenate((carry_val, vals))
        raw_roots.extend(_window_roots(system, lams, vals, tol))
        carry_lam, carry_val = lams[-2:], vals[-2:]
        k0 = ks[-1]

        roots = _consolidate_roots(system, raw_roots, tol)
        mult_sum = sum(r.multiplicity for r in roots)
        if mult_sum >= count:
            break
    if mult_sum < count:
        raise SpectrumError(
            f"found {mult_sum} eigenvalues below lambda = {k_cap ** 2:.6g}, "
            f"needed {count}; scan window exhausted")

    pairs = []
    index = 1
    for root in roots:
        if index > count:
            break
        group = eigenfunction_recover(graph, root.lam, system=system, tol=tol,
                                      min_intervals=min_intervals)
        for pair in group:
            if index > count:
                break
            pair.index = index
            pairs.append(pair)
            index += 1
    return Spectrum(graph=graph, pairs=pairs, tol=tol,
                    scan_step=dk, scan_cap=k_cap)


def _consolidate_roots(system: SecularSystem, raw: Sequence[float],
                       tol: Tolerances) -> list:
    """Sort, merge duplicates, and attach SVD multiplicities."""
    merged: list = []
    for lam in sorted(raw):
        if merged and abs(lam - merged[-1]) <= 1e-9 * max(1.0, abs(lam)):
            continue
        merged.append(lam)
    out = []
    for lam in merged:
        _, vecs = system.nullspace(lam, tol.nullspace)
        mult = vecs.shape[0]
        if mult == 0:
            continue  # refined point is not singular enough: not a root
        out.append(_Root(lam=lam, multiplicity=mult))
    return out


# ── eigenfunctions ──────────────────────────────────────────────────────────

def _simpson(y: np.ndarray, dx: float) -> float:
    # len(y) is odd by grid construction
    return dx / 3.0 * (y[0] + y[-1] + 4.0 * np.sum(y[1:-1:2]) + 2.0 * np.sum(y[2:-2:2]))


class Eigenpair:
    """One eigenvalue with its (L²-normalized) eigenfunction.

    The eigenfunction is held as coefficients ``(c_u, c_v)`` against the
    fundamental basis of each edge; evaluation anywhere is closed-form
    through the basis. ``residuals`` records how well the vertex conditions
    and the Wronskian identity are satisfied, relative to the sup norm.
    """

    def __init__(self, graph: MetricGraph, lam: float, coeffs: dict,
                 basis: dict, multiplicity: int):
        self.graph = graph
        self.lam = float(lam)
        self.coeffs = coeffs
        self.basis = basis
        self.multiplicity = multiplicity
        self.index = 0
        self.l2_norm = 1.0
        self.residuals: dict = {}
        self._grid_cache: dict = {}

    def grid_values(self, edge_id) -> np.ndarray:
        if edge_id not in self._grid_cache:
            cu, cv = self.coeffs[edge_id]
            b = self.basis[edge_id]
            self._grid_cache[edge_id] = cu * b.u + cv * b.v
        return self._grid_cache[edge_id]

    def value(self, edge_id, x):
        cu, cv = self.coeffs[edge_id]
        u, _, v, _ = self.basis[edge_id].eval(x)
        return cu * u + cv * v

    def derivative(self, edge_id, x):
        cu, cv = self.coeffs[edge_id]
        _, du, _, dv = self.basis[edge_id].eval(x)
        return cu * du + cv * dv

    def vertex_value(self, v) -> float:
        ends = self.graph.vertex_ends[v]
        vals = []
        for (ei, end) in ends:
            e = self.graph.edges[ei]
            cu, cv = self.coeffs[e.id]
            b = self.basis[e.id]
            if end == 0:
                vals.append(cu * b.u[0] + cv * b.v[0])
            else:
                vals.append(cu * b.u[-1] + cv * b.v[-1])
        return float(np.mean(vals))

    @cached_property
    def sup_norm(self) -> float:
        return max(float(np.max(np.abs(self.grid_values(e.id))))
                   for e in self.graph.edges)

    def scale(self, factor: float) -> None:
        for eid in list(self.coeffs):
            cu, cv = self.coeffs[eid]
            self.coeffs[eid] = (cu * factor, cv * factor)
        self._grid_cache = {}
        self.__dict__.pop("sup_norm", None)


def eigenfunction_recover(graph: MetricGraph, lam: float, *,
                          system: SecularSystem = None,
                          tol: Tolerances = DEFAULT,
                          min_intervals: int = 128) -> list:
    """Eigenfunctions at (a numerically refined) eigenvalue ``lam``.

    Returns one :class:`Eigenpair` per nullspace direction of the secular
    matrix, L²-orthonormalized with a deterministic sign: walking the edges
    in storage order, the first grid sample clearly away from zero is made
    positive. On an interval this reproduces the usual sqrt(2)*sin(n pi x)
    normalization. Raises :class:`NotARootError` when no singular value
    falls below the nullspace cutoff, i.e. ``lam`` is not close to a root.
    """
    if system is None:
        system = SecularSystem(graph, tol)
    sv, vecs = system.nullspace(lam, tol.nullspace)
    if vecs.shape[0] == 0:
        raise NotARootError(
            f"lambda = {lam:.12g} is not a secular root "
            f"(smallest singular ratio {sv[-1] / sv[0]:.3g})")
    mult = vecs.shape[0]
    basis = {e.id: edge_fundamental_solutions(e, lam, min_intervals=min_intervals)
             for e in graph.edges}

    def edge_values(vec, e, i):
        cu, cv = vec[2 * i], vec[2 * i + 1]
        b = basis[e.id]
        return cu * b.u + cv * b.v

    def inner(vec_a, vec_b):
        total = 0.0
        for i, e in enumerate(graph.edges):
            ya = edge_values(vec_a, e, i)
            yb = edge_values(vec_b, e, i)
            dx = basis[e.id].xs[1] - basis[e.id].xs[0]
            total += _simpson(ya * yb, dx)
        return total

    ortho = []
    for raw in vecs:
        vec = raw.astype(float).copy()
        for prev in ortho:
            vec -= inner(vec, prev) * prev
        nrm = math.sqrt(max(inner(vec, vec), 0.0))
        if nrm <= 0.0:
            continue
        ortho.append(vec / nrm)

    pairs = []
    for vec in ortho:
        # deterministic sign: first sample above 1e-6 of the sup, walking
        # edges in storage order, made positive
        all_ys = [edge_values(vec, e, i) for i, e in enumerate(graph.edges)]
        sup = max(float(np.max(np.abs(ys))) for ys in all_ys)
        first = 0.0
        for ys in all_ys:
            hits = np.nonzero(np.abs(ys) > 1e-6 * sup)[0]
            if hits.size:
                first = float(ys[hits[0]])
                break
        if first < 0.0:
            vec = -vec
        coeffs = {e.id: (float(vec[2 * i]), float(vec[2 * i + 1]))
                  for i, e in enumerate(graph.edges)}
        pair = Eigenpair(graph, lam, coeffs, basis, mult)
        pair.residuals = _pair_residuals(graph, pair)
        pairs.append(pair)
    return pairs


def _pair_residuals(graph: MetricGraph, pair: Eigenpair) -> dict:
    sup = pair.sup_norm
    dscale = sup * max(1.0, math.sqrt(abs(pair.lam)))
    cont = 0.0
    kirch = 0.0
    bval = 0.0
    for v in graph.vertices:
        ends = graph.vertex_ends[v]
        vals, outs = [], []
        for (ei, end) in ends:
            e = graph.edges[ei]
            x = 0.0 if end == 0 else e.length
            vals.append(pair.value(e.id, x))
            d = pair.derivative(e.id, x)
            outs.append(d if end == 0 else -d)
        if len(ends) == 1:
            cond = graph.boundary_condition(v) or DIRICHLET
            if cond == DIRICHLET:
                bval = max(bval, abs(vals[0]) / sup)
            else:
                bval = max(bval, abs(outs[0]) / dscale)
        else:
            mean = float(np.mean(vals))
            cont = max(cont, max(abs(val - mean) for val in vals) / sup)
            kirch = max(kirch, abs(sum(outs)) / dscale)
    wron = max(pair.basis[e.id].wronskian_defect for e in graph.edges)
    return {"continuity": cont, "kirchhoff": kirch,
            "boundary": bval, "wronskian": wron}


def l2_inner(pair_a: Eigenpair, pair_b: Eigenpair,
             min_intervals: int = 128) -> float:
    """L² inner product of two eigenfunctions, on a shared fresh grid."""
    graph = pair_a.graph
    total = 0.0
    lam_ref = max(abs(pair_a.lam), abs(pair_b.lam), 1.0)
    for e in graph.edges:
        n = _grid_intervals(e.length, lam_ref, min_intervals)
        xs = np.linspace(0.0, e.length, n + 1)
        ya = pair_a.value(e.id, xs)
        yb = pair_b.value(e.id, xs)
        total += _simpson(ya * yb, xs[1] - xs[0])
    return total


# ── spectrum and genericity ─────────────────────────────────────────────────

class Spectrum:
    """Computed lower part of a graph spectrum, indexed from 1."""

    def __init__(self, graph: MetricGraph, pairs: list, tol: Tolerances,
                 scan_step: float, scan_cap: float):
        self.graph = graph
        self.pairs = pairs
        self.tol = tol
        self.scan_step = scan_step
        self.scan_cap = scan_cap

    def __len__(self):
        return len(self.pairs)

    def pair(self, k: int) -> Eigenpair:
        if not (1 <= k <= len(self.pairs)):
            raise IndexError(f"eigenvalue index {k} outside 1..{len(self.pairs)}")
        return self.pairs[k - 1]

    def lam(self, k: int) -> float:
        return self.pair(k).lam

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([p.lam for p in self.pairs])


@dataclass(frozen=True)
class GenericityReport:
    """Numerical genericity of a computed spectral window: every
    eigenfunction visibly nonzero at every inner vertex, all gaps open."""

    generic: bool
    ratios: tuple          # per eigenpair: min inner-vertex |f(v)| / sup|f|
    gaps: tuple            # consecutive eigenvalue differences
    lam_max: float
    tol_vertex: float
    tol_gap_abs: float
    failures: tuple

    def to_obj(self) -> dict:
        return {
            "generic": self.generic,
            "ratios": list(self.ratios),
            "gaps": list(self.gaps),
            "lam_max": self.lam_max,
            "tol_vertex": self.tol_vertex,
            "tol_gap_abs": self.tol_gap_abs,
            "failures": list(self.failures),
        }


def genericity_check(graph: MetricGraph, count: int, *,
                     spectrum: Spectrum = None,
                     tol: Tolerances = DEFAULT) -> GenericityReport:
    """Check the first ``count`` eigenpairs for numerical genericity.

    Verdict is true when every inner-vertex value ratio clears
    ``tol.gen_vertex_ratio``, every multiplicity is 1 and every gap exceeds
    ``tol.gen_gap`` times the largest computed eigenvalue. Graphs without
    inner vertices (the interval) report ratio +inf per pair.
    """
    if spectrum is None or len(spectrum) < count:
        spectrum = scan_spectrum(graph, count, tol=tol)
    pairs = spectrum.pairs[:count]
    inner = graph.inner_vertices
    ratios = []
    failures = []
    for p in pairs:
        if inner:
            r = min(abs(p.vertex_value(v)) for v in inner) / p.sup_norm
        else:
            r = float("inf")
        ratios.append(r)
        if r <= tol.gen_vertex_ratio:
            failures.append(f"eigenfunction {p.index} vanishes at an inner vertex "
                            f"(ratio {r:.3g})")
        if p.multiplicity > 1:
            failures.append(f"eigenvalue {p.index} has multiplicity {p.multiplicity}")
    lams = [p.lam for p in pairs]
    lam_max = max((abs(l) for l in lams), default=1.0)
    gap_floor = tol.gen_gap * max(lam_max, 1e-3)
    gaps = [b - a for a, b in zip(lams, lams[1:])]
    for i, gap in enumerate(gaps):
        if gap <= gap_floor:
            failures.append(f"gap between eigenvalues {i + 1} and {i + 2} is "
                            f"{gap:.3g} <= {gap_floor:.3g}")
    return GenericityReport(
        generic=not failures,
        ratios=tuple(ratios),
        gaps=tuple(gaps),
        lam_max=lam_max,
        tol_vertex=tol.gen_vertex_ratio,
        tol_gap_abs=gap_floor,
        failures=tuple(failures),
    )
