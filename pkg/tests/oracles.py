"""Independent reference routes for the test suite.

Nothing in this module imports the package under test.  The model-family
eigenvalues come from scalar transcendental equations, sampled-potential
eigenvalues from direct ODE shooting, and the frozen constants at the
bottom were produced by exactly these routes and then written down.
"""
from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline


def bisect_root(f, a: float, b: float, iters: int = 100) -> float:
    """Plain bisection; assumes f(a) and f(b) straddle zero."""
    fa = f(a)
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = f(m)
        if fa * fm <= 0.0:
            b = m
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


def grid_roots(f, a: float, b: float, n: int, count: int) -> list:
    """First ``count`` sign-change roots of ``f`` on [a, b], n-point scan."""
    xs = np.linspace(a, b, n)
    vals = np.array([f(x) for x in xs])
    out = []
    for j in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        out.append(bisect_root(f, float(xs[j]), float(xs[j + 1])))
        if len(out) == count:
            break
    return out


# ── model family: one unit edge against s short edges at a common vertex ─────

def star_secular(s: int, eps: float):
    # pole-free form of cot(k) + s cot(k eps) = 0
    def f(k):
        return np.cos(k) * np.sin(k * eps) + s * np.sin(k) * np.cos(k * eps)
    return f


def star_lams(s: int, eps: float, count: int) -> list:
    k_hi = (count + 2) * np.pi / min(1.0, 1.0)  # unit edge dominates spacing
    ks = grid_roots(star_secular(s, eps), 1e-6, k_hi + count * np.pi, 4096, count)
    return [k * k for k in ks]


# ── model family: two half-unit rails joined by m short rungs ────────────────

def ladder_secular_antisym(m: int, eps: float):
    # odd functions across the reflection see Dirichlet half-rungs
    def f(k):
        return (np.cos(0.5 * k) * np.sin(0.5 * k * eps)
                + m * np.sin(0.5 * k) * np.cos(0.5 * k * eps))
    return f


def ladder_secular_sym(m: int, eps: float):
    # even functions see Neumann half-rungs
    def f(k):
        return (m * np.sin(0.5 * k) * np.sin(0.5 * k * eps)
                - np.cos(0.5 * k) * np.cos(0.5 * k * eps))
    return f


def ladder_lams(m: int, eps: float, count: int) -> list:
    k_hi = 2.0 * (count + 2) * np.pi
    sym = grid_roots(ladder_secular_sym(m, eps), 1e-6, k_hi, 8192, count)
    anti = grid_roots(ladder_secular_antisym(m, eps), 1e-6, k_hi, 8192, count)
    lams = sorted([k * k for k in sym] + [k * k for k in anti])
    return lams[:count]


# ── sampled potentials: shooting on the interpolating spline ─────────────────

def shooting_lams(xs, ws, count: int, lam_lo: float, lam_hi: float,
                  n_scan: int = 3000) -> list:
    """Dirichlet eigenvalues of -u'' + W u on [0, 1] by direct shooting.

    ``W`` is the cubic spline through the samples, matching the package's
    reading of a sampled potential; the integrator and the eigenvalue
    search share no code with it.
    """
    spline = CubicSpline(np.asarray(xs, float), np.asarray(ws, float))

    def endpoint(lam):
        def rhs(x, y):
            return [y[1], (float(spline(x)) - lam) * y[0]]
        sol = solve_ivp(rhs, (0.0, 1.0), [0.0, 1.0], rtol=1e-12, atol=1e-14,
                        method="DOP853")
        return float(sol.y[0, -1])

    return grid_roots(endpoint, lam_lo, lam_hi, n_scan, count)


# ── exponential sums in the flow variable ────────────────────────────────────

def exp_pair_zero(c1: float, l1: float, c2: float, l2: float) -> float:
    """Zero of c1 e^{-l1 y} + c2 e^{-l2 y}; requires opposite signs."""
    return float(np.log(-c2 / c1) / (l2 - l1))


def exp_sum_sign_changes(cs, ls, ys) -> int:
    """Sign changes of sum c_i e^{-l_i y} sampled along ``ys``."""
    ys = np.asarray(ys, float)
    vals = np.zeros_like(ys)
    for c, l in zip(cs, ls):
        vals += c * np.exp(-l * ys)
    signs = np.sign(vals)
    signs = signs[signs != 0]
    return int(np.sum(signs[:-1] != signs[1:]))


# ── frozen reference values ──────────────────────────────────────────────────
# First five eigenvalues of the s = 3, eps = 1/32 star, from star_lams.
STAR3_EPS32 = (9.6665971061, 38.6595947600, 86.9579762858,
               154.5244931024, 241.3019548922)

# First five eigenvalues of the m = 3, eps = 1/32 ladder, from ladder_lams.
LADDER3_EPS32 = (8.2577165491, 38.6663884243, 74.8238746092,
                 154.6383790400, 210.1924796978)

# Unit interval, potential sampled as 40 cos(2 pi x) on 65 equispaced
# points, eigenvalues of the spline problem from shooting_lams.
COS_WELL_N = 65
COS_WELL = (-14.076543072137, 36.158883358661, 90.239081477037,
            159.205957339580)


def cos_well_samples():
    xs = np.linspace(0.0, 1.0, COS_WELL_N)
    return xs, 40.0 * np.cos(2.0 * np.pi * xs)
