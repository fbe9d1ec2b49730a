"""Numerical tolerances used throughout the package.

Every threshold that decides a discrete outcome (is this a root, is this
vertex value zero, is this spectrum generic) lives here, so a single
``--tol-scale`` factor can loosen or tighten the whole pipeline coherently.
Tolerances are relative to the natural scale of the quantity they gate
unless the field comment says otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, fields


@dataclass(frozen=True)
class Tolerances:
    # spectral solve
    secular_bisect: float = 1e-12      # eigenvalue bisection, relative in lambda
    secular_dip: float = 1e-6          # |det| at a refined dip vs neighbourhood scale
    nullspace: float = 1e-8            # singular value cutoff vs largest singular value
    wronskian: float = 1e-8            # max |u v' - u' v - 1| along an edge basis
    vertex_residual: float = 1e-7      # continuity / derivative-sum residuals
    boundary_residual: float = 1e-9    # Dirichlet value (Neumann derivative) residual
    orthogonality: float = 1e-6        # pairwise L2 inner products of eigenfunctions

    # genericity
    gen_vertex_ratio: float = 1e-6     # min inner-vertex |f(v)| / sup|f|
    gen_gap: float = 1e-8              # eigenvalue gap, relative to the largest computed

    # zero counting
    x_zero: float = 1e-10              # zero abscissa, relative to edge length
    tangential_candidate: float = 1e-8  # |F| local minimum vs sup|F| to trigger refinement
    tangential_confirm: float = 1e-10  # refined |F| vs sup|F| to accept a tangential zero
    vertex_zero: float = 1e-9          # |F(v)| vs sup|F| to count an inner-vertex zero
    degenerate_edge: float = 1e-12     # edge sup |F| vs global sup|F|: identically-zero guard
    cluster_factor: float = 4.0        # loci closer than this many x-tolerances -> approximate

    # heat flow
    y_event: float = 1e-9              # event ordinate, relative in y
    coeff_drop: float = 1e-12          # negligible exponential-sum coefficients
    e6_vertex_match: float = 1e-6      # vertex event vs exponential-sum zero, relative in y

    def scaled(self, factor: float) -> "Tolerances":
        """Return a copy with every threshold multiplied by ``factor``.

        ``cluster_factor`` is a count, not a tolerance, and is left alone.
        """
        if factor <= 0.0:
            raise ValueError(f"tolerance scale must be positive, got {factor}")
        out = {}
        for f in fields(self):
            val = getattr(self, f.name)
            out[f.name] = val if f.name == "cluster_factor" else val * factor
        return Tolerances(**out)


DEFAULT = Tolerances()
