"""Zero counting on eigenfunction combinations."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgnodal import (
    DegenerateEdgeError,
    brute_force_count,
    build_star,
    count_zeros,
    make_graph,
    scan_spectrum,
)
from qgnodal.nodal import FunctionOnGraph

# index sets and coefficients for interval combinations
_indices = st.lists(st.integers(1, 10), min_size=1, max_size=4, unique=True)
_coeff = st.floats(-3.0, 3.0).filter(lambda c: abs(c) > 1e-3)


class TestSingleEigenfunctions:

    def test_interval_counts(self, interval_spectrum):
        """The n-th eigenfunction of the interval has n - 1 zeros."""
        for n in range(1, 11):
            rep = count_zeros(FunctionOnGraph(interval_spectrum, [n], [1.0]))
            assert rep.total == n - 1

    def test_zero_locations(self, interval_spectrum):
        rep = count_zeros(FunctionOnGraph(interval_spectrum, [4], [1.0]))
        assert [z.kind for z in rep.loci] == ["transversal"] * 3
        got = sorted(z.x for z in rep.loci)
        assert np.max(np.abs(np.array(got) - [0.25, 0.5, 0.75])) <= 1e-9

    def test_scaling_invariance(self, interval_spectrum):
        for c in (3.7, -2.0, 1e-3):
            rep = count_zeros(FunctionOnGraph(interval_spectrum, [5], [c]))
            assert rep.total == 4

    def test_brute_force_agrees(self, interval_spectrum):
        for n in (2, 5, 8):
            fn = FunctionOnGraph(interval_spectrum, [n], [1.0])
            assert brute_force_count(fn) == n - 1


class TestCombinations:

    def test_no_zero_combo(self, interval_spectrum):
        # sqrt(2) sin(pi x) + 0.5 sqrt(2) sin(2 pi x) stays positive inside
        rep = count_zeros(FunctionOnGraph(interval_spectrum, [1, 2], [1.0, 0.5]))
        assert rep.total == 0

    def test_tangential_zero(self, interval_spectrum):
        """f1 + f3 touches zero at the midpoint without crossing."""
        fn = FunctionOnGraph(interval_spectrum, [1, 3], [1.0, 1.0])
        rep = count_zeros(fn)
        assert rep.total == 1
        assert rep.tangential_present
        (z,) = rep.loci
        assert z.kind == "tangential"
        assert abs(z.x - 0.5) <= 1e-6
        # a sign-change count cannot see a touch point
        assert brute_force_count(fn) == 0

    def test_symmetric_double_zero_counted_once(self, interval_spectrum):
        # sin(3 pi x) + sin(5 pi x) = 2 sin(4 pi x) cos(pi x): a double zero
        # at x = 1/2 whose numerical residue is a noise-level sign lens; it
        # must come back as one tangential locus, not a split pair
        fn = FunctionOnGraph(interval_spectrum, [3, 5], [1.0, 1.0])
        rep = count_zeros(fn)
        assert rep.total == 3
        assert sorted(z.kind for z in rep.loci) == [
            "tangential", "transversal", "transversal"]
        tang = next(z for z in rep.loci if z.kind == "tangential")
        assert abs(tang.x - 0.5) <= 1e-6

    def test_close_pair_above_noise_splits(self, interval_spectrum):
        # detuning the coefficient lifts the lens floor above the noise
        # tolerance: now there really are two crossings near the midpoint
        fn = FunctionOnGraph(interval_spectrum, [3, 5], [1.0, 1.001])
        rep = count_zeros(fn)
        assert rep.total == 4
        assert not rep.tangential_present
        assert brute_force_count(fn) == 4

    def test_pair_combos_match_factorization(self, interval_spectrum):
        """sin(j pi x) +- sin(k pi x) factorizes into a product of two
        harmonics, so the distinct zeros of every such combination can be
        enumerated as exact rationals and compared against the counter."""
        from fractions import Fraction
        for j in range(1, 9):
            for k in range(j + 1, 9):
                for sign in (1.0, -1.0):
                    p, q = j + k, k - j
                    if sign > 0:
                        zs = {Fraction(2 * t, p)
                              for t in range(1, (p + 1) // 2)}
                        zs |= {Fraction(2 * u + 1, q)
                               for u in range(q) if 2 * u + 1 < q}
                    else:
                        zs = {Fraction(2 * u + 1, p)
                              for u in range(p) if 2 * u + 1 < p}
                        zs |= {Fraction(2 * t, q)
                               for t in range(1, (q + 1) // 2)}
                    fn = FunctionOnGraph(interval_spectrum, [j, k],
                                         [1.0, sign])
                    assert count_zeros(fn).total == len(zs), (j, k, sign)

    def test_vertex_zero_counted_once(self):
        path = make_graph([("e1", "a", "v", 0.5), ("e2", "v", "b", 0.5)])
        spec = scan_spectrum(path, 3)
        rep = count_zeros(FunctionOnGraph(spec, [2], [1.0]))
        assert rep.total == 1
        assert rep.vertex_zero_present
        (z,) = rep.loci
        assert z.kind == "vertex" and z.vertex == "v"

    @given(indices=_indices, data=st.data())
    @settings(max_examples=120, deadline=None)
    def test_sturm_band_on_interval(self, interval_spectrum, indices, data):
        """Interval combinations obey k1 - 1 <= N <= kM - 1."""
        indices = sorted(indices)
        coeffs = [data.draw(_coeff) for _ in indices]
        fn = FunctionOnGraph(interval_spectrum, indices, coeffs)
        rep = count_zeros(fn)
        assert indices[0] - 1 <= rep.total <= indices[-1] - 1


class TestDegenerate:

    def test_vanishing_on_edge_rejected(self):
        """A combination that dies on a whole edge has no honest count."""
        spec = scan_spectrum(build_star(2, 1.0), 4)
        a = spec.pair(2).value("long", 0.37)
        b = spec.pair(3).value("long", 0.37)
        fn = FunctionOnGraph(spec, [2, 3], [b, -a])
        with pytest.raises(DegenerateEdgeError):
            count_zeros(fn)

    def test_report_flags_default_false(self, interval_spectrum):
        rep = count_zeros(FunctionOnGraph(interval_spectrum, [3], [1.0]))
        assert not rep.tangential_present
        assert not rep.vertex_zero_present
        assert not rep.approximate
