"""Spectral solve: fundamental systems, scan, eigenfunctions, genericity."""
from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

import oracles
from qgnodal import (
    Constant,
    NotARootError,
    Sampled,
    build_interval,
    build_ladder,
    build_star,
    edge_fundamental_solutions,
    eigenfunction_recover,
    genericity_check,
    l2_inner,
    make_graph,
    perturb_lengths,
    random_tree,
    scan_spectrum,
)
from qgnodal.combolab import random_generic_graph
from qgnodal.spectral import cs_eval


class TestInterval:

    def test_eigenvalues(self, interval_spectrum):
        """Unit interval with Dirichlet ends: lambda_n = (n pi)^2."""
        for n in range(1, 11):
            exact = (n * np.pi) ** 2
            assert abs(interval_spectrum.lam(n) - exact) <= 1e-10 * exact

    def test_multiplicities_simple(self, interval_spectrum):
        assert all(interval_spectrum.pair(n).multiplicity == 1
                   for n in range(1, 11))

    def test_eigenfunction_normalization(self, interval_spectrum):
        """Common normalization: f_n(x) = sqrt(2) sin(n pi x)."""
        xs = np.linspace(0.0, 1.0, 17)
        for n in (1, 2, 3, 4):
            f = interval_spectrum.pair(n)
            exact = np.sqrt(2.0) * np.sin(n * np.pi * xs)
            got = np.array([f.value("e1", x) for x in xs])
            assert np.max(np.abs(got - exact)) <= 1e-9

    def test_derivative_matches(self, interval_spectrum):
        f = interval_spectrum.pair(2)
        xs = np.linspace(0.0, 1.0, 9)
        exact = np.sqrt(2.0) * 2 * np.pi * np.cos(2 * np.pi * xs)
        got = np.array([f.derivative("e1", x) for x in xs])
        assert np.max(np.abs(got - exact)) <= 1e-8


class TestFundamentalBasis:

    def test_zero_energy(self):
        # at lam = 0 with W = 0 the pair is u = 1, v = x
        g = build_interval()
        basis = edge_fundamental_solutions(g.edges[0], 0.0)
        assert np.max(np.abs(basis.u - 1.0)) <= 1e-12
        assert np.max(np.abs(basis.v - basis.xs)) <= 1e-12

    def test_free_basis_closed_form(self):
        g = build_interval()
        lam = 7.0
        k = np.sqrt(lam)
        basis = edge_fundamental_solutions(g.edges[0], lam)
        assert np.max(np.abs(basis.u - np.cos(k * basis.xs))) <= 1e-9
        assert np.max(np.abs(basis.v - np.sin(k * basis.xs) / k)) <= 1e-9

    def test_negative_energy_is_hyperbolic(self):
        C, S = cs_eval(np.array([-4.0]), 1.0)
        assert abs(C[0] - np.cosh(2.0)) <= 1e-12
        assert abs(S[0] - np.sinh(2.0) / 2.0) <= 1e-12

    def test_sampled_wronskian(self):
        xs, ws = oracles.cos_well_samples()
        g = make_graph([("e1", "a", "b", 1.0, Sampled(tuple(xs), tuple(ws)))])
        basis = edge_fundamental_solutions(g.edges[0], 25.0)
        assert basis.wronskian_defect <= 1e-8


class TestModelFamilyOracles:
    """Package eigenvalues against scalar transcendental equations."""

    def test_star_against_oracle(self, star3_spectrum):
        for lam, ref in zip(star3_spectrum.lambdas, oracles.STAR3_EPS32):
            assert abs(lam - ref) <= 1e-8 * ref

    def test_ladder_against_oracle(self, ladder3_spectrum):
        for lam, ref in zip(ladder3_spectrum.lambdas, oracles.LADDER3_EPS32):
            assert abs(lam - ref) <= 1e-8 * ref

    def test_star_secular_residual(self, star3_spectrum):
        f = oracles.star_secular(3, 1.0 / 32.0)
        for lam in star3_spectrum.lambdas:
            assert abs(f(np.sqrt(lam))) <= 1e-9


class TestSampledPotentials:

    def test_flat_samples_match_constant(self):
        """A constant potential given as samples agrees with the closed form."""
        g = make_graph([("e1", "a", "b", 1.0,
                         Sampled((0.0, 0.25, 0.5, 0.75, 1.0), (5.0,) * 5))])
        spec = scan_spectrum(g, 4)
        for n, lam in enumerate(spec.lambdas, start=1):
            exact = (n * np.pi) ** 2 + 5.0
            assert abs(lam - exact) <= 1e-7 * exact

    def test_cosine_well_against_shooting(self):
        xs, ws = oracles.cos_well_samples()
        g = make_graph([("e1", "a", "b", 1.0, Sampled(tuple(xs), tuple(ws)))])
        spec = scan_spectrum(g, 4)
        assert len(spec.lambdas) == 4
        for lam, ref in zip(spec.lambdas, oracles.COS_WELL):
            assert abs(lam - ref) <= 1e-7 * abs(ref)

    def test_frozen_shooting_values_are_roots(self):
        # cheap confirmation that each frozen value brackets a sign change
        # of the shooting endpoint, without redoing the full search
        xs, ws = oracles.cos_well_samples()
        spline = CubicSpline(xs, ws)

        def endpoint(lam):
            sol = solve_ivp(lambda x, y: [y[1], (float(spline(x)) - lam) * y[0]],
                            (0.0, 1.0), [0.0, 1.0], rtol=1e-12, atol=1e-14,
                            method="DOP853")
            return float(sol.y[0, -1])

        for ref in oracles.COS_WELL:
            assert endpoint(ref - 1e-5) * endpoint(ref + 1e-5) < 0


class TestResiduals:
    """Wronskian, orthonormality, and vertex-condition residuals."""

    @pytest.fixture(params=["interval", "star", "ladder"])
    def spectrum(self, request, interval_spectrum, star3_spectrum,
                 ladder3_spectrum):
        return {"interval": interval_spectrum, "star": star3_spectrum,
                "ladder": ladder3_spectrum}[request.param]

    def test_wronskian(self, spectrum):
        for k in range(1, len(spectrum.lambdas) + 1):
            basis = spectrum.pair(k).basis
            assert all(b.wronskian_defect <= 1e-8 for b in basis.values())

    def test_orthonormality(self, spectrum):
        n = len(spectrum.lambdas)
        for i in range(1, n + 1):
            for j in range(i, n + 1):
                want = 1.0 if i == j else 0.0
                assert abs(l2_inner(spectrum.pair(i), spectrum.pair(j))
                           - want) <= 1e-6

    def test_vertex_residuals(self, spectrum):
        for k in range(1, len(spectrum.lambdas) + 1):
            res = spectrum.pair(k).residuals
            assert res["continuity"] <= 1e-7
            assert res["kirchhoff"] <= 1e-7
            assert res["boundary"] <= 1e-9


class TestDegenerateSpectra:

    def test_equilateral_three_star(self):
        """Three unit edges at one vertex: double eigenvalue at pi^2."""
        spec = scan_spectrum(build_star(2, 1.0), 4)
        assert abs(spec.lam(2) - np.pi ** 2) <= 1e-8
        assert spec.pair(2).multiplicity == 2
        assert spec.pair(3).multiplicity == 2
        assert abs(spec.lam(3) - spec.lam(2)) <= 1e-10

    def test_equilateral_four_star(self):
        spec = scan_spectrum(build_star(3, 1.0), 5)
        assert spec.pair(2).multiplicity == 3

    def test_genericity_flags_degeneracy(self):
        rep = genericity_check(build_star(2, 1.0), 3)
        assert not rep.generic
        assert rep.failures

    def test_perturbed_tree_is_generic(self):
        g = perturb_lengths(random_tree(5, seed=12), 0.05, seed=3)
        rep = genericity_check(g, 5)
        assert rep.generic


class TestInvariances:

    def test_subdivision_invariance(self):
        """Splitting the interval by a degree-2 vertex keeps the spectrum."""
        path = make_graph([("e1", "a", "v", 0.6), ("e2", "v", "b", 0.4)])
        spec = scan_spectrum(path, 6)
        for n, lam in enumerate(spec.lambdas, start=1):
            exact = (n * np.pi) ** 2
            assert abs(lam - exact) <= 1e-10 * exact

    def test_storage_order_invariance(self):
        a = scan_spectrum(build_star(3, 0.05), 5)
        edges = [("small3", "c", "t3", 0.05), ("small1", "c", "t1", 0.05),
                 ("long", "o", "c", 1.0), ("small2", "c", "t2", 0.05)]
        b = scan_spectrum(make_graph(edges), 5)
        for x, y in zip(a.lambdas, b.lambdas):
            assert abs(x - y) <= 1e-7 * max(1.0, abs(x))

    def test_ladder_reflection_parity(self, ladder3_spectrum):
        """Swapping the rails maps f2 to -f2 and f3 to f3."""
        eps = 1.0 / 32.0
        xs = np.linspace(0.0, 0.5, 9)
        for k, sigma in ((2, -1.0), (3, 1.0)):
            f = ladder3_spectrum.pair(k)
            rail = [f.value("e2", 0.5 - x) - sigma * f.value("e1", x)
                    for x in xs]
            assert np.max(np.abs(rail)) <= 1e-7
            for j in (1, 2, 3):
                rung = [f.value(f"rung{j}", eps - x) - sigma * f.value(f"rung{j}", x)
                        for x in np.linspace(0.0, eps, 5)]
                assert np.max(np.abs(rung)) <= 1e-7

    def test_ladder_eps_limit(self):
        """As the rungs shrink the bottom eigenvalue climbs toward pi^2."""
        gaps = []
        for eps in (0.05, 0.02):
            lam = scan_spectrum(build_ladder(3, eps), 1).lambdas[0]
            ref = oracles.ladder_lams(3, eps, 1)[0]
            assert abs(lam - ref) <= 1e-8 * ref
            gaps.append(np.pi ** 2 - lam)
        assert 0.0 < gaps[1] < gaps[0]


class TestScanRobustness:

    # graph seed exercising close eigenvalue pairs below one scan cell
    FROZEN_74007 = (0.6455582752, 1.4446289000, 2.5279929077, 4.9894614543,
                    5.7782564008, 6.7150953231, 10.5682415045, 13.0013402827)

    def test_close_pair_graph(self):
        _, spec = random_generic_graph(74007, 8)
        assert len(spec.lambdas) == 8
        for lam, ref in zip(spec.lambdas, self.FROZEN_74007):
            assert abs(lam - ref) <= 1e-6 * max(1.0, ref)

    def test_negative_eigenvalue_window(self):
        g = make_graph([("e1", "a", "b", 1.0, Constant(-30.0))])
        spec = scan_spectrum(g, 2)
        assert abs(spec.lam(1) - (np.pi ** 2 - 30.0)) <= 1e-9
        assert abs(spec.lam(2) - (4 * np.pi ** 2 - 30.0)) <= 1e-9

    def test_recover_rejects_non_root(self):
        with pytest.raises(NotARootError):
            eigenfunction_recover(build_interval(), 17.3)

    def test_rescan_is_deterministic(self):
        a = scan_spectrum(build_star(3, 1.0 / 32.0), 5)
        b = scan_spectrum(build_star(3, 1.0 / 32.0), 5)
        assert list(a.lambdas) == list(b.lambdas)
