"""Bound certificates, extremal designs, and the model-family searches."""
from __future__ import annotations

import numpy as np
import pytest

import oracles
from qgnodal import (
    build_interval,
    build_ladder,
    build_star,
    design_saturating_combo,
    find_b,
    generic_perturbed_ladder,
    generic_perturbed_star,
    genericity_check,
    scan_spectrum,
    select_eps,
    theorem_bounds,
    to_json,
    topology,
    verify_bounds,
)
from qgnodal.combolab import random_generic_graph, run_bound_trials
from qgnodal.nodal import FunctionOnGraph, count_zeros


class TestTheoremBounds:

    def test_single_eigenfunction_on_tree(self):
        # M = 1 on a tree pins the count exactly at k - 1
        topo = topology(build_interval())
        assert theorem_bounds(topo, 5, 5, 1) == (4, 4)

    def test_single_eigenfunction_with_cycles(self):
        topo = topology(build_ladder(4, 0.1))
        lower, upper = theorem_bounds(topo, 6, 6, 1)
        assert lower == 5
        assert upper == 5 + topo.beta

    def test_ladder_two_term_combo(self):
        """The documented two-term window on the three-rung ladder."""
        topo = topology(build_ladder(3, 1.0 / 32.0))
        assert topo.beta == 2 and topo.degree_sum_excess == 4
        assert theorem_bounds(topo, 2, 3, 2) == (-3, 8)

    def test_excess_controls_width(self):
        topo = topology(build_star(4, 0.1))
        lower, upper = theorem_bounds(topo, 2, 7, 3)
        assert lower == 2 - 1 - 2 * topo.degree_sum_excess
        assert upper == 7 - 1 + 0 + 2 * topo.degree_sum_excess


class TestVerifyBounds:

    def test_interval_combo(self):
        cert = verify_bounds(build_interval(), [2, 5], [1.0, 0.7])
        assert (cert.lower, cert.upper) == (1, 4)
        assert cert.lower <= cert.measured <= cert.upper
        assert cert.passed and cert.generic
        assert cert.scope == "proven"

    def test_ladder_combo(self):
        cert = verify_bounds(build_ladder(3, 1.0 / 32.0), [2, 3], [1.0, -0.5])
        assert (cert.lower, cert.upper) == (-3, 8)
        assert cert.passed

    def test_non_generic_marked_inapplicable(self):
        # equilateral star: double eigenvalue inside the window
        cert = verify_bounds(build_star(2, 1.0), [1, 4], [1.0, 1.0])
        assert not cert.generic
        assert cert.scope == "inapplicable"
        assert cert.passed is None


class TestSelectEps:

    def test_single_eigenvalue_takes_first_dyadic(self):
        res = select_eps(3, 1)
        assert res.eps == 0.5 and res.j == 1
        assert res.eps * np.sqrt(res.lam_max) < np.pi / 2

    def test_result_satisfies_contract(self):
        res = select_eps(3, 5)
        assert res.eps * np.sqrt(res.lam_max) < np.pi / 2
        assert res.trials[-1][0] == res.j
        # every rejected level is recorded with its failure
        assert all(len(t) == 5 for t in res.trials)

    def test_documented_level_passes_by_oracle(self):
        """eps = 2^-5 passes the short-edge condition for s = 3, five modes."""
        res = select_eps(3, 5)
        assert res.eps >= 2.0 ** -5
        lams = oracles.star_lams(3, 2.0 ** -5, 5)
        assert 2.0 ** -5 * np.sqrt(lams[-1]) < np.pi / 2
        gaps = np.diff([0.0] + lams)
        assert np.all(gaps > 1e-6)

    def test_growing_count_shrinks_eps(self):
        eps = [select_eps(3, m).eps for m in (1, 2, 3)]
        assert eps[0] >= eps[1] >= eps[2]


@pytest.fixture(scope="module")
def star_ensemble():
    return generic_perturbed_star(3, 0.0625, 3)


@pytest.fixture(scope="module")
def ladder_ensemble():
    return generic_perturbed_ladder(2)


class TestSaturatingDesign:

    def test_targets_hit(self, star_ensemble):
        """L-th design on the s-star reaches (L - 1) s zeros exactly."""
        for L in (1, 2, 3):
            res = design_saturating_combo(star_ensemble.graph, L,
                                          spectrum=star_ensemble.spectrum)
            assert res.target == (L - 1) * 3
            assert res.measured == res.target
            assert res.achieved

    def test_upper_bound_is_saturated(self, star_ensemble):
        res = design_saturating_combo(star_ensemble.graph, 2,
                                      spectrum=star_ensemble.spectrum)
        topo = topology(star_ensemble.graph)
        _, upper = theorem_bounds(topo, res.indices[0], res.indices[-1],
                                  len(res.indices))
        assert res.measured == upper

    def test_uses_leading_eigenfunctions(self, star_ensemble):
        res = design_saturating_combo(star_ensemble.graph, 3,
                                      spectrum=star_ensemble.spectrum)
        assert res.indices == (1, 2, 3)
        assert res.designated_count == 2

    def test_ensemble_is_generic(self, star_ensemble):
        assert star_ensemble.genericity.generic
        assert star_ensemble.delta == 0.0


class TestFindB:

    def test_counts_on_model_family(self, ladder_ensemble):
        fb = find_b(ladder_ensemble.graph, spectrum=ladder_ensemble.spectrum)
        assert fb.n_f2 == 2
        assert fb.n_f3 == 2
        assert fb.verified

    def test_found_combination_has_one_zero(self, ladder_ensemble):
        fb = find_b(ladder_ensemble.graph, spectrum=ladder_ensemble.spectrum)
        fn = FunctionOnGraph(ladder_ensemble.spectrum, [2, 3], [1.0, fb.b])
        assert count_zeros(fn).total == 1

    def test_normalized_coefficient_positive(self, ladder_ensemble):
        fb = find_b(ladder_ensemble.graph, spectrum=ladder_ensemble.spectrum)
        assert fb.c_normalized > 0
        # the sweep table brackets the window where the count drops to one
        counts = [c for _, c in fb.table]
        assert 1 in counts and 2 in counts


class TestRandomTrials:

    def test_generic_graph_deterministic(self):
        g1, s1 = random_generic_graph(123, 6)
        g2, s2 = random_generic_graph(123, 6)
        assert to_json(g1) == to_json(g2)
        assert list(s1.lambdas) == list(s2.lambdas)
        assert genericity_check(g1, 6, spectrum=s1).generic

    def test_trials_pass_and_thread_invariant(self):
        a = run_bound_trials(20, seed=3)
        b = run_bound_trials(20, seed=3, threads=2)
        assert len(a) == 20
        assert all(t.passed for t in a)
        assert [t.measured for t in a] == [t.measured for t in b]

    def test_trial_certificates_in_band(self):
        for t in run_bound_trials(10, seed=5):
            assert t.lower <= t.measured <= t.upper
            assert t.m_terms <= 4
            assert t.kM <= 8
