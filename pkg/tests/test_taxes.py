import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairtax.errors import InfeasibleSolutionError, PreconditionError
from fairtax.game import PolyLatency, WeightedGame
from fairtax.lp import solve_relaxation
from fairtax.poisson import beta_vector, p_r, poisson_mixture_moments
from fairtax.taxes import (
    TaxedLatency,
    alpha_coeffs,
    alpha_tilde_coeffs,
    build_taxed_latencies,
    full_recursion_residual,
    recursion_residual,
    taxed_latency,
)
from helpers import random_game

LIN = PolyLatency((0.0, 1.0))

vw_pairs = st.lists(st.tuples(st.floats(0, 2), st.floats(0, 3)), min_size=1, max_size=4)


def rel_close(a, b, rel):
    return abs(a - b) <= rel * max(abs(a), abs(b), 1.0)


class TestAlpha:
    def test_linear_closed_form(self):
        v, w = [0.3, 0.6], [2.0, 1.5]
        assert alpha_coeffs(1, v, w).alpha == pytest.approx((0.3 * 2 + 0.6 * 1.5, 1.0))

    def test_quadratic_closed_form(self):
        v, w = [0.3, 0.6, 1.0], [2.0, 1.5, 0.5]
        s1 = sum(a * b for a, b in zip(v, w))
        s2 = sum(a * b * b for a, b in zip(v, w))
        assert alpha_coeffs(2, v, w).alpha == pytest.approx((s1 * s1 + 2 * s2, s1, 1.0))

    @pytest.mark.parametrize("d", range(9))
    def test_zero_v_is_monomial(self, d):
        tax = alpha_coeffs(d, [0.0, 0.0], [1.0, 3.0])
        assert tax.alpha == (0.0,) * d + (1.0,)
        assert alpha_tilde_coeffs(d, [0.0, 0.0], [1.0, 3.0]).alpha == tax.alpha

    def test_tilde_hand_example(self):
        assert alpha_tilde_coeffs(1, [0.5], [2.0]).alpha == (1.0, 1.0)
        assert alpha_coeffs(1, [0.5], [2.0]).alpha == (1.0, 1.0)

    def test_errors(self):
        with pytest.raises(PreconditionError):
            alpha_coeffs(2, [1.0], [1.0, 2.0])
        with pytest.raises(PreconditionError):
            alpha_coeffs(2, [-1.0], [1.0])
        with pytest.raises(PreconditionError):
            alpha_coeffs(9, [1.0], [1.0])

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 6), vw_pairs)
    def test_two_recursions_agree(self, d, pairs):
        v, w = zip(*pairs)
        a = alpha_coeffs(d, v, w).alpha
        b = alpha_tilde_coeffs(d, v, w).alpha
        assert all(rel_close(x, y, 1e-10) for x, y in zip(a, b))
        assert a[d] == 1.0
        assert all(x >= 0 for x in a)

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 6), vw_pairs)
    def test_zero_order_terms_cancel(self, d, pairs):
        v, w = zip(*pairs)
        alpha = alpha_coeffs(d, v, w).alpha
        beta = beta_vector(v, w, d)
        moment = poisson_mixture_moments(v, w, d + 1)[d + 1]
        assert rel_close(math.fsum(a * b for a, b in zip(alpha, beta)), moment, 1e-9)


class TestResidual:
    def test_hand_example(self):
        assert recursion_residual(1, [0.5], [2.0], 3.0) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("d", range(7))
    def test_zero_v(self, d):
        # Horner versus pow: agreement to rounding only
        assert abs(recursion_residual(d, [0.0], [2.0], 1.7)) <= 1e-14 * 1.7 ** (d + 1)
        assert recursion_residual(d, [0.0], [2.0], 2.0) == 0.0

    def test_random_sweep(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            d = int(rng.integers(0, 6))
            n = int(rng.integers(1, 5))
            v = rng.uniform(0, 1, n)
            w = rng.uniform(0.1, 3, n)
            x = float(rng.uniform(0, 10))
            tax = alpha_coeffs(d, v, w)
            scale = max(x * tax(x), x ** (d + 1), 1.0)
            assert abs(recursion_residual(d, v, w, x)) <= 1e-8 * scale


class TestTaxedLatency:
    def test_single_player_linear(self):
        lbar = taxed_latency(LIN, [1.0], [1.0])
        assert lbar.coeffs == (1.0, 1.0)
        assert lbar.tax_coeffs == (1.0, 0.0)
        assert lbar(2.0) == 3.0

    def test_zero_v_keeps_latency(self):
        lat = PolyLatency((1.0, 2.0, 0.0, 4.0))
        lbar = taxed_latency(lat, [0.0, 0.0], [1.0, 2.0])
        assert lbar.coeffs == lat.coeffs
        assert lbar.tax(5.0) == 0.0

    def test_json_round_trip(self):
        lat = PolyLatency((1.0, 0.0, 3.0))
        lbar = taxed_latency(lat, [0.2, 0.7], [1.0, 2.0], resource=4)
        assert TaxedLatency.from_dict(lbar.to_dict(), lat) == lbar

    @settings(max_examples=80, deadline=None)
    @given(
        st.lists(st.integers(0, 4), min_size=1, max_size=5).filter(lambda c: c[-1] > 0),
        st.lists(st.tuples(st.floats(0, 1), st.sampled_from([0.5, 1.0, 1.5, 2.0])), min_size=1, max_size=4),
    )
    def test_monotone_and_nonnegative_tax(self, coeffs, pairs):
        lat = PolyLatency(tuple(float(c) for c in coeffs))
        v, w = zip(*pairs)
        lbar = taxed_latency(lat, v, w)
        grid = np.arange(0, 2 * sum(w) + 1e-9, 0.5)
        vals = [lbar(x) for x in grid]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        assert all(lbar.tax(x) >= -1e-12 for x in grid)
        assert all(c >= 0 for c in lbar.coeffs)


def split_game():
    return WeightedGame((1.0, 1.0), (LIN, LIN), (((0,), (1,)), ((0,), (1,))))


class TestBuild:
    def test_split_instance(self):
        g = split_game()
        sol = solve_relaxation(g)
        taxed = build_taxed_latencies(g, sol)
        for r, lbar in enumerate(taxed):
            s = float(np.sum(sol.v[r]))
            assert lbar.coeffs == pytest.approx((s, 1.0))
            for x in (0.0, 1.0, 2.0):
                assert lbar.tax(x) >= 0.0
        assert full_recursion_residual(g, taxed, sol).passed

    def test_unused_resource_untaxed(self):
        quad = PolyLatency((0.0, 0.0, 1.0))
        g = WeightedGame((1.0,), (LIN, quad), (((0,),),))
        sol = solve_relaxation(g)
        taxed = build_taxed_latencies(g, sol)
        assert taxed[1].coeffs == quad.coeffs

    def test_rejects_infeasible(self):
        g = split_game()
        sol = solve_relaxation(g)
        sol.y[0] = sol.y[0] * 0.5
        with pytest.raises(InfeasibleSolutionError):
            build_taxed_latencies(g, sol)

    def test_zero_marginals_residual(self):
        g = WeightedGame((1.0,), (LIN, PolyLatency((2.0, 1.0))), (((0,),),))
        sol = solve_relaxation(g)
        taxed = build_taxed_latencies(g, sol)
        assert taxed[1].coeffs == (2.0, 1.0)
        assert full_recursion_residual(g, taxed, sol).max_residual == 0.0

    def test_residual_at_zero_by_hand(self):
        g = split_game()
        sol = solve_relaxation(g)
        taxed = build_taxed_latencies(g, sol)
        for r in range(2):
            v = sol.v[r]
            lhs = -math.fsum(1.0 * vi * taxed[r](1.0) for vi in v)
            assert lhs == pytest.approx(-p_r(v, g.weights, LIN), abs=1e-12)

    @pytest.mark.parametrize("seed", range(40))
    def test_random_games_residual(self, seed):
        rng = np.random.default_rng(900 + seed)
        g = random_game(rng, delta=[1.0, 0.5, 0.25][seed % 3])
        sol = solve_relaxation(g)
        taxed = build_taxed_latencies(g, sol)
        rep = full_recursion_residual(g, taxed, sol)
        assert rep.passed, rep

    @pytest.mark.parametrize("seed", range(20))
    def test_fractional_marginals(self, seed):
        # marginals drawn directly, not from a solver, so beta is far from integral
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 5))
        w = rng.integers(1, 5, n) * 0.5
        v = rng.uniform(0, 1, n)
        lat = PolyLatency(tuple(rng.integers(0, 4, int(rng.integers(1, 5))).tolist()) + (1.0,))
        lbar = taxed_latency(lat, v, w)
        expected = p_r(v, w, lat)
        for x in np.arange(0, 2 * w.sum() + 1e-9, 0.5):
            lhs = x * lbar(x) - math.fsum(wi * vi * lbar(x + wi) for wi, vi in zip(w, v))
            rhs = lat.cost(x) - expected
            assert abs(lhs - rhs) <= 1e-9 * max(abs(lhs), abs(rhs), 1.0)
