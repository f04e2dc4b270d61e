import numpy as np
import pytest
from scipy.optimize import linprog

from fairtax.errors import InfeasibleLPError, UnboundedLPError
from fairtax.simplex import SimplexTableau, solve_lp


def random_feasible_lp(rng, m, n):
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    x0 = rng.uniform(0, 2, size=n) * (rng.random(n) < 0.6)
    b = A @ x0
    c = rng.uniform(0.1, 3, size=n)  # positive costs keep it bounded
    return A, b, c


class TestAgainstHighs:
    @pytest.mark.parametrize("seed", range(25))
    def test_random(self, seed):
        rng = np.random.default_rng(seed)
        m, n = int(rng.integers(1, 7)), int(rng.integers(2, 12))
        A, b, c = random_feasible_lp(rng, m, n)
        ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
        res = solve_lp(A, b, c)
        assert res.objective == pytest.approx(ref.fun, abs=1e-7)
        assert np.allclose(A @ res.x, b, atol=1e-8)
        assert np.all(res.x >= -1e-10)

    @pytest.mark.parametrize("seed", range(15))
    def test_duals_certify_optimality(self, seed):
        rng = np.random.default_rng(1000 + seed)
        A, b, c = random_feasible_lp(rng, 4, 9)
        res = solve_lp(A, b, c)
        reduced = c - A.T @ res.duals
        assert np.all(reduced >= -1e-8)
        assert float(b @ res.duals) == pytest.approx(res.objective, abs=1e-7)
        # complementary slackness
        assert np.all(np.abs(reduced * res.x) <= 1e-8)


class TestEdgeCases:
    def test_redundant_rows(self):
        A = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0], [0.0, 1.0, 1.0]])
        b = np.array([1.0, 2.0, 1.0])
        c = np.array([1.0, 2.0, 0.5])
        res = solve_lp(A, b, c)
        assert res.objective == pytest.approx(1.5)
        assert np.allclose(A @ res.x, b)

    def test_negative_rhs(self):
        res = solve_lp([[-1.0, -1.0]], [-2.0], [1.0, 3.0])
        assert res.objective == pytest.approx(2.0)
        assert res.duals[0] == pytest.approx(-1.0)

    def test_infeasible(self):
        with pytest.raises(InfeasibleLPError):
            solve_lp([[1.0, 1.0], [1.0, 1.0]], [1.0, 2.0], [1.0, 1.0])

    def test_unbounded(self):
        with pytest.raises(UnboundedLPError):
            solve_lp([[1.0, -1.0]], [0.0], [-1.0, 0.0])

    def test_degenerate_assignment(self):
        # 3x3 assignment polytope, highly degenerate
        n = 3
        A, b = [], []
        for i in range(n):
            row = np.zeros(n * n); row[i * n:(i + 1) * n] = 1; A.append(row); b.append(1)
        for j in range(n):
            row = np.zeros(n * n); row[j::n] = 1; A.append(row); b.append(1)
        c = np.array([4, 1, 3, 2, 0, 5, 3, 2, 2], dtype=float)
        res = solve_lp(np.array(A), np.array(b, dtype=float), c)
        assert res.objective == pytest.approx(5.0)

    def test_warm_start_reuses_basis(self):
        rng = np.random.default_rng(3)
        A, b, c = random_feasible_lp(rng, 4, 10)
        cold = solve_lp(A, b, c)
        warm = SimplexTableau(A, b, c).solve(cold.basis)
        assert warm.objective == pytest.approx(cold.objective, abs=1e-10)
        assert warm.iterations == 0

    def test_bad_warm_start_falls_back(self):
        rng = np.random.default_rng(4)
        A, b, c = random_feasible_lp(rng, 3, 8)
        cold = solve_lp(A, b, c)
        res = SimplexTableau(A, b, c).solve([0, 0, 0])
        assert res.objective == pytest.approx(cold.objective, abs=1e-9)
