"""Dense revised simplex for ``min c.x  s.t.  A x = b, x >= 0``.

Bland's rule picks both the entering and the leaving variable, which rules out
cycling on the highly degenerate subset LPs this package builds. Phase 1 starts
from an all-artificial basis. Artificial columns are never allowed back in
during phase 2; an artificial that cannot be pivoted out marks a redundant row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import InfeasibleLPError, LPError, UnboundedLPError

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    duals: np.ndarray
    basis: list[int]
    iterations: int


class SimplexTableau:
    """Constraint data plus the current basis.

    Column indices ``>= n`` denote artificial variables, one per row.
    """

    def __init__(self, A, b, c, tol: float = OPT_TOL, max_iter: int = 100_000):
        A = np.array(A, dtype=float)
        b = np.array(b, dtype=float)
        c = np.array(c, dtype=float)
        m, n = A.shape
        if b.shape != (m,) or c.shape != (n,):
            raise LPError(f"shape mismatch: A {A.shape}, b {b.shape}, c {c.shape}")
        self.sign = np.where(b < 0, -1.0, 1.0)
        self.A = A * self.sign[:, None]
        self.b = b * self.sign
        self.c = c
        self.m, self.n = m, n
        self.tol = tol
        self.max_iter = max_iter
        self.iterations = 0
        self.basis: list[int] = list(range(n, n + m))

    def column(self, j: int) -> np.ndarray:
        if j < self.n:
            return self.A[:, j]
        e = np.zeros(self.m)
        e[j - self.n] = 1.0
        return e

    def basis_matrix(self) -> np.ndarray:
        B = np.zeros((self.m, self.m))
        for k, j in enumerate(self.basis):
            B[:, k] = self.column(j)
        return B

    def _iterate(self, cost: np.ndarray, allow_artificial: bool) -> None:
        """Run Bland pivots until optimal for ``cost`` (length n + m)."""
        n, m = self.n, self.m
        n_enter = n + m if allow_artificial else n
        while True:
            if self.iterations >= self.max_iter:
                raise LPError(f"simplex exceeded {self.max_iter} iterations")
            lu = lu_factor(self.basis_matrix())
            x_b = lu_solve(lu, self.b)
            y = lu_solve(lu, cost[self.basis], trans=1)
            in_basis = np.zeros(n + m, dtype=bool)
            in_basis[self.basis] = True
            red = cost[:n] - self.A.T @ y
            entering = -1
            for j in range(n_enter):
                if in_basis[j]:
                    continue
                d = red[j] if j < n else cost[j] - y[j - n]
                if d < -self.tol:
                    entering = j
                    break
            if entering < 0:
                return
            u = lu_solve(lu, self.column(entering))
            best_k, best_ratio = -1, np.inf
            for k in range(m):
                if u[k] > PIVOT_TOL:
                    ratio = max(x_b[k], 0.0) / u[k]
                    if ratio < best_ratio - 1e-12 or (
                        ratio <= best_ratio + 1e-12 and self.basis[k] < self.basis[best_k]
                    ):
                        best_k, best_ratio = k, ratio
            if best_k < 0:
                raise UnboundedLPError("objective is unbounded below")
            self.basis[best_k] = entering
            self.iterations += 1

    def _drive_out_artificials(self) -> None:
        n = self.n
        for k in range(self.m):
            if self.basis[k] < n:
                continue
            lu = lu_factor(self.basis_matrix())
            # row k of B^-1 A
            e = np.zeros(self.m)
            e[k] = 1.0
            row = lu_solve(lu, e, trans=1) @ self.A
            in_basis = set(self.basis)
            for j in range(n):
                if j not in in_basis and abs(row[j]) > 1e-7:
                    self.basis[k] = j
                    self.iterations += 1
                    break

    def solve(self, basis: list[int] | None = None) -> LPResult:
        n, m = self.n, self.m
        warm = False
        if basis is not None and len(basis) == m:
            self.basis = list(basis)
            try:
                x_b = np.linalg.solve(self.basis_matrix(), self.b)
                warm = bool(np.all(x_b >= -FEAS_TOL))
                if warm:
                    for k, j in enumerate(self.basis):
                        if j >= n and x_b[k] > FEAS_TOL:
                            warm = False
            except np.linalg.LinAlgError:
                warm = False
        if not warm:
            self.basis = list(range(n, n + m))
            phase1 = np.concatenate([np.zeros(n), np.ones(m)])
            self._iterate(phase1, allow_artificial=True)
            x_b = lu_solve(lu_factor(self.basis_matrix()), self.b)
            infeas = sum(x_b[k] for k, j in enumerate(self.basis) if j >= n)
            if infeas > FEAS_TOL * max(1.0, float(np.abs(self.b).max(initial=0.0))) * m:
                raise InfeasibleLPError(f"phase 1 ended with infeasibility {infeas:.3e}")
            self._drive_out_artificials()
        phase2 = np.concatenate([self.c, np.zeros(m)])
        self._iterate(phase2, allow_artificial=False)
        lu = lu_factor(self.basis_matrix())
        x_b = lu_solve(lu, self.b)
        y = lu_solve(lu, phase2[self.basis], trans=1)
        x = np.zeros(n)
        for k, j in enumerate(self.basis):
            if j < n:
                x[j] = x_b[k]
        return LPResult(
            x=x,
            objective=float(self.c @ x),
            duals=y * self.sign,
            basis=list(self.basis),
            iterations=self.iterations,
        )


def solve_lp(A, b, c, basis=None, tol: float = OPT_TOL) -> LPResult:
    return SimplexTableau(A, b, c, tol=tol).solve(basis)
