"""Optimal fair taxes for polynomial latencies.

Each monomial ``x**d`` gets a perceived replacement ``T_d(x; v)``, a degree-d
polynomial whose coefficients depend on the LP marginals ``v`` of a resource
only through the aggregates ``beta_j = sum_i v_i w_i**(j+1)``. A resource with
latency ``sum_d b_d x**d`` is perceived as ``sum_d b_d T_d(x; v)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InfeasibleSolutionError, PreconditionError
from .game import MAX_DEGREE, PolyLatency, WeightedGame
from .lp import RelaxationSolution, check_feasibility
from .poisson import _check_vw, beta_vector, moments_from_beta, p_r


@dataclass(frozen=True)
class MonomialTax:
    """Coefficients ``alpha[k]`` of ``T_d(x) = sum_k alpha[k] x**k``."""

    degree: int
    alpha: tuple[float, ...]

    def __call__(self, x):
        acc = 0.0
        for a in reversed(self.alpha):
            acc = acc * x + a
        return acc


def _prepare(d: int, v, w, max_degree: int) -> np.ndarray:
    if d < 0 or d > max_degree:
        raise PreconditionError(f"degree must lie in [0, {max_degree}], got {d}")
    _check_vw(v, w)
    return beta_vector(v, w, max(d - 1, 0))


def alpha_coeffs(d: int, v: Sequence[float], w: Sequence[float], max_degree: int = MAX_DEGREE) -> MonomialTax:
    """Top-down recursion: ``alpha[d] = 1`` and
    ``alpha[j-1] = sum_{k=j..d} C(k, j) alpha[k] beta[k-j]``.
    """
    beta = _prepare(d, v, w, max_degree)
    alpha = [0.0] * (d + 1)
    alpha[d] = 1.0
    for j in range(d, 0, -1):
        alpha[j - 1] = math.fsum(math.comb(k, j) * alpha[k] * beta[k - j] for k in range(j, d + 1))
    return MonomialTax(d, tuple(alpha))


def alpha_tilde_coeffs(d: int, v: Sequence[float], w: Sequence[float], max_degree: int = MAX_DEGREE) -> MonomialTax:
    """Bottom-up recursion over degrees:
    ``a[p][p] = 1`` and ``a[q][j] = sum_{p=j..q-1} C(q, p+1) a[p][j] beta[q-1-p]``.
    """
    beta = _prepare(d, v, w, max_degree)
    table = [[1.0]]
    for q in range(1, d + 1):
        row = [
            math.fsum(math.comb(q, p + 1) * table[p][j] * beta[q - 1 - p] for p in range(j, q))
            for j in range(q)
        ]
        row.append(1.0)
        table.append(row)
    return MonomialTax(d, tuple(table[d]))


def recursion_residual(d: int, v: Sequence[float], w: Sequence[float], x: float) -> float:
    """``x T_d(x) - sum_i v_i w_i T_d(x + w_i) - (x**(d+1) - M_{d+1})``."""
    tax = alpha_coeffs(d, v, w)
    beta = beta_vector(v, w, d)
    moment = moments_from_beta(beta, d + 1)[d + 1]
    lhs = x * tax(x) - math.fsum(vi * wi * tax(x + wi) for vi, wi in zip(v, w))
    rhs = x ** (d + 1) - moment
    return lhs - rhs


@dataclass(frozen=True)
class TaxedLatency:
    """Perceived latency ``l(x) + tau(x)`` of one resource, as a polynomial."""

    resource: int
    coeffs: tuple[float, ...]
    base: PolyLatency
    v: tuple[float, ...]

    def __call__(self, x):
        acc = 0.0
        for b in reversed(self.coeffs):
            acc = acc * x + b
        return acc

    @property
    def tax_coeffs(self) -> tuple[float, ...]:
        base = self.base.coeffs + (0.0,) * (len(self.coeffs) - len(self.base.coeffs))
        return tuple(a - b for a, b in zip(self.coeffs, base))

    def tax(self, x):
        return self(x) - self.base(x)

    def to_dict(self) -> dict:
        return {
            "resource": self.resource,
            "taxed_coeffs": list(self.coeffs),
            "tax_coeffs": list(self.tax_coeffs),
            "v": list(self.v),
        }

    @classmethod
    def from_dict(cls, data: dict, base: PolyLatency) -> TaxedLatency:
        return cls(
            resource=int(data["resource"]),
            coeffs=tuple(float(c) for c in data["taxed_coeffs"]),
            base=base,
            v=tuple(float(c) for c in data.get("v", ())),
        )


def taxed_latency(latency: PolyLatency, v: Sequence[float], w: Sequence[float], resource: int = 0) -> TaxedLatency:
    """``sum_d b_d T_d(x; v)`` for one resource."""
    coeffs = np.zeros(latency.degree + 1)
    for d, b in enumerate(latency.coeffs):
        if b == 0.0:
            continue
        coeffs[: d + 1] += b * np.array(alpha_coeffs(d, v, w, latency.max_degree).alpha)
    return TaxedLatency(resource, tuple(float(c) for c in coeffs), latency, tuple(float(x) for x in v))


def build_taxed_latencies(game: WeightedGame, sol: RelaxationSolution) -> list[TaxedLatency]:
    report = check_feasibility(game, sol)
    if not report.passed:
        raise InfeasibleSolutionError(
            f"relaxation solution is infeasible (max violation {report.max_violation:.3e})"
        )
    # marginals can carry -1e-16 style noise from the simplex
    v = np.clip(sol.v, 0.0, None)
    return [
        taxed_latency(lat, v[r], game.weights, resource=r)
        for r, lat in enumerate(game.resources)
    ]


@dataclass(frozen=True)
class ResidualReport:
    max_residual: float
    worst_resource: int
    worst_x: float

    @property
    def passed(self) -> bool:
        return self.max_residual <= 1e-7


def full_recursion_residual(
    game: WeightedGame,
    taxed: Sequence[TaxedLatency],
    sol: RelaxationSolution,
    x_grid: Sequence[float] | None = None,
) -> ResidualReport:
    """Worst absolute violation of
    ``x lbar(x) - sum_i w_i v_i lbar(x + w_i) = c(x) - p_r(v)`` over a grid.

    The default grid is ``0, delta, ..., 2 * total_weight``.
    """
    if x_grid is None:
        steps = int(round(2 * game.total_weight / game.delta))
        x_grid = [k * game.delta for k in range(steps + 1)]
    w = game.weights
    worst, worst_r, worst_x = 0.0, -1, 0.0
    for r, lat in enumerate(game.resources):
        lbar = taxed[r]
        v = np.clip(sol.v[r], 0.0, None)
        expected = p_r(v, w, lat) if not lat.is_zero else 0.0
        for x in x_grid:
            lhs = x * lbar(x) - math.fsum(wi * vi * lbar(x + wi) for wi, vi in zip(w, v))
            res = abs(lhs - (lat.cost(x) - expected))
            if res > worst:
                worst, worst_r, worst_x = res, r, float(x)
    return ResidualReport(worst, worst_r, worst_x)
