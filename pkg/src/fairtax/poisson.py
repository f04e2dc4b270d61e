"""Exact Poisson-mixture moments, Bell numbers and the approximation factor.

Every expectation of a polynomial of a weighted Poisson sum is computed from
exact moments, so nothing here truncates a distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import PreconditionError, UndefinedFactorError
from .game import MAX_DEGREE, PolyLatency

BELL_EXACT_MAX = 25


def _check_vw(v: Sequence[float], w: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape != w.shape or v.ndim != 1:
        raise PreconditionError(f"v and w must be 1-d of equal length, got {v.shape}, {w.shape}")
    if np.any(v < 0) or np.any(w < 0):
        raise PreconditionError("v and w must be non-negative")
    return v, w


def beta_vector(v: Sequence[float], w: Sequence[float], j_max: int) -> np.ndarray:
    """``beta[j] = sum_i v_i * w_i**(j+1)`` for ``j = 0..j_max``."""
    v, w = _check_vw(v, w)
    out = np.empty(j_max + 1)
    for j in range(j_max + 1):
        out[j] = math.fsum(v * w ** (j + 1))
    return out


def moments_from_beta(beta: Sequence[float], d_max: int) -> np.ndarray:
    """Moments ``M_0..M_dmax`` from the binomial recursion on ``beta``."""
    if d_max > len(beta):
        raise PreconditionError(f"need beta_0..beta_{d_max - 1}, got {len(beta)} entries")
    m = [1.0]
    for n in range(d_max):
        m.append(math.fsum(math.comb(n, k) * beta[n - k] * m[k] for k in range(n + 1)))
    return np.array(m)


def poisson_mixture_moments(
    v: Sequence[float], w: Sequence[float], d_max: int, max_degree: int = MAX_DEGREE
) -> np.ndarray:
    """Raw moments ``E[(sum_i w_i P_i)**d]``, ``d = 0..d_max``, with ``P_i ~ Poi(v_i)``."""
    if d_max < 0:
        raise PreconditionError("d_max must be >= 0")
    if d_max > max_degree + 1:
        raise PreconditionError(f"d_max={d_max} exceeds max_degree+1={max_degree + 1}")
    beta = beta_vector(v, w, max(d_max - 1, 0))
    return moments_from_beta(beta, d_max)


def bell_numbers(n_max: int) -> list[int]:
    """Exact Bell numbers ``B_0..B_nmax``."""
    if n_max < 0:
        raise PreconditionError("n_max must be >= 0")
    if n_max > BELL_EXACT_MAX:
        raise OverflowError(
            f"n_max={n_max} exceeds the exact 64-bit range (max {BELL_EXACT_MAX})"
        )
    bell = [1]
    for n in range(n_max):
        bell.append(sum(math.comb(n, k) * bell[k] for k in range(n + 1)))
    return bell


def p_r(v_r: Sequence[float], w: Sequence[float], latency: PolyLatency) -> float:
    """Expected resource cost ``E[c(sum_i w_i P_i)]`` with ``P_i ~ Poi(v_r[i])``."""
    moments = poisson_mixture_moments(v_r, w, latency.degree + 1, latency.max_degree)
    return math.fsum(b * moments[d + 1] for d, b in enumerate(latency.coeffs))


def rho_factor(latency: PolyLatency) -> int:
    """Class-level factor ``B_{D+1}`` for polynomials of top degree ``D``."""
    if latency.is_zero:
        raise UndefinedFactorError("factor is undefined for the zero latency")
    return bell_numbers(latency.degree + 1)[-1]


def rho_ratio_at(latency: PolyLatency, t: float) -> float:
    """``E[tP l(tP)] / (t l(t))`` for ``P ~ Poi(1)``, evaluated from Bell moments."""
    if not t > 0:
        raise PreconditionError(f"t must be > 0, got {t}")
    if latency.is_zero:
        raise UndefinedFactorError("ratio is undefined for the zero latency")
    bell = bell_numbers(latency.degree + 1)
    # weights b_d t^(d+1), normalised in log space so tiny or huge t cannot underflow
    logs = {d: math.log(b) + (d + 1) * math.log(t) for d, b in enumerate(latency.coeffs) if b > 0}
    top = max(logs.values())
    weights = {d: math.exp(lg - top) for d, lg in logs.items()}
    num = math.fsum(u * bell[d + 1] for d, u in weights.items())
    return num / math.fsum(weights.values())


def rho_grid_search(latency: PolyLatency, t_grid: Sequence[float] | None = None) -> tuple[float, float]:
    """Diagnostic sup of the ratio over a grid; returns ``(best_t, best_ratio)``.

    For mixed polynomials the supremum is only approached as ``t -> inf``, so
    the grid maximum sits at the right end and stays below ``rho_factor``.
    """
    if t_grid is None:
        t_grid = np.logspace(-3, 6, 400)
    best_t, best = None, -math.inf
    for t in t_grid:
        r = rho_ratio_at(latency, float(t))
        if r > best:
            best_t, best = float(t), r
    # refine around the maximiser by golden-section on log t
    lo, hi = math.log(best_t) - 0.1, math.log(best_t) + 0.1
    g = (math.sqrt(5) - 1) / 2
    for _ in range(60):
        a = hi - g * (hi - lo)
        b = lo + g * (hi - lo)
        if rho_ratio_at(latency, math.exp(a)) >= rho_ratio_at(latency, math.exp(b)):
            hi = b
        else:
            lo = a
    t_star = math.exp((lo + hi) / 2)
    r_star = rho_ratio_at(latency, t_star)
    if r_star > best:
        best_t, best = t_star, r_star
    return best_t, best


@dataclass(frozen=True)
class ConvexOrderReport:
    x: int
    degree: int
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.slack >= -1e-12 * max(1.0, abs(self.rhs))


def convex_order_check(x: int, d: int, max_degree: int = MAX_DEGREE) -> ConvexOrderReport:
    """Compare ``E[Poi(x)**(d+1)]`` with ``E[(x * Poi(1))**(d+1)]``."""
    if x < 1 or int(x) != x:
        raise PreconditionError(f"x must be a positive integer, got {x}")
    if d < 0 or d > max_degree:
        raise PreconditionError(f"degree must lie in [0, {max_degree}], got {d}")
    lhs = poisson_mixture_moments([float(x)], [1.0], d + 1, max_degree)[d + 1]
    rhs = poisson_mixture_moments([1.0], [float(x)], d + 1, max_degree)[d + 1]
    return ConvexOrderReport(int(x), d, float(lhs), float(rhs))


@dataclass(frozen=True)
class MixtureSampler:
    """Sampler for ``P(1) * W_S`` where exactly one subset S is active with prob ``z_S``.

    Only used for Monte-Carlo checks of the convex-order chain.
    """

    subsets: tuple[tuple[int, ...], ...]
    probabilities: tuple[float, ...]

    def __post_init__(self) -> None:
        p = np.asarray(self.probabilities, dtype=float)
        if len(self.subsets) != len(p):
            raise PreconditionError("one probability per subset required")
        if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
            raise PreconditionError("probabilities must be >= 0 and sum to 1")

    def subset_weights(self, w: Sequence[float]) -> np.ndarray:
        return np.array([sum(w[i] for i in s) for s in self.subsets])

    def sample_scaled_poisson(self, w: Sequence[float], n: int, rng: np.random.Generator) -> np.ndarray:
        """Draws of ``P(1) * sum_S W_S chi_S``."""
        p = np.clip(np.asarray(self.probabilities, dtype=float), 0, None)
        idx = rng.choice(len(p), size=n, p=p / p.sum())
        return rng.poisson(1.0, size=n) * self.subset_weights(w)[idx]

    def sample_subset_poisson(self, w: Sequence[float], n: int, rng: np.random.Generator) -> np.ndarray:
        """Draws of ``sum_S W_S P(z_S)`` with independent Poisson counts."""
        p = np.clip(np.asarray(self.probabilities, dtype=float), 0, None)
        counts = rng.poisson(p, size=(n, len(p)))
        return counts @ self.subset_weights(w)
