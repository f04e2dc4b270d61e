"""Symmetric singleton instances where every fair profile is costly.

``m`` identical players each pick one of ``m`` identical resources. Any
symmetric mixed profile ``y`` puts ``Bin(m, y_r)`` players on resource r; the
uniform profile is the cheapest, and its cost relative to the perfect
matching climbs towards the Poisson factor as ``m`` grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import binom

from .errors import PreconditionError
from .game import PolyLatency, WeightedGame
from .poisson import rho_factor


@dataclass(frozen=True)
class SymmetricInstance:
    m: int
    w: float
    latency: PolyLatency
    game: WeightedGame

    @property
    def opt_cost(self) -> float:
        """Cost of the matching where every player has its own resource."""
        return self.m * self.latency.cost(self.w)


def make_symmetric_instance(latency: PolyLatency, m: int, w: float = 1.0) -> SymmetricInstance:
    # the top monomial's ratio does not depend on t, so w = 1 is a maximiser
    if m < 1:
        raise PreconditionError(f"m must be >= 1, got {m}")
    actions = tuple((r,) for r in range(m))
    game = WeightedGame(
        weights=(float(w),) * m,
        resources=(latency,) * m,
        strategies=(actions,) * m,
        delta=float(w),
    )
    return SymmetricInstance(m, float(w), latency, game)


def _expected_cost(latency: PolyLatency, w: float, m: int, p: float) -> float:
    if p <= 0.0:
        return 0.0
    k = np.arange(m + 1)
    pmf = binom.pmf(k, m, min(p, 1.0))
    return math.fsum(pmf * latency.cost(w * k.astype(float)))


def symmetric_mixed_cost(instance: SymmetricInstance, y: Sequence[float]) -> float:
    """Exact ``E[sum_r c(w X_r)]`` with ``X_r ~ Bin(m, y_r)``."""
    y = np.asarray(y, dtype=float)
    if y.shape != (instance.m,):
        raise PreconditionError(f"y must have length {instance.m}")
    if np.any(y < -1e-12) or abs(y.sum() - 1.0) > 1e-9:
        raise PreconditionError("y must be a probability vector")
    y = np.clip(y, 0.0, 1.0)
    # equal probabilities share one expectation
    cache: dict[float, float] = {}
    total = []
    for p in y:
        p = float(p)
        if p not in cache:
            cache[p] = _expected_cost(instance.latency, instance.w, instance.m, p)
        total.append(cache[p])
    return math.fsum(total)


def uniform_ratio(latency: PolyLatency, m: int, w: float = 1.0) -> float:
    # same value as building the instance, without materialising m*m actions
    if m < 1:
        raise PreconditionError(f"m must be >= 1, got {m}")
    return _expected_cost(latency, w, m, 1.0 / m) / latency.cost(w)


def uniform_ratio_curve(latency: PolyLatency, m_list: Iterable[int]) -> list[tuple[int, float]]:
    return [(int(m), uniform_ratio(latency, int(m))) for m in m_list]


@dataclass(frozen=True)
class MinimalityReport:
    m: int
    trials: int
    uniform_cost: float
    min_sampled_cost: float
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def uniform_is_minimizer_check(
    instance: SymmetricInstance, trials: int = 200, seed: int = 0
) -> MinimalityReport:
    """Sample Dirichlet profiles and count those cheaper than uniform."""
    if instance.m > 20:
        raise PreconditionError("minimality sweep is limited to m <= 20")
    rng = np.random.default_rng(seed)
    uniform = symmetric_mixed_cost(instance, np.full(instance.m, 1.0 / instance.m))
    lowest, bad = math.inf, 0
    for _ in range(trials):
        y = rng.dirichlet(np.full(instance.m, float(rng.choice([0.2, 1.0, 5.0]))))
        y = y / y.sum()
        cost = symmetric_mixed_cost(instance, y)
        lowest = min(lowest, cost)
        if cost < uniform - 1e-10:
            bad += 1
    return MinimalityReport(instance.m, trials, uniform, lowest, bad)


def lowerbound_rows(latency: PolyLatency, m_list: Iterable[int]) -> list[dict]:
    """Rows ``(m, ratio, rho, gap)`` for the CSV report."""
    rho = rho_factor(latency)
    return [
        {"m": m, "ratio": ratio, "rho": rho, "gap": rho - ratio}
        for m, ratio in uniform_ratio_curve(latency, m_list)
    ]
