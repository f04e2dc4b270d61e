"""No-regret dynamics on the taxed game and certification of the pure outcome."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CapExceededError, NumericRangeError, PreconditionError, UndefinedFactorError
from .game import Allocation, LatencyEvaluator, WeightedGame, social_cost
from .lp import class_rho

BRUTE_FORCE_CAP = 10**7


@dataclass
class EquilibriumProfile:
    """Empirical play of a dynamics run.

    ``history`` lists each distinct pure profile once, in order of first
    occurrence, with its share of the ``rounds``.
    """

    history: list[tuple[Allocation, float]]
    regrets: np.ndarray
    rounds: int
    seed: int
    average_social_cost: float = 0.0
    average_perceived: np.ndarray = field(default_factory=lambda: np.zeros(0))
    counterfactual: list[np.ndarray] = field(default_factory=list)

    @property
    def support_size(self) -> int:
        return len(self.history)

    def summary(self) -> dict:
        top = sorted(self.history, key=lambda h: -h[1])[:10]
        return {
            "rounds": self.rounds,
            "seed": self.seed,
            "support_size": self.support_size,
            "average_social_cost": self.average_social_cost,
            "regrets": self.regrets.tolist(),
            "max_regret": float(np.max(self.regrets, initial=0.0)),
            "top_profiles": [{"profile": list(p), "weight": wgt} for p, wgt in top],
        }


class _CostOracle:
    """Perceived costs of every action of every player against a fixed profile."""

    def __init__(self, game: WeightedGame, latencies: Sequence[LatencyEvaluator]):
        if len(latencies) != game.n_resources:
            raise PreconditionError(
                f"need {game.n_resources} latency evaluators, got {len(latencies)}"
            )
        self.game = game
        self.latencies = latencies
        self.cache: dict[Allocation, tuple[list[float], list[list[float]], float]] = {}

    def __call__(self, a: Allocation):
        hit = self.cache.get(a)
        if hit is not None:
            return hit
        game, lats = self.game, self.latencies
        w = game.weights
        load = [0.0] * game.n_resources
        for i, k in enumerate(a):
            for r in game.strategies[i][k]:
                load[r] += w[i]
        realized, counterfactual = [], []
        for i, k in enumerate(a):
            mine = game.strategies[i][k]
            row = []
            for action in game.strategies[i]:
                cost = 0.0
                for r in action:
                    x = load[r] if r in mine else load[r] + w[i]
                    cost += lats[r](x)
                row.append(cost)
            realized.append(row[k])
            counterfactual.append(row)
        sc = sum(x * game.resources[r](x) for r, x in enumerate(load))
        hit = (realized, counterfactual, sc)
        self.cache[a] = hit
        return hit


def _cost_scale(game: WeightedGame, latencies: Sequence[LatencyEvaluator]) -> list[float]:
    top = game.total_weight
    scales = []
    for i, actions in enumerate(game.strategies):
        used = sorted({r for a in actions for r in a})
        s = sum(float(latencies[r](top)) for r in used)
        if not math.isfinite(s):
            raise NumericRangeError(f"perceived cost bound for player {i} overflows")
        scales.append(s if s > 0 else 1.0)
    return scales


def hedge_dynamics(
    game: WeightedGame,
    latencies: Sequence[LatencyEvaluator] | None = None,
    rounds: int = 100_000,
    seed: int = 0,
) -> EquilibriumProfile:
    """Multiplicative weights for every player against realized perceived costs.

    Learning rate ``sqrt(8 ln|A_i| / T)`` on costs normalised by an upper
    bound of the player's perceived cost. Regrets are reported in cost units.
    """
    if rounds < 1:
        raise PreconditionError(f"rounds must be >= 1, got {rounds}")
    if latencies is None:
        latencies = game.resources
    oracle = _CostOracle(game, latencies)
    scales = _cost_scale(game, latencies)
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    n = game.n_players
    sizes = [len(s) for s in game.strategies]
    rates = [math.sqrt(8.0 * math.log(k) / rounds) / s for k, s in zip(sizes, scales)]
    logits = [[0.0] * k for k in sizes]
    cum_real = [0.0] * n
    cum_cf = [[0.0] * k for k in sizes]
    counts: dict[Allocation, int] = {}
    sc_total = 0.0
    uniforms = rng.random((rounds, n))
    for t in range(rounds):
        u = uniforms[t]
        profile = []
        for i in range(n):
            lg = logits[i]
            if sizes[i] == 1:
                profile.append(0)
                continue
            top = max(lg)
            ps = [math.exp(x - top) for x in lg]
            target = u[i] * sum(ps)
            acc, pick = 0.0, sizes[i] - 1
            for k, p in enumerate(ps):
                acc += p
                if target < acc:
                    pick = k
                    break
            profile.append(pick)
        a = tuple(profile)
        realized, counterfactual, sc = oracle(a)
        counts[a] = counts.get(a, 0) + 1
        sc_total += sc
        for i in range(n):
            cum_real[i] += realized[i]
            row = counterfactual[i]
            cf = cum_cf[i]
            lg = logits[i]
            eta = rates[i]
            for k in range(sizes[i]):
                cf[k] += row[k]
                lg[k] -= eta * row[k]
    regrets = np.array([(cum_real[i] - min(cum_cf[i])) / rounds for i in range(n)])
    history = [(a, c / rounds) for a, c in counts.items()]
    return EquilibriumProfile(
        history=history,
        regrets=regrets,
        rounds=rounds,
        seed=int(seed),
        average_social_cost=sc_total / rounds,
        average_perceived=np.array(cum_real) / rounds,
        counterfactual=[np.array(c) / rounds for c in cum_cf],
    )


def extract_best_pure(game: WeightedGame, profile: EquilibriumProfile) -> Allocation:
    """Lowest true social cost profile in the support; earliest wins ties."""
    if not profile.history:
        raise PreconditionError("empty history")
    best, best_cost = None, math.inf
    for a, _ in profile.history:
        cost = social_cost(game, a)
        if cost < best_cost:
            best, best_cost = a, cost
    return best


def brute_force_opt(game: WeightedGame, cap: int = BRUTE_FORCE_CAP) -> tuple[Allocation, float]:
    """Exact minimum social cost; lexicographically first optimum on ties."""
    total = game.n_profiles()
    if total > cap:
        raise CapExceededError(f"{total} allocations exceed the brute-force cap {cap}")
    best, best_cost = None, math.inf
    for a in itertools.product(*(range(len(s)) for s in game.strategies)):
        cost = social_cost(game, a)
        if cost < best_cost:
            best, best_cost = a, cost
    return best, best_cost


@dataclass(frozen=True)
class RatioReport:
    allocation: Allocation
    social_cost: float
    opt: float
    rho: float
    epsilon: float
    support_size: int
    lp_objective: float | None = None

    @property
    def ratio(self) -> float:
        return self.social_cost / self.opt

    @property
    def passed(self) -> bool:
        return self.ratio <= self.rho + self.epsilon

    def to_dict(self) -> dict:
        return {
            "allocation": list(self.allocation),
            "social_cost": self.social_cost,
            "opt": self.opt,
            "ratio": self.ratio,
            "rho": self.rho,
            "epsilon": self.epsilon,
            "bound": self.rho + self.epsilon,
            "support_size": self.support_size,
            "lp_objective": self.lp_objective,
            "passed": self.passed,
        }


def certify_ratio(
    game: WeightedGame,
    sol,
    profile: EquilibriumProfile,
    opt_value: float,
    epsilon: float = 0.05,
) -> RatioReport:
    """Check ``SC(best pure in support) <= (rho + epsilon) * OPT``."""
    if opt_value <= 0:
        raise UndefinedFactorError("optimum is zero; the ratio is undefined")
    best = extract_best_pure(game, profile)
    return RatioReport(
        allocation=best,
        social_cost=social_cost(game, best),
        opt=float(opt_value),
        rho=float(class_rho(game)),
        epsilon=float(epsilon),
        support_size=profile.support_size,
        lp_objective=None if sol is None else float(sol.objective),
    )
