"""Subset-indexed LP relaxation of minimum social cost.

Variables are ``y[i, a]`` (player i's weight on action a) and ``z[S, r]`` (the
probability that exactly the players in S use resource r). Rows, per resource
r with at least one reacher:

* convexity, ``sum_S z[S, r] = 1``                       (dual ``xi[r]``)
* linking,   ``sum_{S ∋ i} z[S, r] - sum_{a ∋ r} y[i, a] = 0``  (dual ``eta[r, i]``)

plus one simplex row ``sum_a y[i, a] = 1`` per player. The marginal
``v[r, i] = sum_{a ∋ r} y[i, a]`` is eliminated and recomputed afterwards.

Two solve modes share this layout: ``enumerate`` lists every admissible subset
up front, ``colgen`` grows the subset columns with a budgeted max-knapsack
pricing step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BudgetExceededError, CapExceededError, PreconditionError
from .game import PolyLatency, WeightedGame
from .poisson import p_r, rho_factor
from .simplex import SimplexTableau

ENUMERATION_CAP = 16
FEASIBILITY_TOL = 1e-8
PRICING_TOL = 1e-9

Column = tuple[int, tuple[int, ...]]


def class_rho(game: WeightedGame) -> int:
    """Factor for the latency class of the game: Bell number of the top degree."""
    lats = [l for l in game.resources if not l.is_zero]
    if not lats:
        return 1
    return max(rho_factor(l) for l in lats)


def admissible_subsets(game: WeightedGame, r: int, cap: int = ENUMERATION_CAP) -> list[tuple[int, ...]]:
    """All subsets of the players able to reach ``r``, including the empty set."""
    reach = game.reachers(r)
    if len(reach) > cap:
        raise CapExceededError(
            f"resource {r} has {len(reach)} reachers (cap {cap}); use column generation"
        )
    out = []
    for mask in range(1 << len(reach)):
        out.append(tuple(p for k, p in enumerate(reach) if mask >> k & 1))
    return out


def _subset_mask(subset: Sequence[int]) -> int:
    mask = 0
    for i in subset:
        mask |= 1 << i
    return mask


@dataclass
class RelaxationSolution:
    z: dict[Column, float]
    v: np.ndarray
    y: list[np.ndarray]
    objective: float
    xi: np.ndarray
    eta: np.ndarray
    dual_bound: float
    mode: str
    stats: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        z = [
            {"resource": r, "subset": list(S), "value": float(val)}
            for (r, S), val in sorted(self.z.items(), key=lambda kv: (kv[0][0], _subset_mask(kv[0][1])))
        ]
        return {
            "objective": float(self.objective),
            "dual_bound": float(self.dual_bound),
            "mode": self.mode,
            "z": z,
            "v": self.v.tolist(),
            "y": [row.tolist() for row in self.y],
            "duals": {"xi": self.xi.tolist(), "eta": self.eta.tolist()},
            "stats": dict(self.stats),
        }

    @classmethod
    def from_dict(cls, data: dict) -> RelaxationSolution:
        z = {
            (int(e["resource"]), tuple(sorted(int(i) for i in e["subset"]))): float(e["value"])
            for e in data["z"]
        }
        return cls(
            z=z,
            v=np.array(data["v"], dtype=float),
            y=[np.array(row, dtype=float) for row in data["y"]],
            objective=float(data["objective"]),
            xi=np.array(data["duals"]["xi"], dtype=float),
            eta=np.array(data["duals"]["eta"], dtype=float),
            dual_bound=float(data.get("dual_bound", data["objective"])),
            mode=data.get("mode", "enumerate"),
            stats=dict(data.get("stats", {})),
        )


class _Master:
    """Restricted master problem over a growing set of subset columns."""

    def __init__(self, game: WeightedGame):
        self.game = game
        self.active = [r for r in range(game.n_resources) if game.reachers(r)]
        rows = {}
        for r in self.active:
            rows[("xi", r)] = len(rows)
            for i in game.reachers(r):
                rows[("eta", r, i)] = len(rows)
        for i in range(game.n_players):
            rows[("mu", i)] = len(rows)
        self.rows = rows
        self.y_cols = [(i, k) for i in range(game.n_players) for k in range(len(game.strategies[i]))]
        self.z_cols: list[Column] = []
        self.z_index: dict[Column, int] = {}
        self.basis: list[int] | None = None

    def add(self, r: int, subset: tuple[int, ...]) -> bool:
        key = (r, tuple(sorted(subset)))
        if key in self.z_index:
            return False
        self.z_index[key] = len(self.z_cols)
        self.z_cols.append(key)
        return True

    def cost(self, r: int, subset: tuple[int, ...]) -> float:
        w = self.game.weights
        return float(self.game.resources[r].cost(math.fsum(w[i] for i in subset)))

    def build(self):
        game, rows = self.game, self.rows
        ny = len(self.y_cols)
        A = np.zeros((len(rows), ny + len(self.z_cols)))
        b = np.zeros(len(rows))
        c = np.zeros(ny + len(self.z_cols))
        for j, (i, k) in enumerate(self.y_cols):
            A[rows[("mu", i)], j] = 1.0
            for r in game.strategies[i][k]:
                A[rows[("eta", r, i)], j] = -1.0
        for i in range(game.n_players):
            b[rows[("mu", i)]] = 1.0
        for r in self.active:
            b[rows[("xi", r)]] = 1.0
        for jz, (r, S) in enumerate(self.z_cols):
            j = ny + jz
            A[rows[("xi", r)], j] = 1.0
            for i in S:
                A[rows[("eta", r, i)], j] = 1.0
            c[j] = self.cost(r, S)
        return A, b, c

    def solve(self):
        A, b, c = self.build()
        n = A.shape[1]
        basis = None
        if self.basis is not None:
            # artificials are numbered after the real columns; shift them
            basis = [j if j < self._n_prev else j - self._n_prev + n for j in self.basis]
        tableau = SimplexTableau(A, b, c)
        res = tableau.solve(basis)
        self.basis = res.basis
        self._n_prev = n
        return res

    def duals(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        game = self.game
        xi = np.zeros(game.n_resources)
        eta = np.zeros((game.n_resources, game.n_players))
        for key, row in self.rows.items():
            if key[0] == "xi":
                xi[key[1]] = y[row]
            elif key[0] == "eta":
                eta[key[1], key[2]] = y[row]
        return xi, eta

    def solution(self, res, dual_bound: float, mode: str, stats: dict) -> RelaxationSolution:
        game = self.game
        ny = len(self.y_cols)
        y = [np.zeros(len(s)) for s in game.strategies]
        for j, (i, k) in enumerate(self.y_cols):
            y[i][k] = res.x[j]
        v = np.zeros((game.n_resources, game.n_players))
        for i, actions in enumerate(game.strategies):
            for k, action in enumerate(actions):
                for r in action:
                    v[r, i] += y[i][k]
        z: dict[Column, float] = {}
        for jz, key in enumerate(self.z_cols):
            val = res.x[ny + jz]
            if val != 0.0:
                z[key] = float(val)
        for r in range(game.n_resources):
            if not game.reachers(r):
                z[(r, ())] = 1.0
        objective = math.fsum(self.cost(r, S) * val for (r, S), val in z.items())
        xi, eta = self.duals(res.duals)
        return RelaxationSolution(
            z=z, v=v, y=y, objective=objective, xi=xi, eta=eta,
            dual_bound=min(dual_bound, objective), mode=mode, stats=stats,
        )


def knapsack_pricing(
    eta: Sequence[float],
    xi: float,
    weights: Sequence[float],
    reachers: Sequence[int],
    latency: PolyLatency,
    delta: float = 1.0,
    tol: float = PRICING_TOL,
) -> tuple[tuple[int, ...], float] | None:
    """Most violated subset column for one resource, or ``None``.

    For every reachable budget ``B`` (in units of ``delta``) a 0/1 knapsack
    with exact capacity ``B`` maximises ``sum_{i in S} eta[i]``; the subset
    with the largest ``xi + sum eta - c(B * delta)`` wins. ``eta`` and
    ``weights`` are indexed by player. Ties go to the smallest player bitmask.
    Returns ``(subset, violation)`` when the violation exceeds ``tol``.
    """
    units = []
    for i in reachers:
        k = weights[i] / delta
        if abs(k - round(k)) > 1e-9 * max(1.0, k):
            raise PreconditionError(f"weight {weights[i]} is not a multiple of delta={delta}")
        units.append(int(round(k)))
    cap = sum(units)
    # best[B] = (value, mask) over subsets with total units exactly B
    neg = -math.inf
    best_val = [neg] * (cap + 1)
    best_mask = [0] * (cap + 1)
    best_val[0] = 0.0
    for i, u in zip(reachers, units):
        e = float(eta[i])
        bit = 1 << i
        for B in range(cap, u - 1, -1):
            prev = best_val[B - u]
            if prev == neg:
                continue
            cand = prev + e
            cand_mask = best_mask[B - u] | bit
            cur = best_val[B]
            if cand > cur + 1e-12 or (abs(cand - cur) <= 1e-12 and cand_mask < best_mask[B]):
                best_val[B] = cand
                best_mask[B] = cand_mask
    winner, win_val = None, neg
    for B in range(cap + 1):
        if best_val[B] == neg:
            continue
        val = xi + best_val[B] - latency.cost(B * delta)
        if val > win_val + 1e-12 or (abs(val - win_val) <= 1e-12 and best_mask[B] < winner):
            winner, win_val = best_mask[B], val
    if winner is None or win_val <= tol:
        return None
    subset = tuple(i for i in reachers if winner >> i & 1)
    return subset, float(win_val)


def _initial_columns(master: _Master) -> None:
    game = master.game
    for r in master.active:
        master.add(r, ())
        for i in game.reachers(r):
            master.add(r, (i,))
    # the all-first-action profile is integral and feasible
    users = [[] for _ in range(game.n_resources)]
    for i, actions in enumerate(game.strategies):
        for r in actions[0]:
            users[r].append(i)
    for r in master.active:
        master.add(r, tuple(users[r]))


def solve_relaxation(
    game: WeightedGame,
    epsilon: float = 1e-9,
    mode: str = "enumerate",
    cap: int = ENUMERATION_CAP,
    max_iterations: int = 500,
) -> RelaxationSolution:
    """Solve the relaxation; ``epsilon`` is the relative duality-gap target for ``colgen``."""
    if not epsilon > 0:
        raise PreconditionError(f"epsilon must be > 0, got {epsilon}")
    master = _Master(game)
    if mode == "enumerate":
        for r in master.active:
            for S in admissible_subsets(game, r, cap):
                master.add(r, S)
        res = master.solve()
        stats = {"iterations": res.iterations, "columns": len(master.z_cols), "rounds": 1}
        return master.solution(res, dual_bound=res.objective, mode=mode, stats=stats)
    if mode != "colgen":
        raise PreconditionError(f"unknown mode {mode!r}")

    _initial_columns(master)
    n_initial = len(master.z_cols)
    iterations = 0
    best_bound = -math.inf
    history = []
    for rnd in range(1, max_iterations + 1):
        res = master.solve()
        iterations = res.iterations
        xi, eta = master.duals(res.duals)
        # resources are priced independently and merged in index order
        found = []
        for r in master.active:
            hit = knapsack_pricing(
                eta[r], xi[r], game.weights, game.reachers(r), game.resources[r], game.delta
            )
            if hit is not None:
                found.append((r, hit[0], hit[1]))
        violation = math.fsum(h[2] for h in found)
        best_bound = max(best_bound, res.objective - violation)
        history.append([res.objective, res.objective - violation])
        gap = res.objective - best_bound
        stats = {
            "iterations": iterations,
            "columns": len(master.z_cols),
            "columns_generated": len(master.z_cols) - n_initial,
            "rounds": rnd,
            "gap": gap,
            "bounds": history,
        }
        if not found or gap <= epsilon * abs(res.objective) + 1e-12:
            return master.solution(res, dual_bound=best_bound, mode=mode, stats=stats)
        added = [master.add(r, S) for r, S, _ in found]
        if not any(added):
            # pricing keeps returning present columns: numerically optimal
            return master.solution(res, dual_bound=best_bound, mode=mode, stats=stats)
    raise BudgetExceededError(
        f"column generation did not converge in {max_iterations} rounds",
        primal=res.objective,
        dual_bound=best_bound,
    )


@dataclass(frozen=True)
class FeasibilityReport:
    partition: float
    linking: float
    marginal: float
    simplex: float
    nonnegativity: float
    objective: float

    @property
    def max_violation(self) -> float:
        return max(self.partition, self.linking, self.marginal, self.simplex, self.nonnegativity)

    @property
    def passed(self) -> bool:
        return (
            max(self.partition, self.linking, self.marginal, self.simplex) <= FEASIBILITY_TOL
            and self.nonnegativity <= 1e-10
            and self.objective <= FEASIBILITY_TOL
        )


def check_feasibility(game: WeightedGame, sol: RelaxationSolution) -> FeasibilityReport:
    """Largest violation of each constraint family of the relaxation."""
    R, N = game.n_resources, game.n_players
    zsum = np.zeros(R)
    zmarg = np.zeros((R, N))
    neg = 0.0
    obj_terms = []
    for (r, S), val in sol.z.items():
        zsum[r] += val
        for i in S:
            zmarg[r, i] += val
        neg = max(neg, -val)
        obj_terms.append(game.resources[r].cost(sum(game.weights[i] for i in S)) * val)
    vy = np.zeros((R, N))
    simplex = 0.0
    for i, actions in enumerate(game.strategies):
        y = sol.y[i]
        simplex = max(simplex, abs(float(np.sum(y)) - 1.0))
        neg = max(neg, float(-np.min(y)))
        for k, action in enumerate(actions):
            for r in action:
                vy[r, i] += y[k]
    obj = math.fsum(obj_terms)
    return FeasibilityReport(
        partition=float(np.max(np.abs(zsum - 1.0), initial=0.0)),
        linking=float(np.max(np.abs(zmarg - sol.v), initial=0.0)),
        marginal=float(np.max(np.abs(vy - sol.v), initial=0.0)),
        simplex=simplex,
        nonnegativity=max(neg, 0.0),
        objective=abs(obj - sol.objective) / max(1.0, abs(obj)),
    )


@dataclass(frozen=True)
class LPBoundReport:
    expected_cost: float
    rho: int
    objective: float

    @property
    def bound(self) -> float:
        return self.rho * self.objective

    @property
    def passed(self) -> bool:
        return self.expected_cost <= self.bound + 1e-8


def rho_times_lp_bound(game: WeightedGame, sol: RelaxationSolution) -> LPBoundReport:
    """Compare ``sum_r p_r(v_r)`` with ``rho * LP``."""
    w = np.array(game.weights)
    total = math.fsum(
        p_r(np.clip(sol.v[r], 0.0, None), w, lat)
        for r, lat in enumerate(game.resources)
        if not lat.is_zero
    )
    return LPBoundReport(expected_cost=total, rho=class_rho(game), objective=sol.objective)


__all__ = [
    "ENUMERATION_CAP",
    "FeasibilityReport",
    "LPBoundReport",
    "RelaxationSolution",
    "admissible_subsets",
    "check_feasibility",
    "class_rho",
    "knapsack_pricing",
    "rho_times_lp_bound",
    "solve_relaxation",
]
