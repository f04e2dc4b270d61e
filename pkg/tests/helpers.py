"""Random instance generation and brute-force oracles shared by the tests."""

from __future__ import annotations

import itertools

import numpy as np

from fairtax.game import PolyLatency, WeightedGame


def random_latency(rng: np.random.Generator, degree: int) -> PolyLatency:
    coeffs = rng.integers(0, 4, size=degree + 1).astype(float)
    coeffs[degree] = float(rng.integers(1, 4))
    return PolyLatency(tuple(coeffs))


def random_game(
    rng: np.random.Generator,
    max_players: int = 5,
    max_resources: int = 4,
    degree: int | None = None,
    delta: float = 1.0,
    max_actions: int = 3,
) -> WeightedGame:
    n = int(rng.integers(1, max_players + 1))
    m = int(rng.integers(1, max_resources + 1))
    top = int(rng.integers(1, 4)) if degree is None else degree
    # one resource carries the top degree so the class factor is B_{top+1}
    degrees = [top] + [int(rng.integers(0, top + 1)) for _ in range(m - 1)]
    resources = tuple(random_latency(rng, d) for d in degrees)
    weights = tuple(float(rng.integers(1, 4)) * delta for _ in range(n))
    strategies = []
    for _ in range(n):
        k = int(rng.integers(1, max_actions + 1))
        actions = set()
        while len(actions) < k:
            size = int(rng.integers(1, m + 1))
            actions.add(tuple(sorted(rng.choice(m, size=size, replace=False).tolist())))
            if len(actions) == 2**m - 1:
                break
        strategies.append(tuple(sorted(actions)))
    return WeightedGame(weights, resources, tuple(strategies), delta)


def all_allocations(game: WeightedGame):
    return itertools.product(*(range(len(s)) for s in game.strategies))


def lp_by_scipy(game: WeightedGame) -> float:
    """Independent LP optimum via HiGHS on the same formulation with explicit v."""
    from scipy.optimize import linprog

    from fairtax.lp import admissible_subsets

    cols = []  # (kind, data)
    for i, actions in enumerate(game.strategies):
        for k in range(len(actions)):
            cols.append(("y", i, k))
    for r in range(game.n_resources):
        for S in admissible_subsets(game, r):
            cols.append(("z", r, S))
    for r in range(game.n_resources):
        for i in range(game.n_players):
            cols.append(("v", r, i))
    idx = {c: j for j, c in enumerate(cols)}
    rows, b = [], []
    R, N = game.n_resources, game.n_players
    for r in range(R):
        row = np.zeros(len(cols))
        for S in admissible_subsets(game, r):
            row[idx[("z", r, S)]] = 1
        rows.append(row); b.append(1.0)
        for i in range(N):
            row = np.zeros(len(cols))
            for S in admissible_subsets(game, r):
                if i in S:
                    row[idx[("z", r, S)]] = 1
            row[idx[("v", r, i)]] = -1
            rows.append(row); b.append(0.0)
            row = np.zeros(len(cols))
            row[idx[("v", r, i)]] = 1
            for k, a in enumerate(game.strategies[i]):
                if r in a:
                    row[idx[("y", i, k)]] = -1
            rows.append(row); b.append(0.0)
    for i in range(N):
        row = np.zeros(len(cols))
        for k in range(len(game.strategies[i])):
            row[idx[("y", i, k)]] = 1
        rows.append(row); b.append(1.0)
    c = np.zeros(len(cols))
    for (kind, *rest), j in idx.items():
        if kind == "z":
            r, S = rest
            c[j] = game.resources[r].cost(sum(game.weights[i] for i in S))
    res = linprog(c, A_eq=np.array(rows), b_eq=np.array(b), bounds=(0, None), method="highs")
    assert res.status == 0
    return float(res.fun)
