"""Weighted congestion games: latencies, games, allocations and costs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateWeightError,
    InvalidAllocationError,
    InvalidGameError,
    PreconditionError,
)

MAX_DEGREE = 8
_INTEGRALITY_RTOL = 1e-9

Allocation = tuple[int, ...]
LatencyEvaluator = Callable[[float], float]


@dataclass(frozen=True)
class PolyLatency:
    """Latency ``l(x) = sum_d coeffs[d] * x**d`` with non-negative coefficients.

    Trailing zero coefficients are stripped so that ``degree`` is the index of
    the highest non-zero term.
    """

    coeffs: tuple[float, ...]
    allow_zero: bool = False
    max_degree: int = MAX_DEGREE

    def __post_init__(self) -> None:
        coeffs = [float(c) for c in self.coeffs]
        if any(not np.isfinite(c) for c in coeffs):
            raise InvalidGameError(f"latency coefficients must be finite, got {coeffs}")
        if any(c < 0 for c in coeffs):
            raise InvalidGameError(f"latency coefficients must be >= 0, got {coeffs}")
        while len(coeffs) > 1 and coeffs[-1] == 0.0:
            coeffs.pop()
        if not coeffs:
            coeffs = [0.0]
        if not self.allow_zero and all(c == 0.0 for c in coeffs):
            raise InvalidGameError("zero latency requires allow_zero=True")
        if len(coeffs) - 1 > self.max_degree:
            raise InvalidGameError(
                f"degree {len(coeffs) - 1} exceeds max_degree {self.max_degree}"
            )
        object.__setattr__(self, "coeffs", tuple(coeffs))
        # x*l(x) must be discretely convex; holds automatically for b_d >= 0
        grid = np.arange(0, 2 * self.max_degree + 3, dtype=float)
        c = grid * self(grid)
        if np.any(np.diff(c, 2) < -1e-9 * np.maximum(1.0, np.abs(c[2:]))):
            raise InvalidGameError("x*l(x) is not convex on the integer grid")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.coeffs)

    def __call__(self, x):
        acc = 0.0
        for b in reversed(self.coeffs):
            acc = acc * x + b
        return acc

    def cost(self, x):
        """Resource cost ``c(x) = x * l(x)``."""
        return x * self(x)

    def scaled(self, alpha: float) -> PolyLatency:
        """Return ``x -> l(alpha * x)``."""
        return PolyLatency(
            tuple(b * alpha**d for d, b in enumerate(self.coeffs)),
            allow_zero=self.allow_zero,
            max_degree=self.max_degree,
        )


def _is_multiple(w: float, delta: float) -> bool:
    ratio = w / delta
    return abs(ratio - round(ratio)) <= _INTEGRALITY_RTOL * max(1.0, abs(ratio))


@dataclass(frozen=True)
class WeightedGame:
    """A weighted congestion game with explicit strategy sets.

    ``strategies[i][k]`` is the k-th action of player i, a tuple of resource
    indices. All players share the weight granularity ``delta``.
    """

    weights: tuple[float, ...]
    resources: tuple[PolyLatency, ...]
    strategies: tuple[tuple[tuple[int, ...], ...], ...]
    delta: float = 1.0
    _reachers: tuple[tuple[int, ...], ...] = field(
        default=(), init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        weights = tuple(float(w) for w in self.weights)
        resources = tuple(self.resources)
        strategies = tuple(
            tuple(tuple(sorted(int(r) for r in action)) for action in actions)
            for actions in self.strategies
        )
        delta = float(self.delta)
        if not delta > 0:
            raise InvalidGameError(f"delta must be > 0, got {delta}")
        if len(strategies) != len(weights):
            raise InvalidGameError(
                f"{len(weights)} players but {len(strategies)} strategy lists"
            )
        for i, w in enumerate(weights):
            if not w > 0 or not np.isfinite(w):
                raise InvalidGameError(f"weight of player {i} must be > 0, got {w}")
            if not _is_multiple(w, delta):
                raise InvalidGameError(
                    f"weight {w} of player {i} is not a multiple of delta={delta}"
                )
        n_res = len(resources)
        for i, actions in enumerate(strategies):
            if not actions:
                raise InvalidGameError(f"player {i} has an empty strategy list")
            if len(set(actions)) != len(actions):
                raise InvalidGameError(f"player {i} has duplicate actions")
            for action in actions:
                if not action:
                    raise InvalidGameError(f"player {i} has an empty action")
                if len(set(action)) != len(action):
                    raise InvalidGameError(f"player {i} repeats a resource in {action}")
                if action[0] < 0 or action[-1] >= n_res:
                    raise InvalidGameError(
                        f"player {i} action {action} references unknown resource"
                    )
        reach = [set() for _ in range(n_res)]
        for i, actions in enumerate(strategies):
            for action in actions:
                for r in action:
                    reach[r].add(i)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "resources", resources)
        object.__setattr__(self, "strategies", strategies)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "_reachers", tuple(tuple(sorted(s)) for s in reach))

    @property
    def n_players(self) -> int:
        return len(self.weights)

    @property
    def n_resources(self) -> int:
        return len(self.resources)

    @property
    def max_degree(self) -> int:
        return max((l.degree for l in self.resources if not l.is_zero), default=0)

    @property
    def total_weight(self) -> float:
        return sum(self.weights)

    def reachers(self, r: int) -> tuple[int, ...]:
        """Players having at least one action that contains resource ``r``."""
        return self._reachers[r]

    def weight_units(self) -> tuple[int, ...]:
        """Weights as integer multiples of ``delta``."""
        return tuple(int(round(w / self.delta)) for w in self.weights)

    def n_profiles(self) -> int:
        n = 1
        for actions in self.strategies:
            n *= len(actions)
        return n

    def validate_allocation(self, a: Sequence[int]) -> Allocation:
        a = tuple(int(k) for k in a)
        if len(a) != self.n_players:
            raise InvalidAllocationError(
                f"allocation has {len(a)} entries for {self.n_players} players"
            )
        for i, k in enumerate(a):
            if not 0 <= k < len(self.strategies[i]):
                raise InvalidAllocationError(
                    f"player {i} has no action {k} (has {len(self.strategies[i])})"
                )
        return a


def load_of(game: WeightedGame, a: Sequence[int]) -> np.ndarray:
    """Per-resource load: total weight of players whose action uses the resource."""
    a = game.validate_allocation(a)
    load = np.zeros(game.n_resources)
    for i, k in enumerate(a):
        for r in game.strategies[i][k]:
            load[r] += game.weights[i]
    return load


def social_cost(game: WeightedGame, a: Sequence[int]) -> float:
    load = load_of(game, a)
    return float(sum(lat.cost(x) for lat, x in zip(game.resources, load)))


def player_cost(
    game: WeightedGame,
    a: Sequence[int],
    i: int,
    override_latencies: Sequence[LatencyEvaluator] | None = None,
) -> float:
    """Cost of player ``i``: latencies of its chosen resources at induced loads.

    ``override_latencies`` replaces the per-resource latencies, which is how
    taxed (perceived) costs are evaluated.
    """
    if not 0 <= i < game.n_players:
        raise InvalidAllocationError(f"no player {i}")
    load = load_of(game, a)
    lats = game.resources if override_latencies is None else override_latencies
    return float(sum(lats[r](load[r]) for r in game.strategies[i][a[i]]))


def unweighted_to_weighted(game_u: WeightedGame, w: float) -> WeightedGame:
    """Turn a unit-weight game into one where every player weighs ``w``.

    Each latency becomes ``x -> l'(x / w)``, so a load of ``k`` players
    (``w * k`` weight) pays what ``k`` unit players paid, and every allocation
    has exactly ``w`` times its unweighted social cost.
    """
    if not w > 0:
        raise PreconditionError(f"target weight must be > 0, got {w}")
    if any(x != 1.0 for x in game_u.weights):
        raise PreconditionError("input game must have all weights equal to 1")
    resources = tuple(lat.scaled(1.0 / w) for lat in game_u.resources)
    return WeightedGame(
        weights=(float(w),) * game_u.n_players,
        resources=resources,
        strategies=game_u.strategies,
        delta=float(w),
    )


def rescale_weights(game: WeightedGame, delta: float) -> tuple[WeightedGame, float]:
    """Round every weight to the nearest multiple of ``delta``.

    Returns the rounded game and the largest relative weight change.
    """
    if not delta > 0:
        raise InvalidGameError(f"delta must be > 0, got {delta}")
    new = []
    worst = 0.0
    for i, w in enumerate(game.weights):
        k = round(w / delta)
        if k == 0:
            raise DegenerateWeightError(
                f"weight {w} of player {i} rounds to 0 at delta={delta}"
            )
        rounded = k * delta
        worst = max(worst, abs(rounded - w) / w)
        new.append(rounded)
    out = WeightedGame(tuple(new), game.resources, game.strategies, delta)
    return out, worst


# JSON interchange -----------------------------------------------------------


def _decimal(s, what: str) -> float:
    try:
        d = Decimal(str(s))
    except InvalidOperation as exc:
        raise InvalidGameError(f"{what} is not a decimal number: {s!r}") from exc
    return float(d)


def latency_from_json(obj, max_degree: int = MAX_DEGREE) -> PolyLatency:
    if isinstance(obj, dict):
        obj = obj.get("coeffs")
    if not isinstance(obj, list) or not obj:
        raise InvalidGameError("latency needs a non-empty 'coeffs' list")
    return PolyLatency(tuple(_decimal(c, "coefficient") for c in obj), max_degree=max_degree)


def latency_to_json(lat: PolyLatency) -> dict:
    return {"coeffs": list(lat.coeffs)}


def game_from_dict(data: dict, max_degree: int = MAX_DEGREE) -> WeightedGame:
    try:
        delta_s = data.get("delta", "1")
        players = data["players"]
        resources = data["resources"]
        strategies = data["strategies"]
    except (KeyError, AttributeError, TypeError) as exc:
        raise InvalidGameError(f"malformed game document: {exc}") from exc
    delta = Decimal(str(delta_s))
    weights = []
    for i, p in enumerate(players):
        w = Decimal(str(p["weight"]))
        # exact decimal check first; float tolerance check follows in WeightedGame
        if delta > 0 and (w / delta) != (w / delta).to_integral_value():
            raise InvalidGameError(f"weight {w} of player {i} is not a multiple of {delta}")
        weights.append(float(w))
    lats = tuple(latency_from_json(r, max_degree) for r in resources)
    try:
        strats = tuple(tuple(tuple(a) for a in s) for s in strategies)
    except TypeError as exc:
        raise InvalidGameError(f"malformed strategies: {exc}") from exc
    return WeightedGame(tuple(weights), lats, strats, float(delta))


def game_to_dict(game: WeightedGame) -> dict:
    return {
        "delta": repr(game.delta),
        "players": [{"weight": repr(w)} for w in game.weights],
        "resources": [latency_to_json(l) for l in game.resources],
        "strategies": [[list(a) for a in s] for s in game.strategies],
    }


def load_game(path) -> WeightedGame:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidGameError(f"{path}: invalid JSON: {exc}") from exc
    return game_from_dict(data)
