"""Command line interface: one subcommand per stage plus the end-to-end pipeline."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass

import numpy as np

from .equilibrium import brute_force_opt, certify_ratio, hedge_dynamics
from .errors import FairTaxError, InvalidGameError, ResourceLimitError
from .game import (
    MAX_DEGREE,
    game_from_dict,
    game_to_dict,
    latency_from_json,
    social_cost,
    unweighted_to_weighted,
)
from .lp import RelaxationSolution, check_feasibility, class_rho, rho_times_lp_bound, solve_relaxation
from .lowerbound import lowerbound_rows
from .poisson import rho_factor
from .taxes import TaxedLatency, build_taxed_latencies, full_recursion_residual

EXIT_OK = 0
EXIT_CERT_FAIL = 2
EXIT_INPUT = 3
EXIT_LIMIT = 4


class StageError(Exception):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage
        self.exc = exc


@dataclass(frozen=True)
class PipelineConfig:
    epsilon: float = 0.05
    rounds: int = 100_000
    seed: int = 0
    mode: str = "enumerate"
    max_degree: int = MAX_DEGREE

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise InvalidGameError(f"epsilon must be > 0, got {self.epsilon}")
        if self.rounds < 1:
            raise InvalidGameError(f"rounds must be >= 1, got {self.rounds}")


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except FairTaxError as exc:
        raise StageError(name, exc) from exc


def run_pipeline(config: PipelineConfig, game) -> tuple[int, dict]:
    """solve -> taxes -> dynamics -> best pure profile -> certification.

    Half of epsilon goes to the LP (as a relative gap of epsilon / (2 rho)),
    half is the regret target of the dynamics.
    """
    rho = class_rho(game)
    lp_eps = config.epsilon / 2 / rho
    sol = _stage("solve", solve_relaxation, game, epsilon=lp_eps, mode=config.mode)
    feas = check_feasibility(game, sol)
    taxed = _stage("taxes", build_taxed_latencies, game, sol)
    residual = full_recursion_residual(game, taxed, sol)
    lp_bound = rho_times_lp_bound(game, sol)
    profile = _stage("equilibrate", hedge_dynamics, game, taxed, config.rounds, config.seed)
    opt_alloc, opt = _stage("bruteforce", brute_force_opt, game)
    cert = _stage("certify", certify_ratio, game, sol, profile, opt, config.epsilon)
    regret_target = config.epsilon / 2 * opt / game.n_players
    report = {
        "config": asdict(config),
        "game": game_to_dict(game),
        "rho": rho,
        "lp": {
            "objective": sol.objective,
            "dual_bound": sol.dual_bound,
            "epsilon": lp_eps,
            "stats": sol.stats,
            "max_violation": feas.max_violation,
            "feasible": feas.passed,
        },
        "lp_bound": {
            "expected_cost": lp_bound.expected_cost,
            "rho_times_lp": lp_bound.bound,
            "passed": lp_bound.passed,
        },
        "taxes": [t.to_dict() for t in taxed],
        "recursion_residual": residual.max_residual,
        "dynamics": profile.summary(),
        "regret_target": regret_target,
        "regret_target_met": bool(np.max(profile.regrets, initial=0.0) <= regret_target),
        "opt": {"allocation": list(opt_alloc), "value": opt},
        "certificate": cert.to_dict(),
    }
    return (EXIT_OK if cert.passed else EXIT_CERT_FAIL), report


def _read_json(path):
    try:
        if path in (None, "-"):
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidGameError(f"invalid JSON in {path}: {exc}") from exc
    except OSError as exc:
        raise InvalidGameError(f"cannot read {path}: {exc}") from exc


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(text: str, path) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _game(args):
    return game_from_dict(_read_json(args.input), max_degree=args.max_degree)


def cmd_factor(args) -> int:
    lat = latency_from_json(_read_json(args.input), args.max_degree)
    _write(dumps({"rho": rho_factor(lat), "bell_index": lat.degree + 1}), args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    game = _game(args)
    sol = solve_relaxation(game, epsilon=args.epsilon, mode=args.mode)
    _write(dumps(sol.to_dict()), args.out)
    return EXIT_OK


def _taxes_doc(taxed) -> dict:
    return {"resources": [t.to_dict() for t in taxed]}


def _load_taxes(path, game) -> list[TaxedLatency]:
    doc = _read_json(path)
    try:
        entries = sorted(doc["resources"], key=lambda e: int(e["resource"]))
        taxed = [TaxedLatency.from_dict(e, game.resources[int(e["resource"])]) for e in entries]
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise InvalidGameError(f"malformed taxes document: {exc}") from exc
    if [t.resource for t in taxed] != list(range(game.n_resources)):
        raise InvalidGameError("taxes document must list every resource once")
    return taxed


def cmd_taxes(args) -> int:
    game = _game(args)
    try:
        sol = RelaxationSolution.from_dict(_read_json(args.solution))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidGameError(f"malformed solution document: {exc}") from exc
    _write(dumps(_taxes_doc(build_taxed_latencies(game, sol))), args.out)
    return EXIT_OK


def cmd_equilibrate(args) -> int:
    game = _game(args)
    taxed = _load_taxes(args.taxes, game) if args.taxes else None
    profile = hedge_dynamics(game, taxed, args.rounds, args.seed)
    _, opt = brute_force_opt(game)
    cert = certify_ratio(game, None, profile, opt, args.epsilon)
    _write(dumps({"dynamics": profile.summary(), "certificate": cert.to_dict()}), args.out)
    return EXIT_OK if cert.passed else EXIT_CERT_FAIL


def cmd_lowerbound(args) -> int:
    lat = latency_from_json(_read_json(args.input), args.max_degree)
    m_list = [int(m) for m in args.m_list.split(",") if m.strip()]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["m", "ratio", "rho", "gap"], lineterminator="\n")
    writer.writeheader()
    for row in lowerbound_rows(lat, m_list):
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    _write(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_bruteforce(args) -> int:
    game = _game(args)
    alloc, opt = brute_force_opt(game)
    _write(dumps({"opt": opt, "allocation": list(alloc)}), args.out)
    return EXIT_OK


def cmd_transform(args) -> int:
    game = _game(args)
    _write(dumps(game_to_dict(unweighted_to_weighted(game, args.weight))), args.out)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    game = _game(args)
    config = PipelineConfig(args.epsilon, args.rounds, args.seed, args.mode, args.max_degree)
    code, report = run_pipeline(config, game)
    _write(dumps(report), args.out)
    return code


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--in", dest="input", default="-", help="input JSON (default stdin)")
    common.add_argument("--out", default="-", help="output path (default stdout)")
    common.add_argument("--epsilon", type=float, default=0.05)
    common.add_argument("--rounds", type=int, default=100_000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--mode", choices=["enumerate", "colgen"], default="enumerate")
    common.add_argument("--max-degree", type=int, default=MAX_DEGREE)

    parser = argparse.ArgumentParser(prog="fairtax", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("factor", parents=[common], help="Bell-number factor of a latency").set_defaults(func=cmd_factor)
    sub.add_parser("solve", parents=[common], help="solve the LP relaxation").set_defaults(func=cmd_solve)
    p = sub.add_parser("taxes", parents=[common], help="taxed latencies from an LP solution")
    p.add_argument("--solution", required=True)
    p.set_defaults(func=cmd_taxes)
    p = sub.add_parser("equilibrate", parents=[common], help="no-regret dynamics and certification")
    p.add_argument("--taxes", default=None)
    p.set_defaults(func=cmd_equilibrate)
    p = sub.add_parser("lowerbound", parents=[common], help="uniform-profile ratio curve (CSV)")
    p.add_argument("--m-list", default="1,2,5,10,100,1000")
    p.set_defaults(func=cmd_lowerbound)
    sub.add_parser("bruteforce", parents=[common], help="exact minimum social cost").set_defaults(func=cmd_bruteforce)
    p = sub.add_parser("transform", parents=[common], help="unit weights -> weight w")
    p.add_argument("--weight", type=float, required=True)
    p.set_defaults(func=cmd_transform)
    sub.add_parser("pipeline", parents=[common], help="solve, tax, equilibrate, certify").set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        code = EXIT_LIMIT if isinstance(exc.exc, ResourceLimitError) else EXIT_INPUT
        print(f"error: {exc}", file=sys.stderr)
        return code
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (FairTaxError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
