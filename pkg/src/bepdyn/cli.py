"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 resource cap exceeded,
4 precondition failure (candidate is not a strict equilibrium).
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import secrets
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import formats
from .dynamics import block_sizes, find_rest_points, integrate
from .finite_pop import AgentPopulation, compare_to_mean_dynamic, simulate_agents
from .game import (
    GameSchemaError,
    SymmetricGame,
    make_asymmetric_hawk_dove,
    make_asymmetric_pd,
    make_coordination,
    make_prisoners_dilemma,
    make_public_goods,
)
from .genericity import check_effective_genericity
from .kernel import ResourceCapError, TieRule, get_kernel
from .pd import PdBoundaryError, classify_region
from .stability import NotStrictEquilibriumError, k_threshold, stability_verdict

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_PRECONDITION = 0, 2, 3, 4

log = logging.getLogger("bepdyn")


class ConfigError(Exception):
    pass


# -- argument helpers ----------------------------------------------------------

def _add_game_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("game")
    g.add_argument("--game", choices=["pd", "pg", "coord", "apd", "ahd"],
                   help="named family: prisoner's dilemma, public goods, coordination, "
                        "asymmetric PD, asymmetric hawk-dove")
    g.add_argument("--game-file", help="game JSON file")
    g.add_argument("--g", help="PD gain")
    g.add_argument("--l", help="PD loss")
    for name in ("g1", "g2", "l1", "l2"):
        g.add_argument(f"--{name}")
    g.add_argument("--n", type=int, default=None, help="player count (pg, coord)")
    g.add_argument("--phi", help="public-goods production phi(0),...,phi(n), comma separated")
    g.add_argument("--utilities", help="coordination utilities u_1>=...>=u_m, comma separated")
    p.add_argument("--tie", default="uniform", help="'uniform' or 'priority:a,b,...'")


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise ConfigError(f"--game {args.game} requires {', '.join(missing)}")


def _csv_list(text):
    return [x.strip() for x in text.split(",") if x.strip()]


def build_game(args):
    if args.game_file and args.game:
        raise ConfigError("give either --game or --game-file, not both")
    if args.game_file:
        if not os.path.exists(args.game_file):
            raise ConfigError(f"game file not found: {args.game_file}")
        return formats.read_game(args.game_file)
    if args.game == "pd":
        _need(args, "g", "l")
        return make_prisoners_dilemma(args.g, args.l)
    if args.game == "pg":
        _need(args, "phi")
        phi = _csv_list(args.phi)
        return make_public_goods(args.n or len(phi) - 1, phi)
    if args.game == "coord":
        _need(args, "utilities")
        return make_coordination(args.n or 2, _csv_list(args.utilities))
    if args.game == "apd":
        _need(args, "g1", "g2", "l1", "l2")
        return make_asymmetric_pd(args.g1, args.g2, args.l1, args.l2)
    if args.game == "ahd":
        _need(args, "g1", "g2", "l1", "l2")
        return make_asymmetric_hawk_dove(args.g1, args.g2, args.l1, args.l2)
    raise ConfigError("a game is required: --game NAME or --game-file PATH")


def parse_state(game, text: str | None) -> np.ndarray:
    """``0.9`` (first action of a 2-action block), ``0.2,0.3,0.5``, or blocks joined by ``;``."""
    sizes = block_sizes(game)
    if text is None:
        return np.concatenate([np.full(s, 1.0 / s) for s in sizes])
    blocks = [b for b in text.split(";")]
    if len(blocks) == 1 and len(sizes) > 1:
        blocks = blocks * len(sizes)
    if len(blocks) != len(sizes):
        raise ConfigError(f"--init needs {len(sizes)} ';'-separated blocks")
    out = []
    for s, b in zip(sizes, blocks):
        try:
            vals = [float(x) for x in _csv_list(b)]
        except ValueError:
            raise ConfigError(f"cannot parse state block {b!r}") from None
        if len(vals) == 1 and s == 2:
            vals = [vals[0], 1.0 - vals[0]]
        if len(vals) != s or min(vals) < 0 or abs(sum(vals) - 1.0) > 1e-9:
            raise ConfigError(f"state block {b!r} must be {s} nonnegative weights summing to 1")
        out.extend(vals)
    return np.array(out)


def parse_candidate(game, text: str):
    if isinstance(game, SymmetricGame):
        if text not in game.actions:
            raise ConfigError(f"unknown action {text!r}; choose from {list(game.actions)}")
        return text
    prof = _csv_list(text)
    if len(prof) != game.n:
        raise ConfigError(f"profile needs {game.n} comma-separated actions")
    for i, a in enumerate(prof):
        if a not in game.action_sets[i]:
            raise ConfigError(f"unknown action {a!r} for player {i + 1}")
    return tuple(prof)


def _positive(name, value):
    if value is not None and value <= 0:
        raise ConfigError(f"{name} must be positive, got {value}")
    return value


def _emit_json(obj, path):
    if path:
        formats.write_json(obj, path)
    else:
        formats.write_json(obj, sys.stdout)


def _threads() -> int:
    raw = os.environ.get("BEP_THREADS")
    if raw is None:
        return min(8, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"BEP_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"BEP_THREADS must be a positive integer, got {raw!r}")
    return n


# -- commands ------------------------------------------------------------------

def cmd_simulate(args) -> int:
    game = build_game(args)
    tie = TieRule.parse(args.tie)
    _positive("--dt", args.dt)
    _positive("--tol", args.tol)
    x0 = parse_state(game, args.init)
    traj = integrate(game, args.k, x0, args.horizon, args.dt, tie, tol=args.tol,
                     record_every=args.record_every)
    if args.out:
        formats.write_trajectory_csv(traj, args.out)
    residual = float(np.max(np.abs(get_kernel(game, args.k, tie).field(traj.terminal))))
    _emit_json({
        "terminal": dict(zip(traj.labels, traj.terminal.tolist())),
        "time": float(traj.times[-1]),
        "residual": residual,
        "converged": traj.terminal_reason == "converged",
        "terminalReason": traj.terminal_reason,
    }, args.summary)
    return EXIT_OK


def cmd_equilibria(args) -> int:
    game = build_game(args)
    tie = TieRule.parse(args.tie)
    _positive("--tol", args.tol)
    search = find_rest_points(game, args.k, seeds=args.grid, tol=args.tol, tie=tie)
    out = formats.rest_points_to_json(search)
    if search.unresolved:
        print(f"warning: {len(search.unresolved)} seed(s) unresolved", file=sys.stderr)
    _emit_json(out, args.out)
    return EXIT_OK


def cmd_stability(args) -> int:
    game = build_game(args)
    tie = TieRule.parse(args.tie)
    cand = parse_candidate(game, args.equilibrium)
    verdict = stability_verdict(game, cand, args.k, tie=tie, probe=not args.no_probe,
                                epsilon=args.epsilon)
    out = verdict.to_json()
    if args.k_threshold:
        out["kThreshold"] = k_threshold(game, cand).to_json()
    for note in verdict.notes:
        print(f"note: {note}", file=sys.stderr)
    _emit_json(out, args.out)
    return EXIT_OK


def _scan_row(g_text, l_text, k):
    try:
        region = classify_region(g_text, l_text, k)
    except PdBoundaryError:
        return [g_text, l_text, "BOUNDARY", ""]
    return [g_text, l_text, region.region_id, f"{region.stable_equilibrium:.12g}"]


def cmd_pd_scan(args) -> int:
    if args.k not in (2, 3):
        raise ConfigError("pd-scan supports --k 2 or 3")
    pairs = []
    if args.pairs:
        if not os.path.exists(args.pairs):
            raise ConfigError(f"pairs file not found: {args.pairs}")
        with open(args.pairs, newline="") as fh:
            reader = csv.DictReader(fh, skipinitialspace=True)
            if reader.fieldnames is None or reader.fieldnames[:2] != ["g", "l"]:
                raise ConfigError(f"{args.pairs}: expected header 'g,l'")
            pairs = [(r["g"].strip(), r["l"].strip()) for r in reader]
    if args.g_values or args.l_values:
        if not (args.g_values and args.l_values):
            raise ConfigError("--g-values and --l-values go together")
        pairs += [(g, l) for g in _csv_list(args.g_values) for l in _csv_list(args.l_values)]
    if not pairs:
        raise ConfigError("nothing to scan: give --pairs CSV or --g-values/--l-values")
    for g, l in pairs:
        formats.as_rational(g), formats.as_rational(l)
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        rows = list(pool.map(lambda gl: _scan_row(gl[0], gl[1], args.k), pairs))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["g", "l", "region_id", "stable_equilibrium"])
        w.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def cmd_mc(args) -> int:
    game = build_game(args)
    tie = TieRule.parse(args.tie)
    seed = args.seed
    if seed is None:
        seed = secrets.randbits(63)
        print(f"seed: {seed}", file=sys.stderr)
    if args.N < 1:
        raise ConfigError("--N must be positive")
    n_pop = len(block_sizes(game))
    R = args.revisions if args.revisions is not None else int(round(args.horizon * args.N * n_pop))
    if R < 1:
        raise ConfigError("need at least one revision (--revisions or --horizon)")
    x0 = parse_state(game, args.init)
    init = AgentPopulation.from_state(game, x0, args.N, seed)
    traj = simulate_agents(game, args.k, init, R, tie, record_every=args.record_every)
    if args.out:
        formats.write_trajectory_csv(traj, args.out)
    manifest = formats.mc_manifest(seed, args.N, R, args.k, tie, game)
    if args.manifest:
        formats.write_json(manifest, args.manifest)
    report = {"manifest": manifest, "terminal": dict(zip(traj.labels, traj.terminal.tolist()))}
    if not args.no_compare:
        ode = integrate(game, args.k, init.frequencies(), float(traj.times[-1]), args.dt, tie)
        report["deviation"] = compare_to_mean_dynamic(traj, ode)
    _emit_json(report, args.summary)
    return EXIT_OK


def cmd_genericity(args) -> int:
    game = build_game(args)
    cand = parse_candidate(game, args.candidate)
    rep = check_effective_genericity(game, cand, args.k, l_max=args.l_max)
    _emit_json(rep.to_json(), args.out)
    return EXIT_OK


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bepdyn", description="S(k) best-experienced-payoff dynamics")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate the mean dynamic")
    _add_game_args(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--init", help="initial state, e.g. 0.9 or 0.2,0.8 or 0.5,0.5;0.3,0.7")
    p.add_argument("--horizon", type=float, default=100.0)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--out", help="trajectory CSV path")
    p.add_argument("--summary", help="summary JSON path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("equilibria", help="find S(k) equilibria (rest points)")
    _add_game_args(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--grid", type=int, default=4, help="interior seed lattice resolution")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out")
    p.set_defaults(func=cmd_equilibria)

    p = sub.add_parser("stability", help="stability verdict for a strict equilibrium")
    _add_game_args(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--equilibrium", required=True, help="action, or comma-separated profile")
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--no-probe", action="store_true")
    p.add_argument("--k-threshold", action="store_true", help="also report the smallest stable k")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("pd-scan", help="classify (g, l) pairs for k in {2, 3}")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--pairs", help="CSV with header g,l")
    p.add_argument("--g-values", help="comma-separated g grid")
    p.add_argument("--l-values", help="comma-separated l grid")
    p.add_argument("--out")
    p.set_defaults(func=cmd_pd_scan)

    p = sub.add_parser("mc", help="finite-population Monte Carlo")
    _add_game_args(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--N", type=int, default=10000)
    p.add_argument("--seed", type=int)
    p.add_argument("--init")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--revisions", type=int)
    group.add_argument("--horizon", type=float, default=10.0)
    p.add_argument("--record-every", type=int)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--no-compare", action="store_true")
    p.add_argument("--out", help="empirical trajectory CSV")
    p.add_argument("--manifest", help="run manifest JSON")
    p.add_argument("--summary")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("genericity", help="effective genericity report")
    _add_game_args(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--candidate", required=True)
    p.add_argument("--l-max", type=int, default=2)
    p.add_argument("--out")
    p.set_defaults(func=cmd_genericity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "k", None) is not None and args.k < 1:
        print("error: --k must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except NotStrictEquilibriumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ConfigError, GameSchemaError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
