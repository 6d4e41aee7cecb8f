"""Command-line front end.

Exit codes: 0 success / Yes, 1 clean negative answer, 2 usage or input
error, 3 calibration budget exceeded. Reports are ``key: value`` lines on
standard output; ``--report PATH`` also writes them as a JSON object.
"""

import argparse
import json
import logging
import math
import os
import sys
import time
from fractions import Fraction
from importlib import metadata
from pathlib import Path

from .errors import BwcError, CalibrationBudgetExceeded
from .model import Measure, apply_model
from .textformat import read_game, read_model, read_strategy, serialize_strategy

log = logging.getLogger("bwcsynth")


def _version():
    try:
        return metadata.version("bwcsynth")
    except metadata.PackageNotFoundError:
        return "unknown"


def rational(text):
    """``p/q``, an integer or a decimal, parsed exactly."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _u64(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def fmt(x):
    """Exact rendering plus a decimal one for non-integers."""
    if x is None:
        return "none"
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return str(x.numerator)
        return f"{x} ({float(x):.6g})"
    if isinstance(x, bool):
        return "yes" if x else "no"
    return str(x)


class Report:
    def __init__(self):
        self.items = []

    def add(self, key, value):
        self.items.append((key, fmt(value)))

    def emit(self, out, path=None):
        for k, v in self.items:
            out.write(f"{k}: {v}\n")
        if path:
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(dict(self.items), fh, indent=2)
                fh.write("\n")


def _common(p):
    p.add_argument("--game", required=True, metavar="PATH")
    p.add_argument("--report", metavar="PATH", help="also write the report as JSON")
    p.add_argument("--jobs", type=_positive, default=1, metavar="N")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bwcsynth",
        description="Worst-case, expected-value and beyond-worst-case strategy synthesis.")
    parser.add_argument("--version", action="version", version=f"bwcsynth {_version()}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-worst-case", help="values of the two-player game")
    _common(p)
    p.add_argument("--mu", type=int)

    p = sub.add_parser("solve-expectation", help="optimal expectation of the MDP")
    _common(p)
    p.add_argument("--model", required=True, metavar="PATH")
    p.add_argument("--nu", type=rational)

    p = sub.add_parser("solve-bwc", help="synthesize a beyond-worst-case strategy")
    _common(p)
    p.add_argument("--model", required=True, metavar="PATH")
    p.add_argument("--mu", type=int, required=True)
    p.add_argument("--nu", type=rational, required=True)
    p.add_argument("--epsilon", type=rational)
    strict = p.add_mutually_exclusive_group()
    strict.add_argument("--strict", dest="strict", action="store_true", default=True)
    strict.add_argument("--non-strict", dest="strict", action="store_false")
    p.add_argument("--budget-k", type=_positive, default=64, metavar="N")
    p.add_argument("--strategy", metavar="PATH",
                   help="where to write the strategy (default: <game>.bwc.s)")

    p = sub.add_parser("verify", help="certify a strategy exactly")
    _common(p)
    p.add_argument("--model", metavar="PATH")
    p.add_argument("--strategy", required=True, metavar="PATH")
    p.add_argument("--mu", type=int, required=True)
    p.add_argument("--nu", type=rational)

    p = sub.add_parser("simulate", help="Monte Carlo runs of a strategy")
    _common(p)
    p.add_argument("--model", required=True, metavar="PATH")
    p.add_argument("--strategy", required=True, metavar="PATH")
    p.add_argument("--runs", type=_positive, default=100_000)
    p.add_argument("--horizon", type=_positive, default=10_000)
    p.add_argument("--seed", type=_u64, default=0)

    p = sub.add_parser("unfold", help="dump the unfolding and its safe region")
    _common(p)
    p.add_argument("--mu", type=int, required=True)
    return parser


def _values(rep, g, values, prefix):
    for s in range(g.n):
        rep.add(f"{prefix}.{g.name(s)}", values[s])


def cmd_solve_worst_case(args, rep):
    from .worstcase import solve_mp_game, solve_sp_worst_case
    g, measure = read_game(args.game)
    table = solve_mp_game(g) if measure is Measure.MEAN_PAYOFF else solve_sp_worst_case(g)
    _values(rep, g, table.values, "value")
    for s, e in sorted(table.p1.items()):
        rep.add(f"choice.{g.name(s)}", g.edge_token(e))
    if args.mu is None:
        return 0
    v = table.values[g.initial]
    ok = v > args.mu if measure is Measure.MEAN_PAYOFF else v < args.mu
    rep.add("mu", args.mu)
    rep.add("decision", ok)
    return 0 if ok else 1


def cmd_solve_expectation(args, rep):
    from .expectation import expected_mp_optimal, expected_ssp_optimal
    g, measure = read_game(args.game)
    mdp = apply_model(g, read_model(args.model, g))
    if measure is Measure.MEAN_PAYOFF:
        sol = expected_mp_optimal(mdp)
    else:
        sol = expected_ssp_optimal(mdp, g.targets)
    _values(rep, g, sol.values, "value")
    for s, e in sorted(sol.strategy.items()):
        rep.add(f"choice.{g.name(s)}", g.edge_token(e))
    if args.nu is None:
        return 0
    v = sol.values[g.initial]
    ok = v > args.nu if measure is Measure.MEAN_PAYOFF else v < args.nu
    rep.add("nu", args.nu)
    rep.add("decision", ok)
    return 0 if ok else 1


def cmd_solve_bwc(args, rep):
    g, measure = read_game(args.game)
    m = read_model(args.model, g)
    rep.add("measure", measure.value)
    rep.add("mu", args.mu)
    rep.add("nu", args.nu)
    rep.add("strict", args.strict)
    if measure is Measure.SHORTEST_PATH:
        from .bwc_sp import synthesize_bwc_sp
        res = synthesize_bwc_sp(g, m, g.targets, args.mu, args.nu, strict=args.strict)
    else:
        if not args.strict:
            raise BwcError("--non-strict is only available for shortest-path games")
        from .bwc_mp import synthesize_bwc_mp
        rep.add("epsilon", args.epsilon)
        res = synthesize_bwc_mp(g, m, args.mu, args.nu, args.epsilon, budget_k=args.budget_k)
    rep.add("decision", res.decision)
    rep.add("reason", res.reason)
    for key in ("optimal_expectation", "e_dagger", "worst_value"):
        if res.details.get(key) is not None:
            rep.add(key, res.details[key])
    if not res.decision:
        return 1
    path = args.strategy or str(Path(args.game).with_suffix(".bwc.s").name)
    Path(path).write_text(serialize_strategy(res.strategy, g), encoding="utf-8")
    rep.add("worst_case", res.worst_case)
    rep.add("expectation", res.expectation)
    rep.add("memory", res.strategy.size)
    rep.add("strategy", path)
    return 0


def cmd_verify(args, rep):
    from .evaluation import exact_expectation, verify_worst_case_mp, verify_worst_case_sp
    g, measure = read_game(args.game)
    s = read_strategy(args.strategy, g)
    rep.add("measure", measure.value)
    rep.add("memory", s.size)
    if measure is Measure.MEAN_PAYOFF:
        cert = verify_worst_case_mp(g, s, args.mu)
    else:
        cert = verify_worst_case_sp(g, s, g.targets, args.mu)
    rep.add("mu", args.mu)
    rep.add("worst_case", cert.worst_case)
    rep.add("worst_case_pass", cert.passed)
    rep.add("witness", " ".join(f"{st}@{mem}" for mem, st in cert.witness))
    ok = cert.passed
    if args.model:
        exp = exact_expectation(g, read_model(args.model, g), s, measure)
        rep.add("expectation", exp)
        if args.nu is not None:
            good = exp > args.nu if measure is Measure.MEAN_PAYOFF else exp < args.nu
            rep.add("nu", args.nu)
            rep.add("expectation_pass", good)
            ok = ok and good
    rep.add("decision", ok)
    return 0 if ok else 1


def cmd_simulate(args, rep):
    from .evaluation import simulate
    g, measure = read_game(args.game)
    m = read_model(args.model, g)
    s = read_strategy(args.strategy, g)
    summ = simulate(g, m, s, args.runs, args.horizon, args.seed, measure, jobs=args.jobs)
    rep.add("measure", measure.value)
    rep.add("runs", summ.runs)
    rep.add("horizon", args.horizon)
    rep.add("seed", summ.seed)
    rep.add("rng", summ.rng)
    rep.add("mean", f"{summ.mean:.6f}")
    rep.add("stderr", f"{summ.stderr:.6f}")
    rep.add("variance", f"{summ.variance:.6f}")
    rep.add("min", f"{summ.min:g}")
    rep.add("max", f"{summ.max:g}")
    rep.add("censored", summ.censored)
    if summ.censored:
        rep.add("mean_is_lower_bound", True)
    for value, count in summ.histogram:
        rep.add(f"hist.{value}", count)
    return 0


def cmd_unfold(args, rep):
    from .bwc_sp import safe_region, unfold
    g, measure = read_game(args.game)
    if measure is not Measure.SHORTEST_PATH:
        raise BwcError("unfold needs a shortest-path game")
    u = unfold(g, args.mu)
    safe = safe_region(u)
    ug = u.game
    rep.add("states", ug.n)
    rep.add("doubles", " ".join(ug.name(i) for i in sorted(u.doubles)))
    rep.add("tops", " ".join(ug.name(i) for i in sorted(u.tops)))
    rep.add("safe", " ".join(ug.name(i) for i in sorted(safe.region)))
    rep.add("initial_safe", ug.initial in safe.region)
    for e, edge in enumerate(ug.edges):
        if u.origin[e] is not None:
            rep.add(f"edge.{e}", f"{ug.name(edge.src)} -> {ug.name(edge.dst)} {edge.weight}")
    return 0


COMMANDS = {
    "solve-worst-case": cmd_solve_worst_case,
    "solve-expectation": cmd_solve_expectation,
    "solve-bwc": cmd_solve_bwc,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "unfold": cmd_unfold,
}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    level = os.environ.get("BWC_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    rep = Report()
    rep.add("command", args.command)
    rep.add("game", args.game)
    start = time.perf_counter()
    try:
        code = COMMANDS[args.command](args, rep)
    except CalibrationBudgetExceeded as err:
        rep.add("decision", "unknown")
        rep.add("error", str(err))
        code = 3
    except (BwcError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    rep.add("version", _version())
    rep.add("elapsed_s", f"{time.perf_counter() - start:.3f}")
    rep.emit(out, args.report)
    return code


if __name__ == "__main__":
    sys.exit(main())
