"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 numeric failure, 4 horizon exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Iterable, Sequence

from . import asymptotics, bounds, minimax, simulation
from .bernoulli_regret import saa_curve
from .errors import DivergenceError, DomainError, HorizonError, NewsvendorError, UnsupportedPolicyError, ZeroOracleError
from .model import Policy, ProblemParams, distribution_from_dict

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_HORIZON = 0, 2, 3, 4


class UsageError(Exception):
    pass


def fmt(v) -> str:
    """12 significant digits, locale independent."""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".12g")
    return str(v)


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _json_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    recs = [dict(zip(header, (None if isinstance(v, float) and not math.isfinite(v) else v for v in row)))
            for row in rows]
    return json.dumps(recs, indent=1) + "\n"


def _emit(args, header, rows) -> None:
    rows = list(rows)
    text = _json_text(header, rows) if args.format == "json" else _csv_text(header, rows)
    _write(args.output, text)


def _write(path, text) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _progress(args):
    if args.quiet:
        return None
    return lambda msg: print(msg, file=sys.stderr, flush=True)


def _params(args) -> ProblemParams:
    has_q = args.q is not None
    has_bh = args.b is not None or args.h is not None
    if has_q and has_bh:
        raise UsageError("give either --q or --b/--h, not both")
    if has_q:
        return ProblemParams.from_q(args.q)
    if args.b is None or args.h is None:
        raise UsageError("need --q, or both --b and --h")
    return ProblemParams(args.b, args.h)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a list of numbers, got {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a list of integers, got {text!r}") from exc


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from exc
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_saa_curve(args) -> int:
    params = _params(args)
    pts = saa_curve(args.n_max, params)
    _emit(args, ["n", "regret", "argmax_mu"], [(p.n, p.regret, p.argmax_mu) for p in pts])
    return EXIT_OK


def cmd_optimal_curve(args) -> int:
    params = _params(args)
    sols = minimax.optimal_curve(args.n_max, params)
    header = ["n", "k", "gamma", "opt_regret"]
    rows = [(s.n, s.k, s.gamma, s.optimal_value) for s in sols]
    if args.with_degenerate:
        header.append("degenerate")
        rows = [r + (s.degenerate.value,) for r, s in zip(rows, sols)]
    _emit(args, header, rows)
    return EXIT_OK


def cmd_thresholds(args) -> int:
    if args.q_list is None:
        base = _params(args)
        qs = [base.q]
    else:
        if args.b is not None or args.h is not None:
            raise UsageError("give either --q or --b/--h, not both")
        qs = args.q_list
    progress = _progress(args)
    rows = []
    for q in qs:
        params = ProblemParams.from_q(q)
        for res in bounds.threshold_table(args.tau, args.methods, params, args.n_cap, progress=progress):
            rows.append((q, res.method.value, res.tau, res.label(), res.certified_up_to))
    _emit(args, ["q", "method", "tau", "n_star", "certified_up_to"], rows)
    return EXIT_OK


def cmd_asymptotics(args) -> int:
    params = _params(args)
    rows = asymptotics.asymptotic_convergence_check(params, args.n)
    _emit(args, ["n", "sqrtn_saa", "sqrtn_opt", "c_star"], [(r.n, r.sqrtn_saa, r.sqrtn_opt, r.c_star) for r in rows])
    return EXIT_OK


def _sim_dist(args):
    if args.dist is None:
        raise UsageError("need --dist (a JSON document) or --config")
    try:
        spec = json.loads(args.dist)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--dist is not valid JSON: {exc}") from exc
    return distribution_from_dict(spec)


def _sim_policy(args, params) -> Policy:
    if args.n is None:
        raise UsageError("--n is required unless --tau is given")
    kind = args.policy
    if kind == "saa":
        return Policy.saa(args.n, params)
    if kind in ("minimax-cvx", "minimax-two-point"):
        fam_pol = simulation.family_policy(simulation.PolicyFamily.MINIMAX_CVX, args.n, params)
        if kind == "minimax-two-point" and fam_pol.k is not None:
            return fam_pol.as_two_point()
        return fam_pol
    if kind == "single":
        if args.rank is None:
            raise UsageError("--policy single needs --rank")
        return Policy.single(args.n, args.rank)
    raise UsageError(f"unknown policy {kind!r}")


def cmd_simulate(args) -> int:
    progress = _progress(args)
    if args.config:
        if args.dist or args.n is not None:
            raise UsageError("--config cannot be combined with --dist/--n")
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
        params = _params_from_doc(doc, args)
        cfg = simulation.SimConfig.from_dict(doc, params)
        est = simulation.simulate_regret(cfg, params, _chunk_progress(progress))
        _write(args.output, json.dumps(est.to_dict()) + "\n")
        return EXIT_OK

    params = _params(args)
    dist = _sim_dist(args)
    if args.tau:
        fam = {"saa": "SAA", "minimax-cvx": "MinimaxCvx"}.get(args.policy)
        if fam is None:
            raise UsageError("threshold mode supports --policy saa or minimax-cvx")
        res = simulation.simulate_thresholds(fam, dist, params, args.tau, args.M, args.K, args.seed,
                                             args.n_cap, args.rule, progress=progress)
        _emit(args, ["q", "method", "tau", "n_star", "certified_up_to"],
              [(params.q, r.method.value, r.tau, r.n_star, r.certified_up_to) for r in res])
        return EXIT_OK

    cfg = simulation.SimConfig(_sim_policy(args, params), dist, args.M, args.K, args.seed)
    est = simulation.simulate_regret(cfg, params, _chunk_progress(progress))
    if args.format == "csv":
        _emit(args, ["mean", "std_error", "ci95_lo", "ci95_hi", "M", "K", "seed"],
              [(est.mean_regret, est.std_error, est.ci95[0], est.ci95[1], est.M_used, est.K_used, est.seed)])
    else:
        _write(args.output, json.dumps(est.to_dict()) + "\n")
    return EXIT_OK


def _params_from_doc(doc, args) -> ProblemParams:
    if args.q is not None or args.b is not None or args.h is not None:
        return _params(args)
    if "q" in doc:
        return ProblemParams.from_q(float(doc["q"]))
    if "b" in doc and "h" in doc:
        return ProblemParams(float(doc["b"]), float(doc["h"]))
    raise UsageError("cost parameters missing: pass --q/--b/--h or put q (or b, h) in the config")


def _chunk_progress(progress):
    if progress is None:
        return None
    return lambda done, total: progress(f"chunk {done}/{total}")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_cost_flags(p) -> None:
    p.add_argument("--q", type=float, help="critical quantile b/(b+h) in (0, 1)")
    p.add_argument("--b", type=float, help="underage cost per unit (use with --h)")
    p.add_argument("--h", type=float, help="overage cost per unit (use with --b)")


def _add_output_flags(p, formats=("csv", "json")) -> None:
    p.add_argument("--output", "-o", default="-", help="output file (default: standard output)")
    p.add_argument("--format", choices=formats, default=formats[0], help="output format")
    p.add_argument("--quiet", action="store_true", help="suppress progress messages on standard error")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="newsvendor", description="Data-driven newsvendor regret tables.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("saa-curve", help="exact worst-case regret of SAA for n = 1..n_max")
    _add_cost_flags(p)
    p.add_argument("--n-max", type=_positive_int, required=True, help="largest sample size")
    _add_output_flags(p)
    p.set_defaults(func=cmd_saa_curve)

    p = sub.add_parser("optimal-curve", help="minimax policy (k, gamma) and its regret for n = 1..n_max")
    _add_cost_flags(p)
    p.add_argument("--n-max", type=_positive_int, required=True, help="largest sample size")
    p.add_argument("--with-degenerate", action="store_true", help="append a degenerate-size column")
    _add_output_flags(p)
    p.set_defaults(func=cmd_optimal_curve)

    p = sub.add_parser("thresholds", help="sample sizes reaching each regret target")
    p.add_argument("--q", dest="q_list", type=_float_list, help="one or more critical quantiles, e.g. 0.7,0.8,0.9")
    p.add_argument("--b", type=float, help="underage cost (single problem, with --h)")
    p.add_argument("--h", type=float, help="overage cost (single problem, with --b)")
    p.add_argument("--tau", type=_float_list, default=[0.25, 0.20, 0.15, 0.10, 0.05],
                   help="regret targets (default 0.25,0.2,0.15,0.1,0.05)")
    p.add_argument("--methods", type=lambda s: [m for m in s.replace(",", " ").split()],
                   default=["ExactSAA", "LeviUB", "Optimal"], help="any of ExactSAA, LeviUB, Optimal")
    p.add_argument("--n-cap", type=_positive_int, default=None,
                   help="scan horizon (default: 100000 for LeviUB, max(1000, 4 x first crossing) otherwise)")
    _add_output_flags(p)
    p.set_defaults(func=cmd_thresholds, q=None)

    p = sub.add_parser("asymptotics", help="sqrt(n)-scaled exact regrets next to the limit constant")
    _add_cost_flags(p)
    p.add_argument("--n", type=_int_list, default=[100, 500, 2000], help="sample sizes, e.g. 100,500,2000")
    _add_output_flags(p)
    p.set_defaults(func=cmd_asymptotics)

    p = sub.add_parser("simulate", help="Monte Carlo regret estimate or simulated thresholds")
    _add_cost_flags(p)
    p.add_argument("--config", help="JSON file with dist, policy, M, K, seed (and optionally q or b, h)")
    p.add_argument("--dist", help='distribution as JSON, e.g. \'{"family": "exponential", "params": {"rate": 1}}\'')
    p.add_argument("--policy", default="saa", choices=["saa", "minimax-cvx", "minimax-two-point", "single"])
    p.add_argument("--n", type=_positive_int, help="sample size")
    p.add_argument("--rank", type=_positive_int, help="order statistic for --policy single")
    p.add_argument("--M", type=_positive_int, default=100_000, help="replications (default 100000)")
    p.add_argument("--K", type=_positive_int, default=1000, help="out-of-sample draws per replication")
    p.add_argument("--seed", type=int, default=0, help="64-bit seed")
    p.add_argument("--tau", type=_float_list, help="threshold mode: regret targets")
    p.add_argument("--n-cap", type=_positive_int, default=200, help="threshold mode: largest n scanned")
    p.add_argument("--rule", choices=["eventually", "first"], default="eventually",
                   help="threshold mode: bound must hold for every n up to n-cap, or only at the first n")
    _add_output_flags(p, formats=("json", "csv"))
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on bad flags
    try:
        return args.func(args)
    except (UsageError, DomainError, UnsupportedPolicyError, DivergenceError, ZeroOracleError) as exc:
        print(f"newsvendor {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HorizonError as exc:
        print(f"newsvendor {args.command}: horizon exceeded: {exc}", file=sys.stderr)
        return EXIT_HORIZON
    except (NewsvendorError, ArithmeticError, FloatingPointError) as exc:
        print(f"newsvendor {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"newsvendor {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
