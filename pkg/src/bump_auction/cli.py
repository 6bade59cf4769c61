"""Command-line entry point: ``bump-auction <command> ...``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import bounds
from .core import MechanismParams, ScenarioError, fmt
from .io import dumps, load_scenario, outcome_to_dict, scenario_to_dict
from .mechanism import run
from .oracles import check_bounds, vcg
from .strategies import build_example, random_scenario

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_VIOLATION = 0, 1, 2, 3
LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "trace": logging.DEBUG}

log = logging.getLogger("bump_auction")


def _setup_logging() -> str:
    mode = os.environ.get("BUMP_AUCTION_LOG", "quiet").lower()
    if mode not in LOG_LEVELS:
        mode = "quiet"
    log.handlers.clear()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    log.addHandler(handler)
    log.setLevel(LOG_LEVELS[mode])
    log.propagate = False
    return mode


def _render(header, rows, style: str) -> str:
    cells = [[c if isinstance(c, str) else (str(c) if isinstance(c, int) else fmt(c)) for c in r] for r in rows]
    if style == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(cells)
        return buf.getvalue()
    widths = [max(len(str(h)), *(len(r[k]) for r in cells)) if cells else len(str(h)) for k, h in enumerate(header)]
    lines = ["  ".join(str(h).ljust(wd) for h, wd in zip(header, widths)).rstrip()]
    lines += ["  ".join(c.ljust(wd) for c, wd in zip(r, widths)).rstrip() for r in cells]
    return "\n".join(lines) + "\n"


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load(args):
    return load_scenario(args.scenario, alpha=args.alpha, gamma=args.gamma, epsilon=args.epsilon)


def cmd_run(args) -> int:
    scenario, params = _load(args)
    outcome = run(scenario, params)
    trace = log.isEnabledFor(logging.DEBUG)
    for e in outcome.events:
        log.info(e.line(trace))
    if args.events:
        Path(args.events).write_text("".join(e.line() + "\n" for e in outcome.events), encoding="utf-8")
    _write(dumps(outcome_to_dict(scenario, outcome)), args.out)
    return EXIT_OK


def cmd_thresholds(args) -> int:
    scenario, params = _load(args)
    outcome = run(scenario, params, all_thresholds=True)
    ids = [args.bidder_id] if args.bidder_id else [b.id for b in scenario.arrivals]
    if args.bidder_id:
        scenario.bidder(args.bidder_id)
    rows = [(i, outcome.thresholds[i].ac, outcome.thresholds[i].sv, outcome.status(i)) for i in ids]
    _write(_render(("id", "ac", "sv", "status"), rows, args.format), args.out)
    return EXIT_OK


def cmd_vcg(args) -> int:
    scenario, _ = _load(args)
    res = vcg(scenario.arrivals, scenario.slots)
    rows = [(b.id, b.bid, "win" if b.id in res.winners else "lose", res.payments.get(b.id, 0.0))
            for b in scenario.arrivals]
    rows.append(("TOTAL", res.opt_weight, "", res.revenue))
    _write(_render(("id", "bid", "result", "payment"), rows, args.format), args.out)
    return EXIT_OK


def cmd_bounds(args) -> int:
    n_list = [int(x) for x in args.n_list.split(",")] if args.n_list else list(bounds.FIBONACCI_N)
    grid = bounds.alpha_grid(args.alpha_from, args.alpha_to, args.steps)
    if log.isEnabledFor(logging.DEBUG):
        for a in grid:
            for n in n_list:
                log.debug("alpha=%s n=%d brackets=%s", fmt(a), n, bounds.root_brackets(a, n, args.grid))
    rows = bounds.emit_figure_data(grid, n_list, args.tol, args.grid)
    if args.format == "csv":
        text = bounds.figure_csv(rows)
    else:
        text = _render(bounds.FIGURE_COLUMNS, [tuple(getattr(r, k) for k in bounds.FIGURE_COLUMNS) for r in rows], "table")
    _write(text, args.out)
    return EXIT_OK


def _verify_one(job):
    index, seed, alpha, gamma = job
    rng = random.Random(f"{seed}:{index}")
    scenario = random_scenario(rng, speculators=rng.choice((0, 0, 1, 2)))
    params = MechanismParams(alpha, gamma)
    report = check_bounds(scenario, run(scenario, params), params)
    return index, [(c.name, c.lhs, c.rhs, c.applicable, c.passed) for c in report.checks]


def cmd_verify(args) -> int:
    if args.random:
        alpha = 0.25 if args.alpha is None else args.alpha
        gamma = 1.0 if args.gamma is None else args.gamma
        MechanismParams(alpha, gamma)
        jobs = [(i, args.seed, alpha, gamma) for i in range(args.count)]
        if args.jobs > 1:
            with ProcessPoolExecutor(args.jobs) as pool:
                results = list(pool.map(_verify_one, jobs))
        else:
            results = [_verify_one(j) for j in jobs]
        results.sort()
        rows, failed = [], 0
        for index, checks in results:
            bad = [c for c in checks if not c[4]]
            failed += bool(bad)
            rows.append((index, "FAIL" if bad else "pass", ";".join(c[0] for c in bad)))
        text = _render(("instance", "status", "violations"), rows, args.format)
        text += f"{args.count - failed}/{args.count} instances pass\n"
    else:
        if not args.scenario:
            raise ScenarioError("verify needs a scenario path or --random", "scenario")
        scenario, params = _load(args)
        report = check_bounds(scenario, run(scenario, params), params)
        failed = not report.passed
        rows = [(c.name, c.lhs, c.rhs, "pass" if c.passed else "FAIL", "yes" if c.applicable else "no")
                for c in report.checks]
        text = _render(("check", "lhs", "rhs", "status", "applicable"), rows, args.format)
    _write(text, args.out)
    return EXIT_VIOLATION if failed else EXIT_OK


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def cmd_gen_example(args) -> int:
    kw = {}
    for item in args.params:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ScenarioError(f"expected key=value, got {item!r}", "params")
        kw[key] = _parse_value(raw)
    if args.epsilon is not None and args.name in ("subopt_spec", "sacrifice"):
        kw.setdefault("epsilon", args.epsilon)
    scenario, params = build_example(args.name, **kw)
    _write(dumps(scenario_to_dict(scenario, params)), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alpha", type=float, help="override the file's alpha")
    common.add_argument("--gamma", type=float, help="override the file's gamma")
    common.add_argument("--epsilon", type=float, help="minimum positive bid (speculator ladders)")
    common.add_argument("--format", choices=("table", "csv"), default="table")
    common.add_argument("--out", help="write the result here instead of stdout")

    p = argparse.ArgumentParser(prog="bump-auction", description="Advance-reservation bump auction toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run", parents=[common], help="run a scenario and print the outcome JSON")
    s.add_argument("scenario")
    s.add_argument("--events", help="also write the event log to this file")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("thresholds", parents=[common], help="acceptance and survival weights")
    s.add_argument("scenario")
    s.add_argument("bidder_id", nargs="?")
    s.set_defaults(func=cmd_thresholds)

    s = sub.add_parser("vcg", parents=[common], help="offline VCG benchmark")
    s.add_argument("scenario")
    s.set_defaults(func=cmd_vcg)

    s = sub.add_parser("bounds", parents=[common], help="effective-efficiency bound curves")
    s.add_argument("--from", dest="alpha_from", type=float, default=0.05)
    s.add_argument("--to", dest="alpha_to", type=float, default=0.6)
    s.add_argument("--steps", type=int, default=56)
    s.add_argument("--n-list", help="comma-separated n values (default: Fibonacci up to 144)")
    s.add_argument("--tol", type=float, default=bounds.DEFAULT_TOL)
    s.add_argument("--grid", type=int, default=bounds.DEFAULT_GRID)
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("verify", parents=[common], help="check every guarantee on runs")
    s.add_argument("scenario", nargs="?")
    s.add_argument("--random", action="store_true", help="verify seeded random instances instead")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=100)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("gen-example", parents=[common], help="write a catalog example as a scenario file")
    s.add_argument("name")
    s.add_argument("params", nargs="*", metavar="key=value")
    s.set_defaults(func=cmd_gen_example)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
