"""Command-line front end ``kmt``.

Exit codes: 0 on ACCEPT or success, 1 on REJECT (or a failed check suite),
2 on a usage or input error, 3 when a budget is exceeded.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import adversaries, checks, fnfile, harness
from .errors import BudgetExceeded, ConstructionFailed, PreconditionViolated, QueryBudgetExceeded
from .l1bridge import RealFunction, RealOracle, l1_distance_monotone, tolerant_l1_test_monotone
from .poset import (DistanceValue, exact_distance, exact_distance_bruteforce,
                    exact_distance_line_dp, exact_distance_milp, greedy_violation_matching)

EXIT_ACCEPT, EXIT_REJECT, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3

ENGINES = {
    "auto": exact_distance,
    "dp": exact_distance_line_dp,
    "brute": exact_distance_bruteforce,
    "milp": exact_distance_milp,
    "matching": lambda f, k, dom: greedy_violation_matching(f, k, dom)[1],
}


class UsageError(Exception):
    pass


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _load(path):
    try:
        return fnfile.load_function(path)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def cmd_test(a) -> int:
    f = _load(a.fn)
    if a.tester == "l1":
        if not isinstance(f, RealFunction):
            raise UsageError("the l1 tester needs a real-valued function file")
        _need(a, "eps1", "eps2")
        v = tolerant_l1_test_monotone(RealOracle(f), a.eps1, a.eps2, a.seed)
    else:
        if isinstance(f, RealFunction):
            raise UsageError(f"tester {a.tester} needs a Boolean function file")
        cell = {"k": a.k, "eps": a.eps, "eps1": a.eps1, "eps2": a.eps2}
        if a.tester.startswith("highdim"):
            _need(a, "k", "eps1", "eps2")
        elif a.tester == "grid2":
            _need(a, "eps")
        else:
            _need(a, "k", "eps")
        v = harness.TESTERS[a.tester](f, cell, a.seed)
    _emit(v.to_json())
    return EXIT_ACCEPT if v.accepted else EXIT_REJECT


def _need(a, *names):
    missing = [n for n in names if getattr(a, n) is None]
    if missing:
        raise UsageError(f"missing --{', --'.join(missing)}")


def cmd_distance(a) -> int:
    f = _load(a.fn)
    if isinstance(f, RealFunction):
        v = l1_distance_monotone(f)
        _emit({"value": f"{v.numerator}/{v.denominator}", "float": float(v), "metric": "l1"})
        return EXIT_ACCEPT
    _need(a, "k")
    dv: DistanceValue = ENGINES[a.engine](f.truth, a.k, f.domain)
    _emit(dv.to_json())
    return EXIT_ACCEPT


def _params(a) -> dict:
    params = json.loads(a.params) if a.params else {}
    for item in a.param or ():
        key, eq, raw = item.partition("=")
        if not eq:
            raise UsageError(f"--param expects key=value, got {item!r}")
        try:
            params[key] = json.loads(raw)
        except json.JSONDecodeError:
            params[key] = raw
    return params


def cmd_gen(a) -> int:
    try:
        params = _params(a)
    except json.JSONDecodeError as e:
        raise UsageError(f"--params is not JSON: {e.msg}") from None
    try:
        bundle = adversaries.generate(a.family, params, a.seed)
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError(f"bad parameters for {a.family}: {e}") from None
    if a.table:
        doc = fnfile.table_document(bundle.domain, bundle.table)
    else:
        doc = fnfile.generator_document(bundle.family, bundle.params, bundle.seed)
        doc["domain"] = bundle.domain.to_json()
    if a.output:
        fnfile.dump(doc, a.output)
    else:
        _emit(doc)
    print(json.dumps({"metadata": bundle.metadata}, sort_keys=True, default=str), file=sys.stderr)
    return EXIT_ACCEPT


def cmd_experiment(a) -> int:
    try:
        with open(a.config) as fh:
            cfg = harness.ExperimentConfig.from_json(json.load(fh))
    except OSError as e:
        raise UsageError(f"cannot read {a.config}: {e.strerror}") from None
    except (json.JSONDecodeError, harness.ConfigError) as e:
        raise UsageError(f"bad config: {e}") from None
    if a.timing:
        cfg.timing = True
    records, summaries = harness.run_experiment(cfg, a.jobs)
    with open(a.out, "w", newline="") as fh:
        fh.write(harness.records_to_csv(records))
    if a.plot_prefix:
        harness.write_plot_data(summaries, a.plot_prefix)
    _emit({"records": len(records), "summary": summaries})
    return EXIT_ACCEPT


def cmd_lemma_check(a) -> int:
    if a.name not in checks.SUITES:
        raise UsageError(f"unknown suite {a.name!r}; known: {', '.join(checks.SUITES)}")
    rep = checks.run_suite(a.name, a.count, a.seed)
    _emit(rep)
    return EXIT_ACCEPT if rep["failures"] == 0 else EXIT_REJECT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kmt", description="k-monotonicity testers and oracles")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="run a tester on a function file")
    t.add_argument("--tester", required=True, choices=sorted(harness.TESTERS) + ["l1"])
    t.add_argument("--fn", required=True)
    t.add_argument("--k", type=int)
    t.add_argument("--eps", type=float)
    t.add_argument("--eps1", type=float)
    t.add_argument("--eps2", type=float)
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(run=cmd_test)

    d = sub.add_parser("distance", help="exact distance or certified lower bound")
    d.add_argument("--fn", required=True)
    d.add_argument("--k", type=int)
    d.add_argument("--engine", choices=sorted(ENGINES), default="auto")
    d.set_defaults(run=cmd_distance)

    g = sub.add_parser("gen", help="generate an instance")
    g.add_argument("--family", required=True, choices=sorted(adversaries.FAMILIES))
    g.add_argument("--params", help="JSON object of generator parameters")
    g.add_argument("--param", action="append", help="key=value, value parsed as JSON if possible")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--table", action="store_true", help="write the truth table, not the generator call")
    g.add_argument("-o", "--output")
    g.set_defaults(run=cmd_gen)

    e = sub.add_parser("experiment", help="run an experiment matrix")
    e.add_argument("--config", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--jobs", type=int)
    e.add_argument("--timing", action="store_true", help="fill the millis column")
    e.add_argument("--plot-prefix")
    e.set_defaults(run=cmd_experiment)

    c = sub.add_parser("lemma-check", help="run a named invariant suite")
    c.add_argument("--name", required=True)
    c.add_argument("--count", type=int)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(run=cmd_lemma_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except (BudgetExceeded, QueryBudgetExceeded) as e:
        print(f"kmt: budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (UsageError, fnfile.FunctionFileError, PreconditionViolated, ConstructionFailed) as e:
        print(f"kmt: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
