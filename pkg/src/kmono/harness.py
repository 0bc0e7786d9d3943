"""Experiment matrix runner: seeded trials, CSV records and Wilson summaries.

A config is JSON::

    {"cells": [{"tester": "line-onesided", "family": "gv_line",
                "params": {"n": 4800, "k": 8, "eps": 0.05},
                "k": 8, "eps": 0.05, "trials": 50, "seed": 1,
                "instances": "per_trial", "certified_at_least": 0.05}],
     "timing": false}

Each trial derives its seed from (cell seed, trial index). With
``instances: "per_trial"`` each trial draws its own instance; otherwise one
instance is drawn from the cell seed.
"""
from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import binomtest

from . import adversaries
from .cube import test_cube_one_sided
from .grid2 import test_grid2_2monotone
from .highdim import tolerant_test_agnostic, tolerant_test_full
from .line import test_line_one_sided, test_line_two_sided

RECORDS_VERSION = "kmt-records v1"
COLUMNS = ["tester", "family", "n", "d", "k", "eps1", "eps2", "trial", "seed", "verdict",
           "queries", "cert_distance", "millis"]
MAX_CERTIFY_ATTEMPTS = 100

# each tester takes (oracle, cell, seed); single-eps testers read "eps"
TESTERS = {
    "line-onesided": lambda f, c, s: test_line_one_sided(f, c["k"], c["eps"], s),
    "line-twosided": lambda f, c, s: test_line_two_sided(f, c["k"], c["eps"], s),
    "grid2": lambda f, c, s: test_grid2_2monotone(f, c["eps"], s),
    "cube": lambda f, c, s: test_cube_one_sided(f, c["k"], c["eps"], s),
    "highdim-full": lambda f, c, s: tolerant_test_full(f, c["k"], c["eps1"], c["eps2"], s),
    "highdim-agnostic": lambda f, c, s: tolerant_test_agnostic(f, c["k"], c["eps1"], c["eps2"], s),
}


class ConfigError(ValueError):
    pass


def derive_seed(base: int, *path: int) -> int:
    """A 63-bit seed split off (base, path) by SeedSequence."""
    ss = np.random.SeedSequence([int(base), *map(int, path)])
    return int(ss.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))


@dataclass
class Cell:
    tester: str
    family: str
    params: dict
    k: int
    trials: int
    seed: int = 0
    eps: float | None = None
    eps1: float | None = None
    eps2: float | None = None
    instances: str = "shared"
    certified_at_least: float | None = None


@dataclass
class ExperimentConfig:
    cells: list
    timing: bool = False
    jobs: int = 1

    @classmethod
    def from_json(cls, obj) -> "ExperimentConfig":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if not isinstance(obj, dict) or not isinstance(obj.get("cells"), list):
            raise ConfigError("config needs a 'cells' list")
        cells = []
        for i, raw in enumerate(obj["cells"]):
            try:
                cell = Cell(**raw)
            except TypeError as e:
                raise ConfigError(f"cell {i}: {e}") from None
            validate_cell(cell, i)
            cells.append(cell)
        return cls(cells, bool(obj.get("timing", False)), int(obj.get("jobs", 1)))


def validate_cell(cell: Cell, i: int = 0) -> None:
    if cell.tester not in TESTERS:
        raise ConfigError(f"cell {i}: unknown tester {cell.tester!r}")
    if cell.family not in adversaries.FAMILIES:
        raise ConfigError(f"cell {i}: unknown family {cell.family!r}")
    if not isinstance(cell.trials, int) or cell.trials < 1:
        raise ConfigError(f"cell {i}: trials must be a positive integer")
    two = cell.tester.startswith("highdim")
    if two and (cell.eps1 is None or cell.eps2 is None):
        raise ConfigError(f"cell {i}: {cell.tester} needs eps1 and eps2")
    if not two and cell.eps is None:
        raise ConfigError(f"cell {i}: {cell.tester} needs eps")
    if cell.instances not in ("shared", "per_trial"):
        raise ConfigError(f"cell {i}: instances must be 'shared' or 'per_trial'")


def _instance(cell: Cell, seed: int):
    """Generate an instance, redrawing until its certificate clears the floor."""
    for attempt in range(MAX_CERTIFY_ATTEMPTS):
        s = seed if attempt == 0 else derive_seed(seed, attempt)
        bundle = adversaries.generate(cell.family, cell.params, s)
        if cell.certified_at_least is None:
            return bundle
        if adversaries.certified_distance(bundle) >= Fraction(str(cell.certified_at_least)):
            return bundle
    raise adversaries.ConstructionFailed(
        f"no instance certified >= {cell.certified_at_least} in {MAX_CERTIFY_ATTEMPTS} draws")


def _fmt(x) -> str:
    return "" if x is None else repr(x) if isinstance(x, float) else str(x)


def run_trial(cell: Cell, trial: int, timing: bool = False, bundle=None) -> dict:
    seed = derive_seed(cell.seed, trial)
    rec = {"tester": cell.tester, "family": cell.family, "k": cell.k,
           "eps1": _fmt(cell.eps1), "eps2": _fmt(cell.eps2 if cell.eps is None else cell.eps),
           "trial": trial, "seed": seed, "n": "", "d": "", "verdict": "", "queries": "",
           "cert_distance": "", "millis": ""}
    start = time.perf_counter()
    try:
        if isinstance(bundle, Exception):
            raise bundle
        if bundle is None:
            bundle = _instance(cell, derive_seed(cell.seed, trial, 1))
        rec["n"], rec["d"] = bundle.domain.n, bundle.domain.d
        rec["cert_distance"] = bundle.metadata["distance"]
        v = TESTERS[cell.tester](bundle.fresh_oracle(), asdict(cell), seed)
        rec["verdict"], rec["queries"] = v.decision, v.queries
    except Exception as e:  # recorded per cell, never fatal
        rec["verdict"] = f"ERROR:{type(e).__name__}"
    if timing:
        rec["millis"] = f"{1000 * (time.perf_counter() - start):.1f}"
    return rec


def _run_chunk(args):
    cell, trials, timing, bundle = args
    return [run_trial(cell, t, timing, bundle) for t in trials]


def resolve_jobs(jobs: int | None) -> int:
    env = os.environ.get("KMT_JOBS")
    if env:
        return max(1, int(env))
    return max(1, int(jobs or 1))


def run_experiment(config: ExperimentConfig, jobs: int | None = None) -> tuple[list, list]:
    """Run every cell; returns (records in cell and trial order, per-cell summaries)."""
    jobs = resolve_jobs(jobs if jobs is not None else config.jobs)
    records, summaries = [], []
    for cell in config.cells:
        bundle = None
        if cell.instances == "shared":
            try:
                bundle = _instance(cell, derive_seed(cell.seed, 0, 1))
            except Exception as e:
                bundle = e  # every trial records the failure
        trials = list(range(cell.trials))
        if jobs == 1 or cell.trials == 1:
            rows = _run_chunk((cell, trials, config.timing, bundle))
        else:
            chunks = [trials[i::jobs] for i in range(jobs)]
            with ProcessPoolExecutor(jobs) as ex:
                parts = list(ex.map(_run_chunk, [(cell, c, config.timing, bundle) for c in chunks]))
            rows = sorted((r for p in parts for r in p), key=lambda r: r["trial"])
        records.extend(rows)
        summaries.append(summarize(cell, rows))
    return records, summaries


def wilson(successes: int, n: int, level: float = 0.95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    ci = binomtest(successes, n).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def summarize(cell: Cell, rows: list) -> dict:
    done = [r for r in rows if not str(r["verdict"]).startswith("ERROR")]
    acc = sum(r["verdict"] == "ACCEPT" for r in done)
    q = [int(r["queries"]) for r in done]
    lo, hi = wilson(acc, len(done))
    rlo, rhi = wilson(len(done) - acc, len(done))
    return {"tester": cell.tester, "family": cell.family, "trials": len(rows),
            "errors": len(rows) - len(done), "accept": acc, "accept_rate": acc / len(done) if done else None,
            "accept_wilson95": [lo, hi], "reject_wilson95": [rlo, rhi],
            "mean_queries": float(np.mean(q)) if q else None, "max_queries": max(q) if q else None}


def records_to_csv(records: list) -> str:
    buf = io.StringIO()
    buf.write(f"# {RECORDS_VERSION}\n")
    w = csv.DictWriter(buf, COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow({c: r[c] for c in COLUMNS})
    return buf.getvalue()


def parse_records(text: str) -> list:
    lines = text.splitlines()
    if not lines or lines[0] != f"# {RECORDS_VERSION}":
        raise ValueError(f"records must start with '# {RECORDS_VERSION}'")
    rows = list(csv.DictReader(lines[1:]))
    if rows and list(rows[0].keys()) != COLUMNS:
        raise ValueError("unexpected record columns")
    return rows


def write_plot_data(summaries: list, prefix: str) -> list:
    """One two-column file per metric: cell index and value."""
    paths = []
    for metric in ("accept_rate", "mean_queries", "max_queries"):
        path = f"{prefix}.{metric}.dat"
        with open(path, "w") as fh:
            for i, s in enumerate(summaries):
                if s[metric] is not None:
                    fh.write(f"{i} {s[metric]}\n")
        paths.append(path)
    return paths
