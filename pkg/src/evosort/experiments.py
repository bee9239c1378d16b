"""Estimators and preset drivers for desk-scale experiments.

The estimators are pure functions of recorded rounds / series, so running
them again on a saved log gives the same numbers.  Drivers fan seeds out to
worker processes when asked and merge the results in ``(n, seed)`` order.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .evolving_core import new_state
from .sorters import RoundRecord, SorterKind, SorterMachine, TimeSeries, run_rounds

EPSILON_GOOD_FRACTION = 3 / 20000

SORTER_ALIASES = {
    "repeated-insertion": SorterKind.REPEATED_INSERTION,
    "insertion": SorterKind.REPEATED_INSERTION,
    "quick-then-insertion": SorterKind.QUICK_THEN_INSERTION,
    "quicksort-baseline": SorterKind.REPEATED_QUICKSORT,
    "repeated-quicksort": SorterKind.REPEATED_QUICKSORT,
    "repeated-quicksort-baseline": SorterKind.REPEATED_QUICKSORT,
}


def parse_sorter(name) -> SorterKind:
    if isinstance(name, SorterKind):
        return name
    key = str(name).strip().lower()
    if key in SORTER_ALIASES:
        return SORTER_ALIASES[key]
    return SorterKind(key.replace("-", "_"))


def default_burn_in(kind, n: int) -> int:
    kind = parse_sorter(kind)
    if kind is SorterKind.QUICK_THEN_INSERTION:
        return int(math.ceil(8 * n * math.log2(n)))
    return 2 * n * n


# ----------------------------------------------------------------------
# configuration

@dataclass
class ExperimentConfig:
    preset: str = "simulate"
    n: int | list = 64
    alpha: int = 1
    sorter: str = "repeated_insertion"
    init_policy: str = "uniform_random"
    seeds: list = field(default_factory=lambda: [0])
    steps: int | None = None
    rounds: int | None = None
    sample_every: int = 1
    burn_in: int | None = None
    instrument: bool = False
    out: str | None = None
    # analysis constants
    c: float = 3.0
    trials: int = 1000
    beta: float | None = None
    epsilon: float = EPSILON_GOOD_FRACTION
    lower_bound_c: float = 0.25
    ratio_tolerance: float = 0.5
    scaling_factor: float = 3.0
    check_every: int = 5
    workers: int = 1

    def __post_init__(self):
        self.sorter = parse_sorter(self.sorter).value
        self.seeds = [int(s) for s in self.seeds]
        if self.steps is not None and self.steps <= 0:
            raise ValueError("steps must be positive")
        if self.rounds is not None and self.rounds <= 0:
            raise ValueError("rounds must be positive")
        if self.sample_every < 1:
            raise ValueError("sample_every must be at least 1")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if not self.seeds:
            raise ValueError("at least one seed is needed")
        for n in self.n_list:
            if n < 2:
                raise ValueError("n must be at least 2")

    @property
    def n_list(self) -> list[int]:
        return [int(v) for v in self.n] if isinstance(self.n, (list, tuple)) else [int(self.n)]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TimeSeriesRecord:
    t: int
    I: int
    round: int
    S: int | None = None
    B: int | None = None
    good_swaps: int = 0
    flags: str = ""


CSV_COLUMNS = ("t", "I", "round", "S", "B", "good_swaps", "flags")


def records_from_series(series: TimeSeries) -> list[TimeSeriesRecord]:
    return [
        TimeSeriesRecord(int(t), int(i), int(r), None, None, int(g))
        for t, i, r, g in zip(series.t, series.inversions, series.round_number, series.good_swaps)
    ]


def write_series_csv(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            if isinstance(r, TimeSeriesRecord):
                r = (r.t, r.I, r.round, r.S, r.B, r.good_swaps, r.flags)
            w.writerow(["" if v is None else v for v in r])


def read_series_csv(path) -> list[TimeSeriesRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(TimeSeriesRecord(
                t=int(row["t"]), I=int(row["I"]), round=int(row["round"]),
                S=int(row["S"]) if row["S"] else None,
                B=int(row["B"]) if row["B"] else None,
                good_swaps=int(row["good_swaps"]), flags=row["flags"],
            ))
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_summary_json(path, summary: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")


def fan_out(func, tasks: list, workers: int = 1) -> list:
    """Apply ``func`` to every task, optionally in worker processes; order is preserved."""
    if workers <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks))


# ----------------------------------------------------------------------
# runs

@dataclass
class RunResult:
    n: int
    seed: int
    records: list
    series: TimeSeries
    final_inversions: int
    prelude_steps: int = 0


def run_series(n: int, alpha: int = 1, sorter="repeated_insertion", seed: int = 0,
               steps: int | None = None, rounds: int | None = None, sample_every: int = 1,
               init_policy: str = "uniform_random", backend: str | None = None) -> RunResult:
    state = new_state(n, alpha, init_policy, seed)
    machine = SorterMachine.create(parse_sorter(sorter), state)
    records, series = run_rounds(machine, state, steps=steps, rounds=rounds,
                                 sample_every=sample_every, backend=backend)
    return RunResult(n, seed, records, series, state.inversions, machine.prelude_steps)


def _run_task(task) -> RunResult:
    return run_series(**task)


# ----------------------------------------------------------------------
# estimators

def round_violations(records, n: int) -> dict:
    """Exact per-round identities: length = F + n - 1, drift <= n - 1, length within the ceiling."""
    from .frozen_analysis import round_length_ceiling

    out = {"identity": 0, "drift": 0, "length_ceiling": 0, "over_half_n_squared": 0}
    for r in records:
        if not r.complete or not r.insertion:
            continue
        out["identity"] += r.length != r.F + n - 1
        out["drift"] += r.max_drift > n - 1
        out["length_ceiling"] += r.length > round_length_ceiling(n)
        out["over_half_n_squared"] += not r.length < n * n / 2
    return out


def good_swap_fraction(records, alpha: int = 1) -> list:
    """Good random swaps over round length for every completed round; ``None`` when alpha is 0."""
    out = []
    for r in records:
        if not r.complete:
            continue
        out.append(None if alpha == 0 or r.length == 0 else r.good_swaps / r.length)
    return out


@dataclass
class LowerBoundCheck:
    c: float
    threshold: float
    checked: int
    violations: int
    shortest_ratio: float | None


def round_length_lowerbound_check(records, n: int, c: float) -> LowerBoundCheck:
    """Rounds starting with at least (12c^2 + 2c) n inversions must last at least cn steps."""
    threshold = (12 * c * c + 2 * c) * n
    checked = violations = 0
    shortest = None
    for r in records:
        if not r.complete or r.I_ts < threshold:
            continue
        checked += 1
        violations += r.length < c * n
        ratio = r.length / n
        shortest = ratio if shortest is None else min(shortest, ratio)
    return LowerBoundCheck(c, threshold, checked, violations, shortest)


@dataclass
class BallsBinsResult:
    n: int
    c: float
    policy: str
    balls: int
    bins: int
    sums: np.ndarray

    @property
    def max_sum(self) -> int:
        return int(self.sums.max()) if len(self.sums) else 0

    @property
    def threshold(self) -> float:
        return 3 * self.c * self.c * self.n

    @property
    def exceedances(self) -> int:
        return int(np.sum(self.sums > self.threshold))


def balls_and_bins_trial(n: int, c: float, trials: int, policy: str = "none",
                         seed: int = 0, bins: int | None = None) -> BallsBinsResult:
    """Throw ceil(cn) balls per trial and record the sum of squared bin loads.

    ``policy="none"`` uses ``bins`` bins (default ``n``).  With
    ``"adversarial_lowest"`` each ball avoids the currently emptiest bin
    (lowest index on ties).  That bin never gains a ball while every other
    bin only grows, so it stays the emptiest for the whole trial: the
    throws are uniform over the remaining ``n - 1`` bins.
    """
    if policy not in ("none", "adversarial_lowest"):
        raise ValueError(f"unknown forbidden-bin policy {policy!r}")
    balls = int(math.ceil(c * n))
    m = n if bins is None else int(bins)
    allowed = m - 1 if policy == "adversarial_lowest" and m > 1 else m
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xBA115]))
    sums = np.empty(trials, dtype=np.int64)
    for k in range(trials):
        draws = rng.integers(0, allowed, size=balls)
        if allowed != m:
            draws = draws + 1          # the emptiest bin at the start is bin 0
        loads = np.bincount(draws, minlength=m)
        sums[k] = int(np.dot(loads, loads))
    return BallsBinsResult(n, c, policy, balls, m, sums)


def balls_and_bins_literal(n: int, c: float, seed: int = 0) -> int:
    """One trial that re-finds the emptiest bin before every throw (test oracle).

    Draws from the same stream as the first trial of ``balls_and_bins_trial``.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xBA115]))
    loads = np.zeros(n, dtype=np.int64)
    for _ in range(int(math.ceil(c * n))):
        f = int(np.argmin(loads))
        b = int(rng.integers(0, n - 1)) if n > 1 else 0
        if n > 1 and b >= f:
            b += 1
        loads[b] += 1
    return int(np.dot(loads, loads))


def _median_ratio_table(ns, values) -> list:
    rows = []
    for (n0, v0), (n1, v1) in zip(zip(ns, values), list(zip(ns, values))[1:]):
        rel = abs(v1 - v0) / v0 if v0 else float("inf")
        rows.append({"n_from": n0, "n_to": n1, "from": v0, "to": v1, "relative_change": rel})
    return rows


def steady_state_summary(n_list, seeds, alpha: int = 1, sorter="repeated_insertion",
                         steps=None, burn_in=None, sample_every=None,
                         init_policy: str = "uniform_random", workers: int = 1,
                         backend: str | None = None) -> dict:
    """Post-burn-in statistics of I_t / n per n, plus the consecutive-n ratio table.

    ``steps``, ``burn_in`` and ``sample_every`` default to ``4n^2``, the
    sorter's burn-in and ``n``; callables of ``n`` are accepted as well.
    """
    def per_n(value, default, n):
        if value is None:
            return default(n)
        return int(value(n)) if callable(value) else int(value)

    kind = parse_sorter(sorter)
    tasks, plan = [], {}
    for n in n_list:
        st = per_n(steps, lambda m: 4 * m * m, n)
        bi = per_n(burn_in, lambda m: default_burn_in(kind, m), n)
        se = per_n(sample_every, lambda m: m, n)
        if st < bi:
            raise ValueError(f"budget {st} is shorter than the burn-in {bi} at n={n}")
        plan[n] = (st, bi, se)
        for seed in seeds:
            tasks.append(dict(n=n, alpha=alpha, sorter=kind.value, seed=seed, steps=st,
                              sample_every=se, init_policy=init_policy, backend=backend))
    results = fan_out(_run_task, tasks, workers)
    per = {}
    for res in results:
        st, bi, se = plan[res.n]
        keep = res.series.t >= bi
        per.setdefault(res.n, []).append(res.series.inversions[keep] / res.n)
    table = {}
    for n in n_list:
        pooled = np.concatenate(per[n])
        seed_medians = [float(np.median(x)) for x in per[n]]
        table[n] = {
            "steps": plan[n][0], "burn_in": plan[n][1], "sample_every": plan[n][2],
            "samples": int(len(pooled)),
            "mean": float(pooled.mean()), "median": float(np.median(pooled)),
            "max": float(pooled.max()), "seed_medians": seed_medians,
        }
    medians = [table[n]["median"] for n in n_list]
    return {
        "sorter": kind.value, "alpha": alpha, "seeds": list(seeds),
        "per_n": table, "ratios": _median_ratio_table(list(n_list), medians),
    }


def _hitting_task(task) -> tuple:
    n, alpha, sorter, seed, init_policy, beta, budget, backend = task
    state = new_state(n, alpha, init_policy, seed)
    machine = SorterMachine.create(parse_sorter(sorter), state)
    target = beta * n
    if state.inversions <= target:
        return 0, machine.prelude_steps
    chunk = max(n * n // 4, 1 << 14)
    while state.clock < budget:
        _, series = run_rounds(machine, state, steps=min(chunk, budget - state.clock),
                               sample_every=1, backend=backend)
        hit = np.flatnonzero(series.inversions <= target)
        if len(hit):
            return int(series.t[hit[0]]), machine.prelude_steps
    return None, machine.prelude_steps


def convergence_time(n_list, seeds, beta: float, alpha: int = 1, sorter="quick_then_insertion",
                     init_policy: str = "reversed", budget=None, workers: int = 1,
                     backend: str | None = None) -> dict:
    """First step with I_t <= beta * n, per seed; ``None`` marks a censored run."""
    kind = parse_sorter(sorter)
    tasks = []
    for n in n_list:
        b = 8 * n * n if budget is None else (int(budget(n)) if callable(budget) else int(budget))
        for seed in seeds:
            tasks.append((n, alpha, kind.value, seed, init_policy, beta, b, backend))
    hits = fan_out(_hitting_task, tasks, workers)
    per_n = {}
    for (n, *_rest), (t_hit, prelude) in zip(tasks, hits):
        entry = per_n.setdefault(n, {"times": [], "prelude_steps": []})
        entry["times"].append(t_hit)
        entry["prelude_steps"].append(prelude)
    for n, entry in per_n.items():
        done = [t for t in entry["times"] if t is not None]
        entry["censored"] = len(entry["times"]) - len(done)
        med = float(np.median(done)) if done else None
        entry["median"] = med
        entry["over_n_log_n"] = None if med is None else med / (n * math.log2(n))
        entry["over_n_squared"] = None if med is None else med / (n * n)
    return {"sorter": kind.value, "alpha": alpha, "beta": beta, "init_policy": init_policy,
            "seeds": list(seeds), "per_n": per_n}


def spread(values) -> float:
    """max / min of positive values (inf if any are missing or zero)."""
    vals = [v for v in values if v is not None]
    if len(vals) != len(list(values)) or not vals or min(vals) <= 0:
        return float("inf")
    return max(vals) / min(vals)


# ----------------------------------------------------------------------
# instrumented checks

def _lemma_task(task) -> dict:
    from .frozen_analysis import instrumented_run

    n, seed, rounds, check_every, init_policy = task
    rep = instrumented_run(n, seed, rounds=rounds, check_every=check_every,
                           init_policy=init_policy)
    return {"n": n, "seed": seed, "steps": rep.steps, "rounds": rep.rounds,
            "swaps": rep.swaps, "violations": rep.violations,
            "over_half_n_squared": rep.over_half_n_squared,
            "literal_blame_mismatch": rep.literal_blame_mismatch,
            "cases": rep.cases, "dumps": rep.dumps}


def lemma_checks(n_list, seeds, rounds: int = 3, check_every: int = 5,
                 init_policy: str = "uniform_random", workers: int = 1) -> dict:
    """Instrumented alpha=1 runs with every deterministic claim checked."""
    tasks = [(n, s, rounds, check_every, init_policy) for n in n_list for s in seeds]
    runs = fan_out(_lemma_task, tasks, workers)
    totals: dict = {}
    cases: dict = {}
    for r in runs:
        for k, v in r["violations"].items():
            totals[k] = totals.get(k, 0) + v
        for k, v in r["cases"].items():
            cases[k] = cases.get(k, 0) + v
    dumps = [d for r in runs for d in r["dumps"]][:10]
    return {
        "n_list": list(n_list), "seeds": list(seeds), "rounds": rounds,
        "check_every": check_every, "runs": len(runs),
        "steps": sum(r["steps"] for r in runs),
        "swaps": sum(r["swaps"] for r in runs),
        "violations": totals, "total_violations": sum(totals.values()),
        "over_half_n_squared": sum(r["over_half_n_squared"] for r in runs),
        "literal_blame_mismatch": sum(r["literal_blame_mismatch"] for r in runs),
        "swap_cases": dict(sorted(cases.items())), "dumps": dumps,
    }


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    if not os.access(p, os.W_OK):
        raise PermissionError(f"{p} is not writable")
    return p
