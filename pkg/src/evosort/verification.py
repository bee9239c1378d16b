"""The acceptance suite as plain functions with pinned seeds.

Each ``criterion_*`` returns a :class:`CriterionResult`; ``run_all`` runs
them in order.  ``tests/test_acceptance.py`` and ``evosort verify-all`` are
thin wrappers around these.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import experiments as X
from .evolving_core import ContractViolation, new_state
from .sorters import Phase, SorterKind, SorterMachine, run_rounds

STEADY_NS = (128, 256, 512, 1024)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        bits = ", ".join(f"{k}={_fmt(v)}" for k, v in self.detail.items() if not isinstance(v, (dict, list)))
        return f"[{status}] criterion {self.number}: {self.name} ({bits}; {self.seconds:.1f}s)"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def _timed(number, name, func):
    t0 = time.perf_counter()
    passed, detail = func()
    return CriterionResult(number, name, bool(passed), detail, time.perf_counter() - t0)


# ----------------------------------------------------------------------

def _round_identity_runs(runs: int = 200, rounds: int = 10):
    """Step-by-step runs recording every round and the drift after every step."""
    combos = [(n, a) for n in (16, 64, 256) for a in (0, 1, 2)]
    per = math.ceil(runs / len(combos))
    stats = {"runs": 0, "rounds": 0, "identity_violations": 0, "drift_violations": 0,
             "max_drift_over_n": 0.0}
    for n, alpha in combos:
        for seed in range(per):
            state = new_state(n, alpha, "uniform_random", 1000 + seed)
            machine = SorterMachine.create(SorterKind.REPEATED_INSERTION, state)
            done = 0
            while done < rounds:
                _, _, record = machine.advance(state)
                # machine.I_ts belongs to the round that contains this step,
                # unless the step closed a round and a new one started
                base = record.I_ts if record is not None else machine.I_ts
                drift = state.inversions - base
                if drift > n - 1:
                    stats["drift_violations"] += 1
                stats["max_drift_over_n"] = max(stats["max_drift_over_n"], drift / n)
                if record is not None:
                    done += 1
                    stats["rounds"] += 1
                    if record.length != record.F + n - 1:
                        stats["identity_violations"] += 1
            stats["runs"] += 1
    return stats


_identity_cache: dict = {}


def _identity_stats():
    if "stats" not in _identity_cache:
        _identity_cache["stats"] = _round_identity_runs()
    return _identity_cache["stats"]


def criterion_1() -> CriterionResult:
    def run():
        s = _identity_stats()
        ok = s["runs"] >= 200 and s["identity_violations"] == 0
        return ok, {k: s[k] for k in ("runs", "rounds", "identity_violations")}
    return _timed(1, "round length = F + n - 1", run)


def criterion_2() -> CriterionResult:
    def run():
        s = _identity_stats()
        ok = s["runs"] >= 200 and s["drift_violations"] == 0
        return ok, {k: s[k] for k in ("runs", "drift_violations", "max_drift_over_n")}
    return _timed(2, "within-round drift <= n - 1", run)


def fuzz_inversion_counter(operations: int = 100_000, seed: int = 7) -> dict:
    """Random interleavings of every state operation, recounting after each one."""
    rng = np.random.default_rng(seed)
    done = mismatches = contract_errors = 0
    while done < operations:
        n = int(rng.integers(2, 65))
        state = new_state(n, int(rng.integers(0, 4)), "uniform_random", int(rng.integers(1 << 30)))
        for _ in range(int(rng.integers(50, 400))):
            kind = rng.integers(0, 5)
            if kind == 0:
                state.short_circuit()
            else:
                a, b = (int(v) for v in rng.choice(n, size=2, replace=False))
                state.compare(a, b)
                if kind == 1:
                    j = int(rng.integers(1, n))
                    if state.sigma[j] < state.sigma[j - 1]:
                        state.sorter_swap(j)
                    else:
                        try:
                            state.sorter_swap(j)
                        except ContractViolation:
                            contract_errors += 1
                elif kind == 2:
                    p, q = sorted((a, b))
                    state.sorter_exchange(p, q)
                elif kind == 3:
                    state.random_swap(int(rng.integers(0, n - 1)))
            state.end_step()
            done += 1
            if state.inversions != state.brute_force_inversions():
                mismatches += 1
            if done >= operations:
                break
    return {"operations": done, "mismatches": mismatches, "rejected_swaps": contract_errors}


def criterion_3() -> CriterionResult:
    def run():
        d = fuzz_inversion_counter()
        return d["mismatches"] == 0 and d["operations"] >= 100_000, d
    return _timed(3, "incremental I equals brute-force recount", run)


_lemma_cache: dict = {}


def _lemma_stats(workers: int):
    if "stats" not in _lemma_cache:
        _lemma_cache["stats"] = X.lemma_checks((8, 16, 32), range(100), rounds=3,
                                               check_every=5, workers=workers)
    return _lemma_cache["stats"]


def criterion_4(workers: int = 4) -> CriterionResult:
    def run():
        s = _lemma_stats(workers)
        v = s["violations"]
        keys = ("invariant1", "invariant2", "B_changed_by_sort", "frozen_changed_by_sort")
        detail = {"runs": s["runs"], "swaps": s["swaps"], **{k: v[k] for k in keys}}
        return all(v[k] == 0 for k in keys), detail
    return _timed(4, "counter invariants hold and B unchanged by sorting", run)


def criterion_5(workers: int = 4) -> CriterionResult:
    def run():
        s = _lemma_stats(workers)
        v = s["violations"]
        keys = ("lemma6", "lemma7", "S_oracle")
        detail = {"runs": s["runs"], "steps": s["steps"], **{k: v[k] for k in keys}}
        return all(v[k] == 0 for k in keys), detail
    return _timed(5, "remaining-steps bound, bad-inversion bound, S_t replay oracle", run)


def criterion_6() -> CriterionResult:
    def run():
        n, c, trials = 10_000, 3.0, 1000
        detail, ok = {"threshold": 3 * c * c * n}, True
        for policy in ("none", "adversarial_lowest"):
            r = X.balls_and_bins_trial(n, c, trials, policy, seed=2024)
            detail[f"{policy}_max"] = r.max_sum
            detail[f"{policy}_exceed"] = r.exceedances
            ok &= r.exceedances == 0
        return ok, detail
    return _timed(6, "balls and bins sum of squares <= 3c^2 n", run)


_steady_cache: dict = {}


def _steady(workers: int):
    if "s" not in _steady_cache:
        _steady_cache["s"] = X.steady_state_summary(STEADY_NS, range(20), alpha=1,
                                                    workers=workers)
    return _steady_cache["s"]


def criterion_7(workers: int = 4) -> CriterionResult:
    def run():
        s = _steady(workers)
        changes = [r["relative_change"] for r in s["ratios"]]
        detail = {f"median_I/n@{n}": s["per_n"][n]["median"] for n in STEADY_NS}
        detail["max_relative_change"] = max(changes)
        return max(changes) < 0.5, detail
    return _timed(7, "steady-state I/n stable across n", run)


def criterion_8(workers: int = 4) -> CriterionResult:
    def run():
        s = _steady(workers)
        beta = 2 * max(s["per_n"][n]["median"] for n in STEADY_NS)
        quick = X.convergence_time(STEADY_NS, range(20), beta, sorter="quick_then_insertion",
                                   workers=workers)
        ins = X.convergence_time(STEADY_NS, range(20), beta, sorter="repeated_insertion",
                                 workers=workers)
        q_ratio = [quick["per_n"][n]["over_n_log_n"] for n in STEADY_NS]
        i_ratio = [ins["per_n"][n]["over_n_squared"] for n in STEADY_NS]
        censored = sum(d["censored"] for d in quick["per_n"].values()) + \
            sum(d["censored"] for d in ins["per_n"].values())
        detail = {"beta": beta, "quick_spread": X.spread(q_ratio),
                  "insertion_spread": X.spread(i_ratio), "censored": censored,
                  "quick_over_nlogn": q_ratio, "insertion_over_n2": i_ratio}
        ok = censored == 0 and detail["quick_spread"] <= 3 and detail["insertion_spread"] <= 3
        return ok, detail
    return _timed(8, "convergence scales as n log n / n^2", run)


def steady_round_fractions(n: int = 512, seeds=range(50), workers: int = 4) -> list:
    burn = X.default_burn_in("repeated_insertion", n)
    tasks = [dict(n=n, alpha=1, sorter="repeated_insertion", seed=s, steps=burn + 2 * n * n,
                  sample_every=n * n) for s in seeds]
    fractions = []
    for res in X.fan_out(X._run_task, tasks, workers):
        rounds = [r for r in res.records if r.complete and r.t_s >= burn]
        fractions.extend(X.good_swap_fraction(rounds, alpha=1))
    return fractions


def criterion_9(workers: int = 4) -> CriterionResult:
    def run():
        fr = steady_round_fractions(workers=workers)
        lo = min(fr)
        detail = {"rounds": len(fr), "min_fraction": lo, "epsilon": X.EPSILON_GOOD_FRACTION,
                  "median_fraction": float(np.median(fr))}
        return len(fr) > 0 and lo > X.EPSILON_GOOD_FRACTION, detail
    return _timed(9, "good-swap fraction above epsilon every round", run)


def criterion_10() -> CriterionResult:
    def run():
        ins_fail = quick_fail = cases = 0
        for n in (2, 3, 5, 16, 64, 200):
            for policy in ("uniform_random", "reversed", "identity"):
                for seed in range(5):
                    cases += 1
                    state = new_state(n, 0, policy, seed)
                    machine = SorterMachine.create(SorterKind.REPEATED_INSERTION, state)
                    records, _ = run_rounds(machine, state, rounds=1, engine="object")
                    r = records[0]
                    if not (r.complete and state.inversions == 0 and r.F == r.I_ts):
                        ins_fail += 1
                    state = new_state(n, 0, policy, seed)
                    machine = SorterMachine.create(SorterKind.QUICK_THEN_INSERTION, state)
                    while machine.phase is Phase.QUICKSORT_PRELUDE:
                        machine.advance(state)
                    if state.inversions != 0 or state.brute_force_inversions() != 0:
                        quick_fail += 1
        return ins_fail == 0 and quick_fail == 0, {
            "cases": cases, "insertion_failures": ins_fail, "prelude_failures": quick_fail}
    return _timed(10, "alpha = 0 sorts exactly", run)


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10)


def run_all(workers: int = 4, echo=None) -> list[CriterionResult]:
    out = []
    for crit in CRITERIA:
        try:
            res = crit(workers=workers) if "workers" in crit.__code__.co_varnames else crit()
        except Exception as exc:  # report, don't hide
            res = CriterionResult(CRITERIA.index(crit) + 1, crit.__name__, False,
                                  {"error": repr(exc)})
        out.append(res)
        if echo is not None:
            echo(res.line())
    return out
