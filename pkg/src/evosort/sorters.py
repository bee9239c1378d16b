"""Resumable sorters that spend exactly one comparison per step.

Repeated insertion sort is driven by the pending inner-loop guard at
``(i, j)``.  Every evaluation of that guard is a step, including the
``j == 0`` short circuit, so a round of ``F`` fixing comparisons takes
``F + n - 1`` steps.

The quicksort used by the prelude and by the restart-forever baseline is an
in-place Lomuto partition with a uniformly random pivot, driven by an
explicit stack of ``(lo, hi)`` frames.  Moving the pivot into place does
not cost a comparison and happens at the start of the step that performs
the first comparison of a partition.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from . import _kernels as K
from .evolving_core import EvolvingState, StepLog


class SorterKind(str, Enum):
    REPEATED_INSERTION = "repeated_insertion"
    QUICK_THEN_INSERTION = "quick_then_insertion"
    REPEATED_QUICKSORT = "repeated_quicksort_baseline"


class Phase(str, Enum):
    QUICKSORT_PRELUDE = "quicksort_prelude"
    INSERTION_ROUNDS = "insertion_rounds"


class StepOutcome(str, Enum):
    COMPARISON_MADE = "comparison-made"
    ROUND_COMPLETED = "round-completed"
    PRELUDE_COMPLETED = "prelude-completed"


_KIND_CODE = {
    SorterKind.REPEATED_INSERTION: K.K_INSERTION,
    SorterKind.QUICK_THEN_INSERTION: K.K_QUICK_THEN_INSERTION,
    SorterKind.REPEATED_QUICKSORT: K.K_QUICK_BASELINE,
}


@dataclass
class RoundRecord:
    """One pass of the outer ``while true`` loop (or one baseline quicksort pass).

    ``F`` counts comparisons whose outcome made the sorter move items; for
    insertion rounds that is the number of inversions fixed at comparison
    time.  ``max_drift`` is the largest ``I_t - I_ts`` seen in the round.
    """

    round_number: int
    t_s: int
    t_e: int
    F: int
    I_ts: int
    I_te: int
    max_drift: int
    good_swaps: int
    insertion: bool = True
    complete: bool = True

    @property
    def length(self) -> int:
        return self.t_e - self.t_s

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class TimeSeries:
    t: np.ndarray
    inversions: np.ndarray
    round_number: np.ndarray
    good_swaps: np.ndarray

    @classmethod
    def from_rows(cls, rows) -> "TimeSeries":
        arr = np.asarray(rows, dtype=np.int64).reshape(-1, K.C_SIZE)
        return cls(arr[:, K.C_T].copy(), arr[:, K.C_I].copy(),
                   arr[:, K.C_ROUND].copy(), arr[:, K.C_GOOD].copy())

    def __len__(self) -> int:
        return len(self.t)

    def concat(self, other: "TimeSeries") -> "TimeSeries":
        return TimeSeries(
            np.concatenate([self.t, other.t]),
            np.concatenate([self.inversions, other.inversions]),
            np.concatenate([self.round_number, other.round_number]),
            np.concatenate([self.good_swaps, other.good_swaps]),
        )


@dataclass
class SorterMachine:
    kind: SorterKind
    n: int
    phase: Phase = Phase.INSERTION_ROUNDS
    i: int = 1
    j: int = 1
    round_number: int = 0
    in_round: bool = False
    frames: list = field(default_factory=list)
    partition: list | None = None   # [lo, hi, k, store]
    t_s: int = 0
    F: int = 0
    I_ts: int = 0
    max_drift: int = 0
    good: int = 0
    good_total: int = 0
    prelude_steps: int = 0
    _finished: bool = False

    @classmethod
    def create(cls, kind, state: EvolvingState) -> "SorterMachine":
        kind = SorterKind(kind)
        m = cls(kind=kind, n=state.n)
        if kind is SorterKind.REPEATED_INSERTION:
            m._start_round(state)
        else:
            m.phase = Phase.QUICKSORT_PRELUDE
            m.frames = [(0, state.n - 1)]
            if kind is SorterKind.REPEATED_QUICKSORT:
                m._start_round(state)
        return m

    # ------------------------------------------------------------------
    @property
    def in_insertion_round(self) -> bool:
        return self.phase is Phase.INSERTION_ROUNDS and self.in_round

    @property
    def round_done(self) -> bool:
        """True between the final guard of a round and the end of that step."""
        return self._finished

    def _start_round(self, state: EvolvingState) -> None:
        self.in_round = True
        self.t_s = state.clock
        self.I_ts = state.inversions
        self.F = 0
        self.max_drift = 0
        self.good = 0
        if self.phase is Phase.INSERTION_ROUNDS:
            self.i = 1
            self.j = 1

    def sort_substep(self, state: EvolvingState) -> StepOutcome:
        """Comparison plus the sorter's reaction to it; the clock does not move yet."""
        if state.n != self.n:
            raise ValueError("machine and state disagree on n")
        if self.phase is Phase.QUICKSORT_PRELUDE:
            return self._quick_substep(state)
        return self._insertion_substep(state)

    def _insertion_substep(self, state: EvolvingState) -> StepOutcome:
        j = self.j
        if j > 0:
            fixes = state.compare(j, j - 1)
        else:
            state.short_circuit()
            fixes = False
        if fixes:
            state.sorter_swap(j)
            self.F += 1
            self.j = j - 1
            return StepOutcome.COMPARISON_MADE
        self.i += 1
        if self.i == self.n:
            self._finished = True
            return StepOutcome.ROUND_COMPLETED
        self.j = self.i
        return StepOutcome.COMPARISON_MADE

    def _quick_substep(self, state: EvolvingState) -> StepOutcome:
        if self.partition is None:
            lo, hi = self.frames.pop()
            u = state.rng.next_pivot_fraction()
            p = min(lo + int(u * (hi - lo + 1)), hi)
            if p != hi:
                state.sorter_exchange(p, hi)
            self.partition = [lo, hi, lo, lo]
        lo, hi, k, store = self.partition
        if state.compare(k, hi):
            if store != k:
                state.sorter_exchange(store, k)
            store += 1
            self.F += 1
        k += 1
        if self.kind is SorterKind.QUICK_THEN_INSERTION:
            self.prelude_steps += 1
        if k < hi:
            self.partition = [lo, hi, k, store]
            return StepOutcome.COMPARISON_MADE
        if store != hi:
            state.sorter_exchange(store, hi)
        self.partition = None
        if hi - (store + 1) >= 1:
            self.frames.append((store + 1, hi))
        if store - 1 - lo >= 1:
            self.frames.append((lo, store - 1))
        if self.frames:
            return StepOutcome.COMPARISON_MADE
        if self.kind is SorterKind.QUICK_THEN_INSERTION:
            self.phase = Phase.INSERTION_ROUNDS
            self.i, self.j = 1, 1
            return StepOutcome.PRELUDE_COMPLETED
        self._finished = True
        return StepOutcome.ROUND_COMPLETED

    def after_step(self, state: EvolvingState, log: StepLog) -> RoundRecord | None:
        """Drift and good-swap bookkeeping; closes the round if its last step just ran."""
        good = log.good_swaps
        self.good_total += good
        if self.in_round:
            self.good += good
            self.max_drift = max(self.max_drift, state.inversions - self.I_ts)
        record = None
        if self._finished:
            record = RoundRecord(
                round_number=self.round_number,
                t_s=self.t_s,
                t_e=state.clock,
                F=self.F,
                I_ts=self.I_ts,
                I_te=state.inversions,
                max_drift=self.max_drift,
                good_swaps=self.good,
                insertion=self.kind is not SorterKind.REPEATED_QUICKSORT,
            )
            self.round_number += 1
            self.in_round = False
            self._finished = False
            if self.kind is SorterKind.REPEATED_QUICKSORT:
                self.frames = [(0, self.n - 1)]
        if not self.in_round and (
            self.phase is Phase.INSERTION_ROUNDS or self.kind is SorterKind.REPEATED_QUICKSORT
        ):
            self._start_round(state)
        return record

    def advance(self, state: EvolvingState) -> tuple[StepOutcome, StepLog, RoundRecord | None]:
        """Exactly one step: comparison, sorter reaction, random swaps, bookkeeping."""
        outcome = self.sort_substep(state)
        log = state.end_step()
        record = self.after_step(state, log)
        return outcome, log, record

    def open_record(self, state: EvolvingState) -> RoundRecord | None:
        """The round in progress, marked incomplete."""
        if not self.in_round:
            return None
        return RoundRecord(
            round_number=self.round_number,
            t_s=self.t_s,
            t_e=state.clock,
            F=self.F,
            I_ts=self.I_ts,
            I_te=state.inversions,
            max_drift=self.max_drift,
            good_swaps=self.good,
            insertion=self.kind is not SorterKind.REPEATED_QUICKSORT,
            complete=False,
        )

    # ------------------------------------------------------------------
    # flat encoding shared with the kernel
    def pack(self) -> tuple[np.ndarray, np.ndarray]:
        if self._finished:
            raise RuntimeError("cannot pack a machine in the middle of a step")
        ms = np.zeros(K.M_SIZE, dtype=np.int64)
        ms[K.M_KIND] = _KIND_CODE[self.kind]
        ms[K.M_PHASE] = K.PH_QUICK if self.phase is Phase.QUICKSORT_PRELUDE else K.PH_INSERTION
        ms[K.M_I] = self.i
        ms[K.M_J] = self.j
        ms[K.M_ROUND] = self.round_number
        ms[K.M_IN_ROUND] = int(self.in_round)
        ms[K.M_T_S] = self.t_s
        ms[K.M_F] = self.F
        ms[K.M_I_TS] = self.I_ts
        ms[K.M_MAX_DRIFT] = self.max_drift
        ms[K.M_GOOD] = self.good
        ms[K.M_GOOD_TOTAL] = self.good_total
        ms[K.M_PRELUDE_STEPS] = self.prelude_steps
        if self.partition is not None:
            ms[K.M_PART] = 1
            ms[K.M_P_LO], ms[K.M_P_HI], ms[K.M_P_K], ms[K.M_P_STORE] = self.partition
        stack = np.zeros(2 * self.n + 4, dtype=np.int64)
        for idx, (lo, hi) in enumerate(self.frames):
            stack[2 * idx] = lo
            stack[2 * idx + 1] = hi
        ms[K.M_TOP] = len(self.frames)
        return ms, stack

    def unpack(self, ms: np.ndarray, stack: np.ndarray) -> None:
        self.phase = Phase.QUICKSORT_PRELUDE if ms[K.M_PHASE] == K.PH_QUICK else Phase.INSERTION_ROUNDS
        self.i = int(ms[K.M_I])
        self.j = int(ms[K.M_J])
        self.round_number = int(ms[K.M_ROUND])
        self.in_round = bool(ms[K.M_IN_ROUND])
        self.t_s = int(ms[K.M_T_S])
        self.F = int(ms[K.M_F])
        self.I_ts = int(ms[K.M_I_TS])
        self.max_drift = int(ms[K.M_MAX_DRIFT])
        self.good = int(ms[K.M_GOOD])
        self.good_total = int(ms[K.M_GOOD_TOTAL])
        self.prelude_steps = int(ms[K.M_PRELUDE_STEPS])
        if ms[K.M_PART]:
            self.partition = [int(ms[K.M_P_LO]), int(ms[K.M_P_HI]), int(ms[K.M_P_K]), int(ms[K.M_P_STORE])]
        else:
            self.partition = None
        top = int(ms[K.M_TOP])
        self.frames = [(int(stack[2 * idx]), int(stack[2 * idx + 1])) for idx in range(top)]


def _rows_to_records(rows: np.ndarray, insertion: bool) -> list[RoundRecord]:
    return [
        RoundRecord(
            round_number=int(r[K.R_ROUND]), t_s=int(r[K.R_T_S]), t_e=int(r[K.R_T_E]),
            F=int(r[K.R_F]), I_ts=int(r[K.R_I_TS]), I_te=int(r[K.R_I_TE]),
            max_drift=int(r[K.R_MAX_DRIFT]), good_swaps=int(r[K.R_GOOD]),
            insertion=insertion,
        )
        for r in rows
    ]


def run_rounds(
    machine: SorterMachine,
    state: EvolvingState,
    steps: int | None = None,
    rounds: int | None = None,
    sample_every: int = 1,
    engine: str = "kernel",
    backend: str | None = None,
) -> tuple[list[RoundRecord], TimeSeries]:
    """Advance until ``steps`` steps or ``rounds`` completed rounds, whichever comes first.

    Returns the completed round records (plus a trailing record with
    ``complete=False`` when a round is cut off) and the state sampled after
    every step whose clock is a multiple of ``sample_every``.

    ``engine="object"`` steps the :class:`SorterMachine` in Python;
    ``engine="kernel"`` runs the flat-array kernel (numba or interpreted,
    per ``backend``).  Both consume the same random stream.
    """
    if steps is None and rounds is None:
        raise ValueError("give a step budget, a round budget, or both")
    if (steps is not None and steps < 0) or (rounds is not None and rounds < 0):
        raise ValueError("budgets must be non-negative")
    if sample_every < 1:
        raise ValueError("sample_every must be at least 1")
    if engine == "object":
        records, series = _run_object(machine, state, steps, rounds, sample_every)
    elif engine == "kernel":
        records, series = _run_kernel(machine, state, steps, rounds, sample_every, backend)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    tail = machine.open_record(state)
    if tail is not None and tail.t_e > tail.t_s:
        records.append(tail)
    return records, series


def _run_object(machine, state, steps, rounds, sample_every):
    records: list[RoundRecord] = []
    rows = []
    done = 0
    while (steps is None or done < steps) and (rounds is None or len(records) < rounds):
        _, _, record = machine.advance(state)
        done += 1
        if record is not None:
            records.append(record)
        if state.clock % sample_every == 0:
            rows.append((state.clock, state.inversions, machine.round_number, machine.good_total))
    return records, TimeSeries.from_rows(rows)


_WINDOW = 1 << 20


def _run_kernel(machine, state, steps, rounds, sample_every, backend):
    steps_left = steps
    sim = K.simulate.select(backend)
    ms, stack = machine.pack()
    scal = np.zeros(K.S_SIZE, dtype=np.int64)
    scal[K.S_CLOCK] = state.clock
    scal[K.S_INV] = state.inversions
    insertion = machine.kind is not SorterKind.REPEATED_QUICKSORT
    all_rounds: list[RoundRecord] = []
    series = TimeSeries.from_rows([])
    max_rounds = -1 if rounds is None else rounds
    while True:
        if steps_left is not None and steps_left <= 0:
            break
        if rounds is not None and len(all_rounds) >= rounds:
            break
        chunk = _WINDOW if steps_left is None else min(steps_left, _WINDOW)
        swap_buf, swap_pos = state.rng.swap_window(state.alpha * chunk)
        uses_pivots = machine.kind is SorterKind.REPEATED_QUICKSORT or (
            machine.phase is Phase.QUICKSORT_PRELUDE
        )
        pivot_buf, pivot_pos = state.rng.pivot_window(state.rng.BLOCK if uses_pivots else 0)
        scal[K.S_SWAP_POS] = swap_pos
        scal[K.S_PIVOT_POS] = pivot_pos
        scal[K.S_N_SAMPLES] = 0
        scal[K.S_N_ROUNDS] = 0
        samples = np.zeros((chunk // sample_every + 2, K.C_SIZE), dtype=np.int64)
        max_round_rows = chunk // (state.n - 1) + 2
        rounds_out = np.zeros((max_round_rows, K.R_SIZE), dtype=np.int64)
        budget_rounds = -1 if rounds is None else max_rounds - len(all_rounds)
        done = sim(state.maintained, state.sigma, state.sigma_inv, scal, state.alpha, ms, stack,
                   swap_buf, pivot_buf, chunk, budget_rounds, sample_every, samples, rounds_out)
        state.rng.commit_swaps(int(scal[K.S_SWAP_POS]))
        state.rng.commit_pivots(int(scal[K.S_PIVOT_POS]))
        state.clock = int(scal[K.S_CLOCK])
        state.inversions = int(scal[K.S_INV])
        all_rounds.extend(_rows_to_records(rounds_out[: scal[K.S_N_ROUNDS]], insertion))
        series = series.concat(TimeSeries.from_rows(samples[: scal[K.S_N_SAMPLES]]))
        if steps_left is not None:
            steps_left -= done
    machine.unpack(ms, stack)
    return all_rounds, series
