import math

import numpy as np
import pytest

from evosort import EvolvingState, Phase, SorterKind, SorterMachine, StepOutcome, new_state, run_rounds
from evosort.evolving_core import SHORT_CIRCUIT
from evosort.frozen_analysis import round_length_ceiling


def fresh(kind, n, alpha=1, policy="uniform_random", seed=0):
    state = new_state(n, alpha, policy, seed)
    return state, SorterMachine.create(kind, state)


def test_two_items_reversed_round():
    state = EvolvingState(2, 0, [1, 0], seed=0)
    m = SorterMachine.create("repeated_insertion", state)
    outcome, log, rec = m.advance(state)
    assert outcome is StepOutcome.COMPARISON_MADE
    assert log.compare_positions == (1, 0) and log.sort_swap_applied
    outcome, log, rec = m.advance(state)
    assert outcome is StepOutcome.ROUND_COMPLETED
    assert log.compare_positions == SHORT_CIRCUIT
    assert rec.length == 2 == rec.F + 2 - 1 and rec.F == 1


def test_sorted_round_without_swaps():
    state, m = fresh("repeated_insertion", 3, alpha=0, policy="identity")
    records, _ = run_rounds(m, state, rounds=1, engine="object")
    assert records[0].length == 2 and records[0].F == 0


def test_zero_round_budget():
    state, m = fresh("repeated_insertion", 8)
    records, series = run_rounds(m, state, rounds=0)
    assert records == [] and len(series) == 0


def test_budget_validation():
    state, m = fresh("repeated_insertion", 8)
    with pytest.raises(ValueError):
        run_rounds(m, state)
    with pytest.raises(ValueError):
        run_rounds(m, state, steps=10, sample_every=0)


def replay_F(n, seed, rounds, alpha=1):
    """Recount F from the step logs alone."""
    state, m = fresh("repeated_insertion", n, alpha, seed=seed)
    per_round, current, out = [], 0, []
    while len(out) < rounds:
        _, log, rec = m.advance(state)
        current += log.sort_swap_applied
        if rec is not None:
            out.append(rec)
            per_round.append(current)
            current = 0
    return out, per_round


def test_round_identity_against_step_logs():
    records, fixes = replay_F(16, 11, 5)
    for rec, f in zip(records, fixes):
        assert rec.F == f
        assert rec.length == rec.F + 16 - 1


@pytest.mark.parametrize("alpha", [1, 2])
def test_round_invariants_n32(alpha):
    state, m = fresh("repeated_insertion", 32, alpha, seed=5)
    records, _ = run_rounds(m, state, rounds=10, engine="object")
    assert len(records) == 10
    for r in records:
        assert r.complete
        assert r.length == r.F + 31
        assert r.max_drift <= 31
        assert r.length < 32 * 32 / 2


def test_alpha0_identity_stays_sorted():
    state, m = fresh("repeated_insertion", 32, alpha=0, policy="identity")
    records, _ = run_rounds(m, state, rounds=6)
    assert all(r.F == 0 and r.length == 31 for r in records)


@pytest.mark.parametrize("policy", ["uniform_random", "reversed"])
def test_alpha0_first_round_sorts(policy):
    state, m = fresh("repeated_insertion", 40, alpha=0, policy=policy, seed=2)
    I0 = state.inversions
    records, _ = run_rounds(m, state, rounds=1)
    assert state.inversions == 0 == state.brute_force_inversions()
    assert records[0].F == I0


def test_reversed_round_reaches_the_ceiling():
    # a reversed list makes every insertion travel to the front
    for n in (4, 5, 10, 33):
        state, m = fresh("repeated_insertion", n, alpha=0, policy="reversed")
        records, _ = run_rounds(m, state, rounds=1)
        assert records[0].length == round_length_ceiling(n)
        assert records[0].length >= n * n / 2


def test_ceiling_bounds_every_round():
    for seed in range(5):
        state, m = fresh("repeated_insertion", 12, alpha=2, policy="reversed", seed=seed)
        records, _ = run_rounds(m, state, rounds=20)
        assert all(r.length <= round_length_ceiling(12) for r in records)


def test_semi_sorted_index_bounds():
    state, m = fresh("repeated_insertion", 20, seed=3)
    for _ in range(2000):
        if m.in_round and not m.round_done:
            assert 0 <= m.j <= m.i <= 19
        m.advance(state)


def test_prelude_alpha0_sorts():
    state, m = fresh("quick_then_insertion", 64, alpha=0, seed=4)
    while m.phase is Phase.QUICKSORT_PRELUDE:
        outcome, _, _ = m.advance(state)
    assert outcome is StepOutcome.PRELUDE_COMPLETED
    assert state.inversions == 0


def test_prelude_on_two_items_terminates():
    for sigma in ([0, 1], [1, 0]):
        state = EvolvingState(2, 1, sigma, seed=0)
        m = SorterMachine.create("quick_then_insertion", state)
        steps = 0
        while m.phase is Phase.QUICKSORT_PRELUDE:
            m.advance(state)
            steps += 1
        assert steps == m.prelude_steps == 1


def test_prelude_comparison_count():
    n = 256
    counts = []
    for seed in range(50):
        state, m = fresh("quick_then_insertion", n, seed=seed)
        while m.phase is Phase.QUICKSORT_PRELUDE:
            m.advance(state)
        counts.append(m.prelude_steps)
    med = float(np.median(counts))
    lg = n * math.log2(n)
    assert lg / 2 <= med <= 4 * lg


def test_prelude_then_rounds_start():
    state, m = fresh("quick_then_insertion", 30, seed=1)
    records, _ = run_rounds(m, state, rounds=3, engine="object")
    assert m.phase is Phase.INSERTION_ROUNDS
    assert records[0].t_s == m.prelude_steps
    for r in records:
        assert r.length == r.F + 29


def test_baseline_passes_terminate():
    state, m = fresh("repeated_quicksort_baseline", 40, seed=2)
    records, _ = run_rounds(m, state, rounds=4, engine="object")
    assert len(records) == 4 and all(r.complete and not r.insertion for r in records)


def test_sampling_convention():
    state, m = fresh("repeated_insertion", 16, seed=0)
    _, series = run_rounds(m, state, steps=100, sample_every=7)
    assert list(series.t) == list(range(7, 101, 7))
    assert np.all(np.diff(series.t) > 0)


def test_trailing_record_is_incomplete():
    state, m = fresh("repeated_insertion", 16, seed=0)
    records, _ = run_rounds(m, state, steps=10)
    assert len(records) == 1 and not records[0].complete and records[0].length == 10


@pytest.mark.parametrize("kind", list(SorterKind))
@pytest.mark.parametrize("alpha", [0, 1, 2])
def test_engines_agree(kind, alpha):
    out = []
    for engine, backend in (("object", None), ("kernel", "python"), ("kernel", "numba")):
        state, m = fresh(kind, 24, alpha, seed=7)
        records, series = run_rounds(m, state, steps=3000, sample_every=5,
                                     engine=engine, backend=backend)
        out.append((state.to_json(), [r.as_dict() for r in records],
                    series.t.tolist(), series.inversions.tolist(), series.good_swaps.tolist()))
    assert out[0] == out[1] == out[2]


def test_kernel_resumes_across_calls():
    state_a, ma = fresh("quick_then_insertion", 50, seed=3)
    run_rounds(ma, state_a, steps=5000)
    state_b, mb = fresh("quick_then_insertion", 50, seed=3)
    for _ in range(10):
        run_rounds(mb, state_b, steps=500)
    assert state_a.to_json() == state_b.to_json()
    assert ma.round_number == mb.round_number


def test_machine_rejects_mismatched_state():
    state, m = fresh("repeated_insertion", 10)
    with pytest.raises(ValueError):
        m.advance(new_state(11))
