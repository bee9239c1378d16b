import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evosort import EvolvingState, SorterMachine, new_state, run_rounds
from evosort.frozen_analysis import (
    CounterLedger,
    FreezeError,
    StaleSnapshot,
    bad_inversions_oracle,
    blame_bound,
    build_cartesian_tree,
    cartesian_tree_bruteforce,
    check_lemma6,
    check_lemma7,
    classify_bad_inversions,
    freeze,
    instrumented_run,
    invariant1_violations,
    invariant2_violations,
    ledger_on_random_swap,
    portions,
    remaining_steps_oracle,
    snapshot_from,
    triangle_gap,
)


def machine_at(n, steps, seed=0, alpha=1, policy="uniform_random"):
    state = new_state(n, alpha, policy, seed)
    m = SorterMachine.create("repeated_insertion", state)
    for _ in range(steps):
        m.advance(state)
    return state, m


# ---------------------------------------------------------------- tree

def test_tree_increasing_is_right_path():
    t = build_cartesian_tree(range(6))
    assert t.root == 0
    assert all(t.left[v] == -1 for v in range(6))
    assert list(t.right[:5]) == [1, 2, 3, 4, 5]


def test_tree_decreasing_is_left_path():
    t = build_cartesian_tree(range(5, -1, -1))
    assert t.root == 5
    assert all(t.right[v] == -1 for v in range(6))


def test_tree_rejects_duplicates():
    with pytest.raises(ValueError):
        build_cartesian_tree([1, 2, 1])


@given(st.permutations(list(range(15))))
def test_tree_matches_recursive_definition(perm):
    vals = [-1] + list(perm) + [15]
    t = build_cartesian_tree(vals)
    assert np.array_equal(t.parent, cartesian_tree_bruteforce(vals))
    assert t.inorder() == list(range(len(vals)))
    for v in range(len(vals)):
        if t.parent[v] >= 0:
            assert t.values[t.parent[v]] < t.values[v]


def test_hand_built_snapshot_dump():
    # frozen ranks (2, 0, 3, 1): minima path -1 -> 1 -> 3 -> 4
    snap = snapshot_from([2, 0, 3, 1], [0, 1, 2, 3])
    assert snap.dump() == {
        "clock": 0, "S": 0,
        "hat_sigma": [2, 0, 3, 1],
        "items": [0, 1, 2, 3],
        "parent": [None, 1, -1, 3, 1, 3],
        "minima_path": [-1, 1, 3, 4],
        "M": {"0": 0, "1": 0, "2": 2, "3": 2},
        "P": {"-1": 4, "1": 0, "3": 2},
    }


@settings(max_examples=50, deadline=None)
@given(st.permutations(list(range(20))))
def test_snapshot_structure(perm):
    snap = snapshot_from(perm, list(range(20)))
    hat = snap.hat_sigma
    n = 20
    # minima path = right-to-left minima of the frozen list, plus sentinels
    rl_min = [k for k in range(n) if all(hat[k] < hat[m] for m in range(k + 1, n))]
    assert snap.minima_path == [-1] + rl_min + [n]
    tree = snap.tree
    path = snap.minima_path
    for prev, k in zip(path, path[1:-1]):
        left = list(range(prev + 1, k))
        if left:
            best = max(left, key=lambda p: hat[p])
            assert snap.M[k] == best
            # the left-subtree maximum is always a leaf
            assert tree.children(best + 1) == 0
        else:
            assert snap.M[k] == k
    for a, pa in snap.P.items():
        if a == -1:
            assert pa == n
            continue
        assert tree.degree(a + 1) == 3
        assert tree.children(pa + 1) == 0
        # pa sits in one of a's subtrees
        v = pa + 1
        while v >= 0 and v != a + 1:
            v = tree.parent[v]
        assert v == a + 1
    deg3 = [v - 1 for v in range(len(tree)) if tree.degree(v) == 3 and v > 0]
    assert sorted(k for k in snap.P if k >= 0) == sorted(deg3)


# ---------------------------------------------------------------- freeze

def test_freeze_at_round_start_bounds():
    for seed in range(10):
        state, m = machine_at(30, 0, seed)
        snap = freeze(state, m)
        assert state.inversions <= snap.S <= state.inversions + 29
        assert snap.inversions() == 0


def test_freeze_sorted_state():
    state, m = machine_at(12, 0, policy="identity")
    snap = freeze(state, m)
    assert snap.S == 11
    assert snap.hat_sigma.tolist() == list(range(12))


@pytest.mark.parametrize("steps", [0, 1, 7, 23, 60, 150])
def test_freeze_matches_replay_oracle(steps):
    state, m = machine_at(10, steps, seed=2)
    before = state.to_json()
    snap = freeze(state, m)
    assert snap.S == remaining_steps_oracle(state, m)
    assert state.to_json() == before


def test_freeze_refuses_prelude():
    state = new_state(16, 1, "uniform_random", 0)
    m = SorterMachine.create("quick_then_insertion", state)
    with pytest.raises(FreezeError):
        freeze(state, m)
    m2 = SorterMachine.create("repeated_quicksort_baseline", state)
    with pytest.raises(FreezeError):
        freeze(state, m2)


def test_freeze_after_prelude():
    state = new_state(24, 1, "uniform_random", 4)
    m = SorterMachine.create("quick_then_insertion", state)
    run_rounds(m, state, rounds=1)
    snap = freeze(state, m)
    assert snap.S == remaining_steps_oracle(state, m)


# ---------------------------------------------------------------- bad inversions

def test_identity_round_start_has_no_bad_inversions():
    state, m = machine_at(10, 0, policy="identity")
    rep = classify_bad_inversions(state, m, freeze(state, m))
    assert rep.B == 0


@pytest.mark.parametrize("seed", range(12))
def test_classification_matches_frozen_replay(seed):
    rng = np.random.default_rng(seed)
    state, m = machine_at(12, int(rng.integers(0, 200)), seed)
    snap = freeze(state, m)
    rep = classify_bad_inversions(state, m, snap)
    assert rep.stuck | rep.blocked == bad_inversions_oracle(state, m)
    assert not rep.stuck & rep.blocked
    # bad inversions are exactly the inversions that survive the frozen round
    assert rep.B == snap.inversions()
    assert rep.B <= blame_bound(snap)


def test_report_properties_hold_along_a_run():
    state, m = machine_at(14, 0, seed=5)
    for _ in range(300):
        snap = freeze(state, m)
        rep = classify_bad_inversions(state, m, snap)
        semi, _ = portions(m, 14)
        for a, b in rep.stuck:
            assert semi[b] and state.sigma[a] > state.sigma[b]
        for a, b in rep.blocked:
            assert any(semi[c] and state.sigma[c] < state.sigma[b] for c in range(a + 1, b))
        pos = snap.position_of_item
        path = snap.minima_path
        for (a, b), k in rep.blame.items():
            assert k in path
            prev = path[path.index(k) - 1]
            assert prev < pos[state.maintained[a]] < k
        assert not rep.flags
        m.advance(state)


def test_no_blocked_inversions_at_round_end():
    state, m = machine_at(16, 0, seed=8)
    seen = 0
    for _ in range(1500):
        m.sort_substep(state)
        if m.round_done:
            rep = classify_bad_inversions(state, m, freeze(state, m))
            assert not rep.blocked
            seen += 1
        log = state.end_step()
        m.after_step(state, log)
    assert seen > 3


def test_stale_snapshot_rejected():
    state, m = machine_at(10, 5, seed=1)
    snap = freeze(state, m)
    m.advance(state)
    with pytest.raises(StaleSnapshot):
        classify_bad_inversions(state, m, snap)


def test_sort_substep_leaves_frozen_state_alone():
    state, m = machine_at(18, 0, seed=3)
    for _ in range(400):
        snap = freeze(state, m)
        B = classify_bad_inversions(state, m, snap).B
        m.sort_substep(state)
        mid = freeze(state, m)
        assert np.array_equal(mid.hat_sigma, snap.hat_sigma)
        assert classify_bad_inversions(state, m, mid).B == B
        m.after_step(state, state.end_step())


# ---------------------------------------------------------------- ledger

def test_ledger_requires_alpha_one():
    state, m = machine_at(8, 0, alpha=2)
    snap = freeze(state, m)
    m.sort_substep(state)
    with pytest.raises(ValueError):
        state.end_step(on_random_swap=lambda r, d: ledger_on_random_swap(
            CounterLedger(8), state, m, r, snap))


def run_ledger(n, seed, steps):
    """Drive the ledger by hand and check Invariant 2 after every swap."""
    state, m = machine_at(n, 0, seed=seed)
    ledger = CounterLedger(n)
    entries = []
    for _ in range(steps):
        m.sort_substep(state)
        cur = {"snap": freeze(state, m)}

        def hook(r, d):
            after, entry = ledger_on_random_swap(ledger, state, m, r, cur["snap"])
            cur["snap"] = after
            entries.append(entry)
            assert invariant2_violations(ledger, after) == []
            assert invariant1_violations(ledger, after) == []

        log = state.end_step(on_random_swap=hook)
        if m.after_step(state, log) is not None:
            ledger.reset()
    return ledger, entries


def test_invariant2_n10_500_steps():
    _, entries = run_ledger(10, 0, 500)
    assert len(entries) == 500
    assert any(e["inc_exchange"] or e["dec_exchange"] for e in entries)


def test_swap_without_pairing_change_only_increments():
    ledger, entries = run_ledger(10, 1, 60)
    quiet = [e for e in entries if not e["pairing_changed"]]
    assert quiet and not any(e["inc_exchange"] or e["dec_exchange"] for e in quiet)


def test_counters_reset_each_round():
    state, m = machine_at(6, 0, seed=0)
    ledger = CounterLedger(6)
    ledger.inc[:] = 3
    ledger.reset()
    assert ledger.inc_sq == ledger.dec_sq == 0


def test_adjacent_degree_two_swap_case_is_seen():
    rep = instrumented_run(16, 4, rounds=3, check_every=50)
    assert rep.cases.get("deg2/deg2-adjacent", 0) > 0
    assert rep.total_violations == 0


# ---------------------------------------------------------------- lemma checks

def test_remaining_steps_bound_at_round_start_and_alpha0():
    state, m = machine_at(20, 0, seed=6, alpha=0)
    I_ts = state.inversions
    S_ts = freeze(state, m).S
    for t in range(S_ts):
        snap = freeze(state, m)
        assert snap.S == S_ts - t
        assert classify_bad_inversions(state, m, snap).B == 0
        assert check_lemma6(state, m, snap)
        m.advance(state)
    assert state.inversions == 0 and I_ts > 0


def test_bad_inversion_bound_at_round_start():
    state, m = machine_at(12, 0, seed=2)
    rep = classify_bad_inversions(state, m, freeze(state, m))
    assert rep.B == 0 and check_lemma7(CounterLedger(12), rep)


def test_first_swap_of_a_round_keeps_B_small():
    # search seeded round starts for a first swap that leaves a bad inversion;
    # with one swap the squared counter sums are both 1, so B <= 4
    found = 0
    for seed in range(300):
        state, m = machine_at(6, 0, seed=seed)
        ledger = CounterLedger(6)
        m.sort_substep(state)
        cur = {"snap": freeze(state, m)}

        def hook(r, d):
            cur["snap"], _ = ledger_on_random_swap(ledger, state, m, r, cur["snap"])

        m.after_step(state, state.end_step(on_random_swap=hook))
        snap = freeze(state, m)
        rep = classify_bad_inversions(state, m, snap)
        assert ledger.inc_sq == ledger.dec_sq == 1
        if rep.B:
            found += 1
            assert rep.B <= 4 and check_lemma7(ledger, rep)
            assert triangle_gap(ledger, snap) >= 0
    assert found > 0


def test_bad_inversion_bound_over_1000_steps():
    rep = instrumented_run(12, 3, rounds=10**6, check_every=1, oracle_every=10, max_steps=1000)
    assert rep.steps == 1000 and rep.checks == 1000
    assert rep.lemma7 == 0 and rep.total_violations == 0


def test_instrumented_run_is_clean():
    for seed in range(5):
        rep = instrumented_run(16, seed, rounds=3, check_every=1)
        assert rep.total_violations == 0, rep.dumps[:1]
        assert rep.rounds == 3 and rep.swaps == rep.steps


def test_instrumented_run_cap():
    with pytest.raises(ValueError):
        instrumented_run(300, 0, rounds=1)


def test_minimum_between_can_sit_off_the_minima_path():
    # reversed start, n=16, seed 16, t=108: the active item (rank 2) will land
    # right of rank 1, and rank 0 further right hides rank 1 from the minima
    # path.  Blame goes to the minima-path node that contains the left item.
    state, m = machine_at(16, 108, seed=16, policy="reversed")
    snap = freeze(state, m)
    rep = classify_bad_inversions(state, m, snap)
    assert rep.blocked == {(0, 6), (1, 6)}
    assert rep.literal_mismatch
    for pair, literal, container in rep.literal_mismatch:
        assert literal not in snap.minima_path
        assert container in snap.minima_path
        assert rep.blame[pair] == container
    assert rep.B <= blame_bound(snap)
