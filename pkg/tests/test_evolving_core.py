import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evosort import ContractViolation, EvolvingState, new_state
from evosort.evolving_core import (
    SHORT_CIRCUIT,
    RandomSource,
    brute_force_inversions,
    count_inversions,
    kendall_tau,
    kendall_tau_bruteforce,
)


def pair_count(sigma):
    """Independent oracle: enumerate every pair."""
    return sum(1 for x, y in itertools.combinations(range(len(sigma)), 2) if sigma[x] > sigma[y])


def test_new_state_identity_and_reversed():
    assert new_state(4, 1, "identity", 0).inversions == 0
    assert new_state(4, 1, "reversed", 0).inversions == 6
    assert new_state(5, 1, "reversed", 0).brute_force_inversions() == 10


def test_new_state_uniform_matches_enumeration():
    s = new_state(6, 1, "uniform_random", 7)
    assert s.inversions == pair_count(s.sigma.tolist())
    assert sorted(s.sigma.tolist()) == list(range(6))


def test_new_state_rejects_small_n():
    with pytest.raises(ValueError):
        new_state(1)
    with pytest.raises(ValueError):
        new_state(4, alpha=-1)


def test_uniform_start_is_seeded():
    a = new_state(50, 1, "uniform_random", 3)
    b = new_state(50, 1, "uniform_random", 3)
    c = new_state(50, 1, "uniform_random", 4)
    assert np.array_equal(a.sigma, b.sigma)
    assert not np.array_equal(a.sigma, c.sigma)


def test_inversion_examples():
    assert brute_force_inversions([2, 0, 3, 1]) == 3
    assert count_inversions([2, 0, 3, 1]) == 3
    assert count_inversions(range(10)) == 0
    assert count_inversions([]) == 0


@given(st.permutations(list(range(12))))
def test_merge_count_matches_enumeration(perm):
    assert count_inversions(perm) == pair_count(perm) == brute_force_inversions(perm)


def test_compare_step_on_sorted_order_creates_one_inversion():
    s = EvolvingState(3, 1, [0, 1, 2], seed=0)
    less, log = s.compare_step(0, 1)
    assert less is True
    assert s.inversions == 1
    assert log.random_delta_I == 1
    assert s.clock == 1


def test_compare_reports_before_the_swaps():
    s = EvolvingState(2, 1, [1, 0], seed=0)
    less, _ = s.compare_step(0, 1)
    assert less is False        # "b before a", decided before the swap flips it
    assert s.inversions == 0


def test_compare_step_errors():
    s = new_state(4, 1, "identity", 0)
    with pytest.raises(IndexError):
        s.compare_step(0, 4)
    with pytest.raises(ValueError):
        s.compare_step(1, 1)
    with pytest.raises(ContractViolation):
        s.end_step()            # no comparison registered


def test_one_comparison_per_step():
    s = new_state(4, 1, "identity", 0)
    s.compare(0, 1)
    with pytest.raises(ContractViolation):
        s.compare(1, 2)


def test_short_circuit_is_a_step():
    s = new_state(4, 2, "identity", 0)
    less, log = s.compare_step()
    assert less is None
    assert log.compare_positions == SHORT_CIRCUIT
    assert len(log.random_swap_ranks) == 2
    assert s.clock == 1


def test_scripted_replay_matches_recount():
    s = new_state(8, 1, "uniform_random", 3)
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = rng.choice(8, size=2, replace=False)
        s.compare_step(int(a), int(b))
    assert s.inversions == pair_count(s.sigma.tolist())


def test_sorter_swap_examples():
    s = EvolvingState(2, 1, [1, 0], seed=0)
    s.sorter_swap(1)
    assert s.inversions == 0
    s = EvolvingState(3, 1, [2, 0, 1], seed=0)
    s.sorter_swap(1)
    assert s.inversions == 1 == pair_count(s.sigma.tolist())
    assert s.clock == 0


def test_sorter_swap_contract():
    s = EvolvingState(3, 1, [0, 1, 2], seed=0)
    with pytest.raises(ContractViolation):
        s.sorter_swap(1)
    with pytest.raises(ContractViolation):
        s.sorter_swap(3)
    with pytest.raises(ContractViolation):
        s.sorter_swap(0)


def test_sorter_exchange_delta():
    sigma = [3, 0, 4, 1, 2]
    s = EvolvingState(5, 0, sigma, seed=0)
    before = s.inversions
    d = s.sorter_exchange(0, 4)
    assert d == s.inversions - before
    assert s.inversions == pair_count(s.sigma.tolist())


def test_random_swap_changes_by_one():
    s = new_state(30, 1, "uniform_random", 1)
    for r in range(29):
        before = s.inversions
        d = s.random_swap(r)
        assert d in (-1, 1)
        assert s.inversions - before == d == pair_count(s.sigma.tolist()) - before
    with pytest.raises(IndexError):
        s.random_swap(29)


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(2, 40),
    alpha=st.integers(0, 3),
    seed=st.integers(0, 2**32 - 1),
    script=st.lists(st.tuples(st.integers(0, 3), st.integers(0, 10**6), st.integers(0, 10**6)),
                    max_size=80),
)
def test_any_interleaving_keeps_counter_exact(n, alpha, seed, script):
    s = new_state(n, alpha, "uniform_random", seed)
    for op, x, y in script:
        a, b = x % n, y % n
        if op == 0 or a == b:
            s.short_circuit()
        else:
            s.compare(a, b)
            if op == 1:
                j = max(1, a)
                if s.sigma[j] < s.sigma[j - 1]:
                    s.sorter_swap(j)
            elif op == 2:
                s.sorter_exchange(a, b)
        log = s.end_step()
        assert all(d in (-1, 1) for d in log.random_swap_deltas)
        assert log.sort_delta_I <= 0 or op == 2
        s.check_consistency()


def test_steplog_sort_delta_matches_flag():
    s = EvolvingState(3, 1, [1, 0, 2], seed=5)
    s.compare(1, 0)
    s.sorter_swap(1)
    log = s.end_step()
    assert log.sort_swap_applied and log.sort_delta_I == -1
    s.compare(0, 1)
    log = s.end_step()
    assert not log.sort_swap_applied and log.sort_delta_I == 0


def test_kendall_tau_examples():
    ident = np.arange(4)
    assert kendall_tau(ident, ident) == 0
    assert kendall_tau(ident, ident[::-1]) == 6
    rng = np.random.default_rng(10)
    p1, p2 = rng.permutation(10), rng.permutation(10)
    assert kendall_tau(p1, p2) == kendall_tau_bruteforce(p1, p2) == kendall_tau(p2, p1)
    with pytest.raises(ValueError):
        kendall_tau(np.arange(3), np.arange(4))


def test_kendall_tau_equals_inversions_of_state():
    s = new_state(25, 1, "uniform_random", 9)
    for k in range(40):
        s.compare_step(k % 24, k % 24 + 1)
    # positions of each item in the maintained list and in the hidden order
    pos_l = np.empty(25, dtype=int)
    pos_l[s.maintained] = np.arange(25)
    assert kendall_tau(pos_l, s.true_rank) == s.inversions


def test_replay_determinism_and_snapshot_roundtrip():
    def run():
        s = new_state(16, 2, "uniform_random", 11)
        for k in range(100):
            s.compare_step(k % 15, 15)
        return s

    a, b = run(), run()
    assert a.to_json() == b.to_json()
    c = EvolvingState.from_snapshot(a.to_json())
    assert c.to_json() == a.to_json()
    # the restored random stream continues exactly where the original left off
    for k in range(50):
        a.compare_step(0, 1)
        c.compare_step(0, 1)
    assert a.to_json() == c.to_json()


def test_random_source_window_matches_single_draws():
    a = RandomSource(5, 20)
    b = RandomSource(5, 20)
    singles = [a.next_swap_rank() for _ in range(40000)]
    buf, pos = b.swap_window(40000)
    assert list(buf[pos:pos + 40000]) == singles
    b.commit_swaps(pos + 40000)
    assert b.swaps_drawn == a.swaps_drawn
    assert a.next_swap_rank() == b.next_swap_rank()


def test_swap_ranks_are_uniform():
    src = RandomSource(1, 6)
    counts = np.bincount([src.next_swap_rank() for _ in range(50000)], minlength=5)
    assert counts.shape == (5,)
    assert counts.min() > 9000 and counts.max() < 11000
