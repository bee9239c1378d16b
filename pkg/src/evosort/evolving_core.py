"""Ground truth for the evolving-data sorting model.

The hidden total order is stored as a rank assignment rather than a second
list: ``sigma[pos]`` is the rank of the item sitting at ``pos`` of the
maintained list and ``sigma_inv`` is its inverse.  A random adjacent swap in
the hidden order is then an exchange of two consecutive ranks, and a sorter
swap is an exchange of two positions.  Both are O(1) together with the change
in the inversion count.

A time step is split in three so that the sorter can act on a comparison
before the hidden order moves::

    less = state.compare(a, b)      # outcome against sigma before any swap
    state.sorter_swap(j)            # optional sorter action, clock unchanged
    log = state.end_step()          # alpha random swaps, clock += 1

``compare_step`` bundles the first and last call for callers that never move
items.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

SHORT_CIRCUIT = (-1, -1)


class ContractViolation(RuntimeError):
    """A sorter asked the state to do something a correct sorter never does."""


class InitPolicy(str, Enum):
    IDENTITY = "identity"
    REVERSED = "reversed"
    UNIFORM_RANDOM = "uniform_random"


class RandomSource:
    """Seeded stream of random swap ranks and quicksort pivot fractions.

    Two PCG64 generators are spawned from ``SeedSequence(seed)``: one for the
    adjacent swaps in the hidden order, one for pivots.  Values are produced
    in fixed blocks, so the stream is the same whether it is consumed one
    value at a time or handed to a kernel as a window.
    """

    BLOCK = 1 << 14

    def __init__(self, seed: int, n: int):
        if n < 2:
            raise ValueError("need at least two items")
        self.seed = int(seed)
        self.n = n
        swap_seq, pivot_seq = np.random.SeedSequence(self.seed).spawn(2)
        self._swap_gen = np.random.Generator(np.random.PCG64(swap_seq))
        self._pivot_gen = np.random.Generator(np.random.PCG64(pivot_seq))
        self._swap_buf = np.empty(0, dtype=np.int64)
        self._swap_pos = 0
        self._pivot_buf = np.empty(0, dtype=np.float64)
        self._pivot_pos = 0
        self.swaps_drawn = 0
        self.pivots_drawn = 0

    def _swap_block(self):
        return self._swap_gen.integers(0, self.n - 1, size=self.BLOCK, dtype=np.int64)

    def _pivot_block(self):
        return self._pivot_gen.random(self.BLOCK)

    def next_swap_rank(self) -> int:
        if self._swap_pos == len(self._swap_buf):
            self._swap_buf = self._swap_block()
            self._swap_pos = 0
        r = int(self._swap_buf[self._swap_pos])
        self._swap_pos += 1
        self.swaps_drawn += 1
        return r

    def next_pivot_fraction(self) -> float:
        if self._pivot_pos == len(self._pivot_buf):
            self._pivot_buf = self._pivot_block()
            self._pivot_pos = 0
        u = float(self._pivot_buf[self._pivot_pos])
        self._pivot_pos += 1
        self.pivots_drawn += 1
        return u

    # Kernel access: a window holding at least ``count`` unread values.
    def swap_window(self, count: int) -> tuple[np.ndarray, int]:
        rest = self._swap_buf[self._swap_pos:]
        if len(rest) < count:
            blocks = [rest]
            have = len(rest)
            while have < count:
                blocks.append(self._swap_block())
                have += self.BLOCK
            self._swap_buf = np.concatenate(blocks)
            self._swap_pos = 0
        return self._swap_buf, self._swap_pos

    def commit_swaps(self, new_pos: int) -> None:
        self.swaps_drawn += new_pos - self._swap_pos
        self._swap_pos = new_pos

    def pivot_window(self, count: int) -> tuple[np.ndarray, int]:
        rest = self._pivot_buf[self._pivot_pos:]
        if len(rest) < count:
            blocks = [rest]
            have = len(rest)
            while have < count:
                blocks.append(self._pivot_block())
                have += self.BLOCK
            self._pivot_buf = np.concatenate(blocks)
            self._pivot_pos = 0
        return self._pivot_buf, self._pivot_pos

    def commit_pivots(self, new_pos: int) -> None:
        self.pivots_drawn += new_pos - self._pivot_pos
        self._pivot_pos = new_pos

    @classmethod
    def restore(cls, seed: int, n: int, swaps_drawn: int, pivots_drawn: int) -> "RandomSource":
        src = cls(seed, n)
        if swaps_drawn:
            buf, pos = src.swap_window(swaps_drawn)
            src.commit_swaps(pos + swaps_drawn)
        if pivots_drawn:
            buf, pos = src.pivot_window(pivots_drawn)
            src.commit_pivots(pos + pivots_drawn)
        return src

    def copy(self) -> "RandomSource":
        other = RandomSource.__new__(RandomSource)
        other.seed = self.seed
        other.n = self.n
        other._swap_gen = np.random.Generator(np.random.PCG64())
        other._swap_gen.bit_generator.state = self._swap_gen.bit_generator.state
        other._pivot_gen = np.random.Generator(np.random.PCG64())
        other._pivot_gen.bit_generator.state = self._pivot_gen.bit_generator.state
        other._swap_buf = self._swap_buf.copy()
        other._swap_pos = self._swap_pos
        other._pivot_buf = self._pivot_buf.copy()
        other._pivot_pos = self._pivot_pos
        other.swaps_drawn = self.swaps_drawn
        other.pivots_drawn = self.pivots_drawn
        return other


@dataclass
class StepLog:
    step_index: int
    compare_positions: tuple[int, int]
    sort_swap_applied: bool
    sort_delta_I: int
    random_swap_ranks: list[int] = field(default_factory=list)
    random_swap_deltas: list[int] = field(default_factory=list)

    @property
    def random_delta_I(self) -> int:
        return sum(self.random_swap_deltas)

    @property
    def good_swaps(self) -> int:
        return sum(1 for d in self.random_swap_deltas if d < 0)


class EvolvingState:
    """Maintained list, hidden order, clock and incremental inversion count."""

    def __init__(self, n: int, alpha: int, sigma, seed: int, rng: RandomSource | None = None):
        if n < 2:
            raise ValueError(f"n must be at least 2, got {n}")
        if alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {alpha}")
        sigma = np.asarray(sigma, dtype=np.int64)
        if sigma.shape != (n,) or not np.array_equal(np.sort(sigma), np.arange(n)):
            raise ValueError("sigma must be a permutation of 0..n-1")
        self.n = n
        self.alpha = alpha
        self.seed = int(seed)
        self.maintained = np.arange(n, dtype=np.int64)
        self.sigma = sigma.copy()
        self.sigma_inv = np.empty(n, dtype=np.int64)
        self.sigma_inv[self.sigma] = np.arange(n)
        self.clock = 0
        self.inversions = count_inversions(self.sigma)
        self.rng = rng if rng is not None else RandomSource(self.seed, n)
        self._pending_compare: tuple[int, int] | None = None
        self._pending_sort_delta = 0
        self._pending_sort_swap = False

    # ------------------------------------------------------------------
    # views
    @property
    def true_rank(self) -> np.ndarray:
        """Rank of every item identifier in the hidden order."""
        ranks = np.empty(self.n, dtype=np.int64)
        ranks[self.maintained] = self.sigma
        return ranks

    @property
    def hidden_order(self) -> np.ndarray:
        """Item identifiers listed from smallest to largest rank."""
        return self.maintained[self.sigma_inv]

    def inversion_count(self) -> int:
        return self.inversions

    def brute_force_inversions(self) -> int:
        return brute_force_inversions(self.sigma)

    # ------------------------------------------------------------------
    # one step
    def _check_pos(self, pos: int) -> None:
        if not 0 <= pos < self.n:
            raise IndexError(f"position {pos} outside 0..{self.n - 1}")

    def compare(self, pos_a: int, pos_b: int) -> bool:
        """True iff the item at ``pos_a`` comes before the item at ``pos_b`` in the hidden order."""
        self._check_pos(pos_a)
        self._check_pos(pos_b)
        if pos_a == pos_b:
            raise ValueError("cannot compare a position with itself")
        if self._pending_compare is not None:
            raise ContractViolation("one comparison per step")
        self._pending_compare = (pos_a, pos_b)
        return bool(self.sigma[pos_a] < self.sigma[pos_b])

    def short_circuit(self) -> None:
        """Register a guard that ended without touching the list (still a step)."""
        if self._pending_compare is not None:
            raise ContractViolation("one comparison per step")
        self._pending_compare = SHORT_CIRCUIT

    def sorter_swap(self, j: int) -> None:
        """Exchange positions ``j-1`` and ``j``, which must currently be inverted."""
        if not 1 <= j <= self.n - 1:
            raise ContractViolation(f"sorter_swap position {j} outside 1..{self.n - 1}")
        s = self.sigma
        if s[j] > s[j - 1]:
            raise ContractViolation(f"sorter_swap({j}) on a non-inverted pair")
        self._swap_positions(j - 1, j)
        self.inversions -= 1
        self._pending_sort_delta -= 1
        self._pending_sort_swap = True

    def sorter_exchange(self, p: int, q: int) -> int:
        """Exchange two arbitrary positions; returns the change in inversions.

        Used by quicksort.  Costs O(|p - q|) for the inversion update.
        """
        self._check_pos(p)
        self._check_pos(q)
        if p == q:
            return 0
        if p > q:
            p, q = q, p
        x, y = self.sigma[p], self.sigma[q]
        lo, hi = (x, y) if x < y else (y, x)
        mid = self.sigma[p + 1:q]
        between = int(np.count_nonzero((mid > lo) & (mid < hi)))
        delta = 2 * between + 1
        if x > y:
            delta = -delta
        self._swap_positions(p, q)
        self.inversions += delta
        self._pending_sort_delta += delta
        self._pending_sort_swap = True
        return delta

    def _swap_positions(self, p: int, q: int) -> None:
        s, si, m = self.sigma, self.sigma_inv, self.maintained
        s[p], s[q] = s[q], s[p]
        si[s[p]] = p
        si[s[q]] = q
        m[p], m[q] = m[q], m[p]

    def random_swap(self, r: int) -> int:
        """Exchange ranks ``r`` and ``r+1`` of the hidden order; returns the inversion change."""
        if not 0 <= r < self.n - 1:
            raise IndexError(f"rank {r} outside 0..{self.n - 2}")
        si, s = self.sigma_inv, self.sigma
        p, q = si[r], si[r + 1]
        delta = 1 if p < q else -1
        s[p], s[q] = r + 1, r
        si[r], si[r + 1] = q, p
        self.inversions += delta
        return delta

    def end_step(self, on_random_swap: Callable[[int, int], None] | None = None) -> StepLog:
        if self._pending_compare is None:
            raise ContractViolation("a step needs a comparison or a short-circuit guard")
        log = StepLog(
            step_index=self.clock,
            compare_positions=self._pending_compare,
            sort_swap_applied=self._pending_sort_swap,
            sort_delta_I=self._pending_sort_delta,
        )
        for _ in range(self.alpha):
            r = self.rng.next_swap_rank()
            delta = self.random_swap(r)
            log.random_swap_ranks.append(r)
            log.random_swap_deltas.append(delta)
            if on_random_swap is not None:
                on_random_swap(r, delta)
        self.clock += 1
        self._pending_compare = None
        self._pending_sort_delta = 0
        self._pending_sort_swap = False
        return log

    def compare_step(self, pos_a: int | None = None, pos_b: int | None = None):
        """Compare, then let the hidden order move.  Both positions ``None`` is the short-circuit form."""
        if pos_a is None and pos_b is None:
            self.short_circuit()
            return None, self.end_step()
        less = self.compare(pos_a, pos_b)
        return less, self.end_step()

    # ------------------------------------------------------------------
    def check_consistency(self) -> None:
        n = self.n
        if not np.array_equal(np.sort(self.sigma), np.arange(n)):
            raise AssertionError("sigma is not a permutation")
        if not np.array_equal(self.sigma_inv[self.sigma], np.arange(n)):
            raise AssertionError("sigma_inv is not the inverse of sigma")
        if not np.array_equal(np.sort(self.maintained), np.arange(n)):
            raise AssertionError("maintained list lost an item")
        brute = self.brute_force_inversions()
        if brute != self.inversions:
            raise AssertionError(f"incremental inversions {self.inversions} != recount {brute}")

    def copy(self) -> "EvolvingState":
        other = EvolvingState.__new__(EvolvingState)
        other.n = self.n
        other.alpha = self.alpha
        other.seed = self.seed
        other.maintained = self.maintained.copy()
        other.sigma = self.sigma.copy()
        other.sigma_inv = self.sigma_inv.copy()
        other.clock = self.clock
        other.inversions = self.inversions
        other.rng = self.rng.copy()
        other._pending_compare = self._pending_compare
        other._pending_sort_delta = self._pending_sort_delta
        other._pending_sort_swap = self._pending_sort_swap
        return other

    def snapshot(self) -> dict:
        return {
            "n": self.n,
            "alpha": self.alpha,
            "seed": self.seed,
            "clock": self.clock,
            "inversions": self.inversions,
            "maintained": self.maintained.tolist(),
            "rank": self.true_rank.tolist(),
            "swaps_drawn": self.rng.swaps_drawn,
            "pivots_drawn": self.rng.pivots_drawn,
        }

    def to_json(self) -> str:
        return json.dumps(self.snapshot(), sort_keys=True)

    @classmethod
    def from_snapshot(cls, snap: dict | str) -> "EvolvingState":
        if isinstance(snap, str):
            snap = json.loads(snap)
        n = snap["n"]
        maintained = np.asarray(snap["maintained"], dtype=np.int64)
        rank = np.asarray(snap["rank"], dtype=np.int64)
        rng = RandomSource.restore(snap["seed"], n, snap["swaps_drawn"], snap["pivots_drawn"])
        state = cls(n, snap["alpha"], rank[maintained], snap["seed"], rng=rng)
        state.maintained = maintained.copy()
        state.clock = snap["clock"]
        if state.inversions != snap["inversions"]:
            raise ValueError("snapshot inversion count does not match its permutation")
        return state


def new_state(n: int, alpha: int = 1, init_policy: str | InitPolicy = "uniform_random", seed: int = 0) -> EvolvingState:
    """Fresh state whose maintained list is ``0..n-1`` and whose hidden order follows ``init_policy``."""
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    policy = InitPolicy(init_policy)
    if policy is InitPolicy.IDENTITY:
        sigma = np.arange(n)
    elif policy is InitPolicy.REVERSED:
        sigma = np.arange(n)[::-1]
    else:
        init_seq = np.random.SeedSequence([int(seed), 0x5EED])
        sigma = np.random.default_rng(init_seq).permutation(n)
    return EvolvingState(n, alpha, sigma, seed)


def brute_force_inversions(perm) -> int:
    """O(n^2) count of pairs x < y with perm[x] > perm[y]."""
    p = np.asarray(perm)
    return int(np.count_nonzero(np.triu(p[:, None] > p[None, :], k=1)))


def count_inversions(perm) -> int:
    """Merge-sort inversion count, O(n log n)."""
    a = [int(v) for v in perm]
    n = len(a)
    buf = [0] * n
    total = 0
    width = 1
    while width < n:
        for lo in range(0, n - width, 2 * width):
            mid = lo + width
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if a[i] <= a[j]:
                    buf[k] = a[i]
                    i += 1
                else:
                    buf[k] = a[j]
                    total += mid - i
                    j += 1
                k += 1
            buf[k:k + mid - i] = a[i:mid]
            k += mid - i
            buf[k:k + hi - j] = a[j:hi]
            a[lo:hi] = buf[lo:hi]
        width *= 2
    return total


def kendall_tau(p1, p2) -> int:
    """Number of discordant pairs between two permutations of ``0..n-1``.

    ``p[x]`` is read as the position of element ``x``.  Reordering the
    elements by their position under ``p1`` and counting inversions of the
    ``p2`` positions gives the distance in O(n log n).
    """
    p1 = np.asarray(p1, dtype=np.int64)
    p2 = np.asarray(p2, dtype=np.int64)
    if p1.shape != p2.shape:
        raise ValueError("permutations differ in size")
    order = np.argsort(p1, kind="stable")
    return count_inversions(p2[order])


def kendall_tau_bruteforce(p1, p2) -> int:
    p1 = np.asarray(p1)
    p2 = np.asarray(p2)
    if p1.shape != p2.shape:
        raise ValueError("permutations differ in size")
    n = len(p1)
    return sum(
        1
        for x in range(n)
        for y in range(n)
        if x != y and p1[x] < p1[y] and p2[x] > p2[y]
    )
