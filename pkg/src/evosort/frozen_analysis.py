"""Frozen-state instrumentation for repeated insertion sort.

Everything here is rebuilt from scratch on request: the frozen permutation
(finish the current round with the hidden order held still), its Cartesian
tree with the two sentinels, the minima path, the ``M`` and pairing maps,
the stuck/blocked inversion sets with blame, and the Inc/Dec counter ledger.

Frozen positions run from ``-1`` to ``n``; ``-1`` and ``n`` are the sentinels
with values ``-1`` and ``n``.  Tree arrays use the shifted index
``position + 1``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .evolving_core import EvolvingState
from .sorters import Phase, RoundRecord, SorterKind, SorterMachine


class FreezeError(ValueError):
    pass


class StaleSnapshot(ValueError):
    pass


# ----------------------------------------------------------------------
# Cartesian tree

@dataclass
class CartesianTree:
    values: np.ndarray
    parent: np.ndarray
    left: np.ndarray
    right: np.ndarray
    root: int

    def __len__(self) -> int:
        return len(self.values)

    def children(self, v: int) -> int:
        return int(self.left[v] >= 0) + int(self.right[v] >= 0)

    def degree(self, v: int) -> int:
        return self.children(v) + int(self.parent[v] >= 0)

    def subtree_max(self) -> np.ndarray:
        """Index of the largest value in every node's subtree."""
        best = np.arange(len(self.values))
        # children carry larger values than their parent, so descending
        # value order visits every child before its parent
        for v in np.argsort(-self.values, kind="stable"):
            for c in (self.left[v], self.right[v]):
                if c >= 0 and self.values[best[c]] > self.values[best[v]]:
                    best[v] = best[c]
        return best

    def inorder(self) -> list[int]:
        out, stack, v = [], [], self.root
        while stack or v >= 0:
            while v >= 0:
                stack.append(v)
                v = self.left[v]
            v = stack.pop()
            out.append(int(v))
            v = self.right[v]
        return out


def build_cartesian_tree(values) -> CartesianTree:
    """Min-rooted Cartesian tree in O(m) with the usual right-spine stack."""
    vals = np.asarray(values, dtype=np.int64)
    m = len(vals)
    if len(np.unique(vals)) != m:
        raise ValueError("Cartesian tree needs distinct values")
    parent = np.full(m, -1, dtype=np.int64)
    left = np.full(m, -1, dtype=np.int64)
    right = np.full(m, -1, dtype=np.int64)
    spine: list[int] = []
    for k in range(m):
        last = -1
        while spine and vals[spine[-1]] > vals[k]:
            last = spine.pop()
        if last >= 0:
            left[k] = last
            parent[last] = k
        if spine:
            right[spine[-1]] = k
            parent[k] = spine[-1]
        spine.append(k)
    root = spine[0] if spine else -1
    return CartesianTree(vals, parent, left, right, root)


def cartesian_tree_bruteforce(values) -> np.ndarray:
    """Parent array from the recursive definition (minimum splits the range)."""
    vals = list(values)
    parent = [-1] * len(vals)

    def split(lo, hi, up):
        if lo > hi:
            return
        k = min(range(lo, hi + 1), key=vals.__getitem__)
        parent[k] = up
        split(lo, k - 1, k)
        split(k + 1, hi, k)

    split(0, len(vals) - 1, -1)
    return np.asarray(parent, dtype=np.int64)


# ----------------------------------------------------------------------
# frozen snapshot

@dataclass
class FrozenSnapshot:
    clock: int
    version: int
    n: int
    hat_sigma: np.ndarray        # rank of the item at each frozen position
    items: np.ndarray            # item at each frozen position
    S: int
    tree: CartesianTree
    minima_path: list[int]       # frozen positions, root (-1) to rightmost leaf (n)
    M: dict[int, int]
    P: dict[int, int]

    @property
    def position_of_item(self) -> np.ndarray:
        pos = np.empty(self.n, dtype=np.int64)
        pos[self.items] = np.arange(self.n)
        return pos

    def item_at(self, pos: int) -> int | None:
        return int(self.items[pos]) if 0 <= pos < self.n else None

    def rank_at(self, pos: int) -> int:
        return int(self.tree.values[pos + 1])

    def degree(self, pos: int) -> int:
        return self.tree.degree(pos + 1)

    def item_pairs(self) -> dict[int, int]:
        """Pairing restricted to real items: degree-three item -> paired leaf item."""
        return {
            int(self.items[a]): int(self.items[b])
            for a, b in self.P.items()
            if 0 <= a < self.n and 0 <= b < self.n
        }

    def inversions(self) -> int:
        from .evolving_core import count_inversions

        return count_inversions(self.hat_sigma)

    def dump(self) -> dict:
        return {
            "clock": self.clock,
            "S": self.S,
            "hat_sigma": self.hat_sigma.tolist(),
            "items": self.items.tolist(),
            "parent": [int(p) - 1 if p >= 0 else None for p in self.tree.parent],
            "minima_path": list(self.minima_path),
            "M": {str(k): v for k, v in sorted(self.M.items())},
            "P": {str(k): v for k, v in sorted(self.P.items())},
        }


def _finish_round(ranks: list, items: list, i: int, j: int) -> int:
    """Run insertion sort to the end of the round with the order held still."""
    n = len(ranks)
    steps = 0
    while True:
        steps += 1
        if j > 0 and ranks[j] < ranks[j - 1]:
            ranks[j], ranks[j - 1] = ranks[j - 1], ranks[j]
            items[j], items[j - 1] = items[j - 1], items[j]
            j -= 1
        else:
            i += 1
            if i == n:
                return steps
            j = i


def freeze(state: EvolvingState, machine: SorterMachine) -> FrozenSnapshot:
    """Simulate the rest of the current insertion round without random swaps.

    The state is not touched.  Between the last guard of a round and the end
    of that step there is nothing left to simulate, so ``S = 0`` and the
    frozen permutation is the current one.
    """
    if machine.kind is SorterKind.REPEATED_QUICKSORT or machine.phase is Phase.QUICKSORT_PRELUDE:
        raise FreezeError("the frozen state is only defined during insertion rounds")
    ranks = state.sigma.tolist()
    items = state.maintained.tolist()
    if machine.round_done:
        steps = 0
    else:
        steps = _finish_round(ranks, items, machine.i, machine.j)
    return snapshot_from(ranks, items, steps, state.clock, state.rng.swaps_drawn)


def snapshot_from(hat_sigma, items, S: int = 0, clock: int = 0, version: int = 0) -> FrozenSnapshot:
    hat = np.asarray(hat_sigma, dtype=np.int64)
    n = len(hat)
    tree = build_cartesian_tree(np.concatenate([[-1], hat, [n]]))
    path = []
    v = tree.root
    while v >= 0:
        path.append(int(v) - 1)
        v = tree.right[v]
    submax = tree.subtree_max()
    M = {k: k for k in range(n)}
    for k in path:
        if 0 <= k < n and tree.left[k + 1] >= 0:
            M[k] = int(submax[tree.left[k + 1]]) - 1
    P = {-1: n}
    for v in range(len(tree)):
        lc, rc = tree.left[v], tree.right[v]
        if lc >= 0 and rc >= 0 and tree.parent[v] >= 0:
            a, b = submax[lc], submax[rc]
            P[v - 1] = int(a if tree.values[a] < tree.values[b] else b) - 1
    return FrozenSnapshot(
        clock=clock, version=version, n=n, hat_sigma=hat,
        items=np.asarray(items, dtype=np.int64), S=S, tree=tree,
        minima_path=path, M=M, P=P,
    )


def remaining_steps_oracle(state: EvolvingState, machine: SorterMachine) -> int:
    """S_t by replaying the real machine on a copy with random swaps turned off."""
    st = state.copy()
    st.alpha = 0
    m = SorterMachine(**{f: getattr(machine, f) for f in machine.__dataclass_fields__})
    m.frames = list(machine.frames)
    if m.round_done:
        return 0
    start = m.round_number
    steps = 0
    while m.round_number == start:
        m.advance(st)
        steps += 1
    return steps


# ----------------------------------------------------------------------
# bad inversions

@dataclass
class BadInversionReport:
    clock: int
    stuck: set = field(default_factory=set)
    blocked: set = field(default_factory=set)
    blame: dict = field(default_factory=dict)     # (a, b) -> blamed frozen position
    flags: list = field(default_factory=list)
    # pairs where "minimum strictly between" names a different element than
    # the containing minima-path node; diagnostic only
    literal_mismatch: list = field(default_factory=list)

    @property
    def B(self) -> int:
        return len(self.stuck) + len(self.blocked)


def portions(machine: SorterMachine, n: int) -> tuple[np.ndarray, int]:
    """Mask of semi-sorted positions and the active position (-1 if none)."""
    semi = np.zeros(n, dtype=bool)
    if machine.round_done:
        semi[:] = True
        return semi, -1
    semi[: machine.i + 1] = True
    semi[machine.j] = False
    return semi, machine.j


def classify_bad_inversions(state: EvolvingState, machine: SorterMachine,
                            snapshot: FrozenSnapshot) -> BadInversionReport:
    """Exact O(n^2) enumeration of stuck and blocked inversions with blame.

    Stuck/blocked membership uses current positions.  Blame is resolved in
    the frozen state, where the Cartesian tree lives.  Every pair blames the
    minima-path node whose left subtree holds the pair's left item.  For a
    stuck pair whose two items share that subtree (the node itself
    included) this is the usual rule; otherwise the customary choice is the
    minimum strictly between the two items, which coincides with the
    containing node except when a smaller element further right hides it
    from the minima path.  Those cases are listed in ``literal_mismatch``.
    """
    if snapshot.clock != state.clock or snapshot.version != state.rng.swaps_drawn:
        raise StaleSnapshot(f"snapshot from t={snapshot.clock} used at t={state.clock}")
    n = state.n
    sigma = state.sigma
    semi, _ = portions(machine, n)
    report = BadInversionReport(clock=state.clock)
    big = n + 1
    masked = np.where(semi, sigma, big)
    inverted = np.triu(sigma[:, None] > sigma[None, :], k=1)
    for a in range(n - 1):
        row = np.flatnonzero(inverted[a])
        if len(row) == 0:
            continue
        # min over semi-sorted c in (a, b) for every b > a
        between = np.empty(n, dtype=np.int64)
        between[: a + 2] = big
        if a + 2 < n:
            between[a + 2:] = np.minimum.accumulate(masked[a + 1: n - 1])
        for b in row:
            b = int(b)
            if semi[b]:
                report.stuck.add((a, b))
            elif between[b] < sigma[b]:
                report.blocked.add((a, b))

    pos = snapshot.position_of_item
    hat = snapshot.hat_sigma
    path_pos = sorted(snapshot.minima_path)
    for pair in sorted(report.stuck | report.blocked):
        a, b = pair
        p, q = int(pos[state.maintained[a]]), int(pos[state.maintained[b]])
        if p >= q:
            report.flags.append(("pair-reordered", pair))
            continue
        # the minima-path node whose left subtree holds the left item
        container = path_pos[bisect.bisect_right(path_pos, p)]
        if pair in report.stuck and q <= container:
            literal = container
        else:
            literal = p + 1 + int(np.argmin(hat[p + 1:q]))
        report.blame[pair] = container
        if literal != container:
            report.literal_mismatch.append((pair, literal, container))
    return report


def bad_inversions_oracle(state: EvolvingState, machine: SorterMachine) -> set:
    """Current inversions that the frozen round never swaps, found by replay."""
    n = state.n
    ranks = state.sigma.tolist()
    items = state.maintained.tolist()
    fixed = set()
    if not machine.round_done:
        i, j = machine.i, machine.j
        while True:
            if j > 0 and ranks[j] < ranks[j - 1]:
                fixed.add(frozenset((items[j], items[j - 1])))
                ranks[j], ranks[j - 1] = ranks[j - 1], ranks[j]
                items[j], items[j - 1] = items[j - 1], items[j]
                j -= 1
            else:
                i += 1
                if i == n:
                    break
                j = i
    sigma = state.sigma
    bad = set()
    for a in range(n):
        for b in range(a + 1, n):
            if sigma[a] > sigma[b]:
                key = frozenset((int(state.maintained[a]), int(state.maintained[b])))
                if key not in fixed:
                    bad.add((a, b))
    return bad


def blame_bound(snapshot: FrozenSnapshot) -> int:
    """Sum over positions of (rank of M(k) - rank of k) squared."""
    hat = snapshot.hat_sigma
    return int(sum((int(hat[m]) - int(hat[k])) ** 2 for k, m in snapshot.M.items()))


# ----------------------------------------------------------------------
# counters

@dataclass
class CounterLedger:
    n: int
    inc: np.ndarray = None
    dec: np.ndarray = None
    exchange_log: list = field(default_factory=list)

    def __post_init__(self):
        if self.inc is None:
            self.inc = np.zeros(self.n, dtype=np.int64)
        if self.dec is None:
            self.dec = np.zeros(self.n, dtype=np.int64)

    def reset(self) -> None:
        self.inc[:] = 0
        self.dec[:] = 0

    @property
    def inc_sq(self) -> int:
        return int(np.dot(self.inc, self.inc))

    @property
    def dec_sq(self) -> int:
        return int(np.dot(self.dec, self.dec))


def _swap_case(before: FrozenSnapshot, machine: SorterMachine, state: EvolvingState,
               down_item: int, up_item: int) -> str:
    pos = before.position_of_item
    pa, pb = int(pos[down_item]), int(pos[up_item])
    da, db = before.degree(pa), before.degree(pb)
    tree = before.tree
    adjacent = tree.parent[pa + 1] == pb + 1 or tree.parent[pb + 1] == pa + 1
    label = f"deg{da}/deg{db}" + ("-adjacent" if adjacent else "")
    if not machine.round_done:
        active = int(state.maintained[machine.j])
        if active in (down_item, up_item):
            label = "active:" + label
    return label


def ledger_on_random_swap(ledger: CounterLedger, state: EvolvingState, machine: SorterMachine,
                          rank: int, before: FrozenSnapshot) -> tuple[FrozenSnapshot, dict]:
    """Count one random swap of ranks ``rank, rank+1`` that has just been applied.

    The item that moved down gets ``Dec``, the one that moved up gets
    ``Inc``.  The pairing is then rebuilt and compared with ``before``: a
    degree-three node whose paired leaf switched between the two swapped
    items means their ``Inc`` counters are exchanged; a leaf whose partner
    switched between them means their ``Dec`` counters are exchanged.
    """
    if state.alpha != 1:
        raise ValueError("the counter ledger is defined for exactly one swap per step")
    order = state.hidden_order
    down_item = int(order[rank])
    up_item = int(order[rank + 1])
    ledger.dec[down_item] += 1
    ledger.inc[up_item] += 1
    after = freeze(state, machine)
    swapped = {down_item, up_item}
    other = {down_item: up_item, up_item: down_item}

    old_pairs = before.item_pairs()
    new_pairs = after.item_pairs()
    inc_exchange = any(
        leaf in swapped and new_pairs.get(node) == other[leaf]
        for node, leaf in old_pairs.items()
    )
    old_partner = {leaf: node for node, leaf in old_pairs.items()}
    new_partner = {leaf: node for node, leaf in new_pairs.items()}
    dec_exchange = any(
        node in swapped and new_partner.get(leaf) == other[node]
        for leaf, node in old_partner.items()
    )
    if inc_exchange:
        ledger.inc[[down_item, up_item]] = ledger.inc[[up_item, down_item]]
    if dec_exchange:
        ledger.dec[[down_item, up_item]] = ledger.dec[[up_item, down_item]]
    entry = {
        "clock": state.clock,
        "rank": rank,
        "case": _swap_case(before, machine, state, down_item, up_item),
        "pairing_changed": old_pairs != new_pairs,
        "inc_exchange": inc_exchange,
        "dec_exchange": dec_exchange,
    }
    ledger.exchange_log.append(entry)
    return after, entry


def invariant2_violations(ledger: CounterLedger, snapshot: FrozenSnapshot) -> list:
    out = []
    for a, pa in snapshot.P.items():
        if not (0 <= a < snapshot.n and 0 <= pa < snapshot.n):
            continue
        gap = snapshot.rank_at(pa) - snapshot.rank_at(a)
        have = int(ledger.inc[snapshot.items[pa]] + ledger.dec[snapshot.items[a]])
        if gap > have:
            out.append((a, pa, gap, have))
    return out


def invariant1_violations(ledger: CounterLedger, snapshot: FrozenSnapshot) -> list:
    out = []
    for k in snapshot.minima_path:
        if not 0 <= k < snapshot.n:
            continue
        mk = snapshot.M[k]
        gap = snapshot.rank_at(mk) - snapshot.rank_at(k)
        have = int(ledger.inc[snapshot.items[mk]] + ledger.dec[snapshot.items[k]])
        if gap > have:
            out.append((k, mk, gap, have))
    return out


def triangle_gap(ledger: CounterLedger, snapshot: FrozenSnapshot) -> float:
    """Right side minus left side of the vector-sum bound over minima-path nodes (>= 0 expected)."""
    lhs = 0
    for k in snapshot.minima_path:
        if 0 <= k < snapshot.n:
            mk = snapshot.M[k]
            lhs += int(ledger.inc[snapshot.items[mk]] + ledger.dec[snapshot.items[k]]) ** 2
    rhs = (math.sqrt(ledger.inc_sq) + math.sqrt(ledger.dec_sq)) ** 2
    return rhs - lhs


def check_lemma6(state: EvolvingState, machine: SorterMachine, snapshot: FrozenSnapshot,
                 round_start: RoundRecord | None = None,
                 report: BadInversionReport | None = None) -> bool:
    """S_t >= I_ts - 2 (t - t_s) - B_t for the round in progress."""
    if report is None:
        report = classify_bad_inversions(state, machine, snapshot)
    if round_start is None:
        round_start = machine.open_record(state)
    per_step = 1 + max(state.alpha, 1)
    bound = round_start.I_ts - per_step * (state.clock - round_start.t_s) - report.B
    return snapshot.S >= bound


def check_lemma7(ledger: CounterLedger, report: BadInversionReport) -> bool:
    """B_t <= 4 kappa with kappa one above the larger squared counter sum."""
    inc_sq, dec_sq = ledger.inc_sq, ledger.dec_sq
    if inc_sq == 0 and dec_sq == 0:
        return report.B == 0
    kappa = max(inc_sq, dec_sq) + 1
    return report.B <= 4 * kappa


# ----------------------------------------------------------------------
# instrumented driver

def round_length_ceiling(n: int) -> int:
    """Longest possible insertion round: every insertion travels to the front.

    At most ``n(n-1)/2`` fixes plus ``n - 1`` failed guards.  For a reversed
    list this is reached and exceeds ``n^2 / 2``.
    """
    return (n - 1) * (n + 2) // 2


@dataclass
class InstrumentReport:
    n: int
    seed: int
    steps: int = 0
    rounds: int = 0
    checks: int = 0
    swaps: int = 0
    lemma3_identity: int = 0
    lemma3_length: int = 0          # beyond the hard ceiling (n-1)(n+2)/2
    over_half_n_squared: int = 0    # observation only, see round_length_ceiling
    literal_blame_mismatch: int = 0 # observation only
    lemma3_drift: int = 0
    frozen_changed_by_sort: int = 0
    B_changed_by_sort: int = 0
    invariant1: int = 0
    invariant2: int = 0
    lemma6: int = 0
    lemma7: int = 0
    S_oracle: int = 0
    B_oracle: int = 0
    blame_bound: int = 0
    triangle: int = 0
    blame_flags: int = 0
    cases: dict = field(default_factory=dict)
    dumps: list = field(default_factory=list)
    rounds_seen: list = field(default_factory=list)
    series: list = field(default_factory=list)   # (t, I, round, S, B, good_swaps, flags)

    VIOLATION_FIELDS = (
        "lemma3_identity", "lemma3_length", "lemma3_drift", "frozen_changed_by_sort",
        "B_changed_by_sort", "invariant1", "invariant2", "lemma6", "lemma7",
        "S_oracle", "B_oracle", "blame_bound", "triangle", "blame_flags",
    )

    @property
    def violations(self) -> dict:
        return {k: getattr(self, k) for k in self.VIOLATION_FIELDS}

    @property
    def total_violations(self) -> int:
        return sum(self.violations.values())


def instrumented_run(n: int, seed: int, rounds: int = 3, check_every: int = 5,
                     init_policy: str = "uniform_random", max_dumps: int = 5,
                     oracle_every: int | None = None,
                     record_every: int | None = None,
                     max_n: int = 256,
                     max_steps: int | None = None) -> InstrumentReport:
    """Repeated insertion sort at alpha = 1 with every invariant checked.

    After every sort sub-step the frozen permutation and ``B_t`` are
    compared with their values before it; after every random swap the
    ledger is updated and both counter invariants are checked.  Every
    ``check_every`` steps the remaining-steps bound, the bad-inversion
    bound, the blame bound, the triangle step and the two replay oracles (``S_t`` and the bad-inversion set) are
    evaluated.  Violations are counted and the first few are dumped.  With
    ``record_every`` set, ``(t, I, round, S, B, good_swaps, flags)`` rows are
    kept every that many steps.
    """
    from .evolving_core import new_state

    if n > max_n:
        raise ValueError(f"instrumented runs are capped at n <= {max_n}; raise max_n to override")
    oracle_every = check_every if oracle_every is None else oracle_every
    state = new_state(n, 1, init_policy, seed)
    machine = SorterMachine.create(SorterKind.REPEATED_INSERTION, state)
    ledger = CounterLedger(n)
    rep = InstrumentReport(n=n, seed=seed)
    snap = freeze(state, machine)
    report = classify_bad_inversions(state, machine, snap)

    def dump(kind, extra=None):
        if len(rep.dumps) < max_dumps:
            rep.dumps.append({"kind": kind, "seed": seed, "clock": state.clock,
                              "snapshot": snap.dump(), "inc": ledger.inc.tolist(),
                              "dec": ledger.dec.tolist(), "extra": extra})

    while rep.rounds < rounds and (max_steps is None or rep.steps < max_steps):
        if rep.steps % check_every == 0:
            rep.checks += 1
            if not check_lemma6(state, machine, snap, report=report):
                rep.lemma6 += 1
                dump("lemma6")
            if not check_lemma7(ledger, report):
                rep.lemma7 += 1
                dump("lemma7")
            if report.B > blame_bound(snap):
                rep.blame_bound += 1
                dump("blame_bound")
            if triangle_gap(ledger, snap) < -1e-9:
                rep.triangle += 1
                dump("triangle")
            if rep.steps % oracle_every == 0:
                if remaining_steps_oracle(state, machine) != snap.S:
                    rep.S_oracle += 1
                    dump("S_oracle")
                if bad_inversions_oracle(state, machine) != report.stuck | report.blocked:
                    rep.B_oracle += 1
                    dump("B_oracle")

        B_before = report.B
        machine.sort_substep(state)
        mid = freeze(state, machine)
        if not np.array_equal(mid.hat_sigma, snap.hat_sigma):
            rep.frozen_changed_by_sort += 1
            dump("frozen_changed_by_sort")
        mid_report = classify_bad_inversions(state, machine, mid)
        if mid_report.B != B_before:
            rep.B_changed_by_sort += 1
            dump("B_changed_by_sort", {"before": B_before, "after": mid_report.B})

        current = {"snap": mid}

        def on_swap(r, delta):
            after, entry = ledger_on_random_swap(ledger, state, machine, r, current["snap"])
            current["snap"] = after
            rep.swaps += 1
            rep.cases[entry["case"]] = rep.cases.get(entry["case"], 0) + 1
            v2 = invariant2_violations(ledger, after)
            v1 = invariant1_violations(ledger, after)
            if v2:
                rep.invariant2 += 1
                dump("invariant2", {"entry": entry, "violations": v2})
            if v1:
                rep.invariant1 += 1
                dump("invariant1", {"entry": entry, "violations": v1})

        log = state.end_step(on_random_swap=on_swap)
        record = machine.after_step(state, log)
        rep.steps += 1
        if record is not None:
            rep.rounds += 1
            rep.rounds_seen.append(record)
            if record.length != record.F + n - 1:
                rep.lemma3_identity += 1
            if record.length > round_length_ceiling(n):
                rep.lemma3_length += 1
            if not record.length < n * n / 2:
                rep.over_half_n_squared += 1
            if record.max_drift > n - 1:
                rep.lemma3_drift += 1
            ledger.reset()
        snap = freeze(state, machine)
        report = classify_bad_inversions(state, machine, snap)
        rep.blame_flags += len(report.flags)
        rep.literal_blame_mismatch += len(report.literal_mismatch)
        if record_every and state.clock % record_every == 0:
            flags = ";".join(sorted({f[0] for f in report.flags}))
            rep.series.append((state.clock, state.inversions, machine.round_number,
                               snap.S, report.B, machine.good_total, flags))
        if report.flags:
            dump("blame_flags", report.flags[:5])
    return rep
