"""Flat-array kernel for long metric-only runs.

``simulate`` is a transcription of :class:`evosort.sorters.SorterMachine`
driving :class:`evosort.evolving_core.EvolvingState`, operating on the same
arrays and consuming the same random stream, so both engines produce
identical trajectories for identical seeds.  The test suite checks that.
"""

from __future__ import annotations

from ._jit import jitable, kernel

# sorter kinds
K_INSERTION = 0
K_QUICK_THEN_INSERTION = 1
K_QUICK_BASELINE = 2

# phases
PH_QUICK = 0
PH_INSERTION = 1

# machine-state slots
M_KIND = 0
M_PHASE = 1
M_I = 2
M_J = 3
M_ROUND = 4          # completed rounds (or baseline passes)
M_IN_ROUND = 5
M_T_S = 6
M_F = 7
M_I_TS = 8
M_MAX_DRIFT = 9
M_GOOD = 10          # good random swaps in the current round
M_PART = 11          # 1 while a partition is in progress
M_P_LO = 12
M_P_HI = 13
M_P_K = 14
M_P_STORE = 15
M_TOP = 16           # number of frames on the stack
M_PRELUDE_STEPS = 17
M_GOOD_TOTAL = 18
M_SIZE = 19

# scalar slots
S_CLOCK = 0
S_INV = 1
S_SWAP_POS = 2
S_PIVOT_POS = 3
S_N_SAMPLES = 4
S_N_ROUNDS = 5
S_STEPS = 6
S_SIZE = 7

# round-record columns
R_ROUND = 0
R_T_S = 1
R_T_E = 2
R_F = 3
R_I_TS = 4
R_I_TE = 5
R_MAX_DRIFT = 6
R_GOOD = 7
R_SIZE = 8

# sample columns
C_T = 0
C_I = 1
C_ROUND = 2
C_GOOD = 3
C_SIZE = 4


@jitable
def _exchange(maintained, sigma, sigma_inv, p, q):
    """Swap positions p < q and return the change in inversions."""
    x = sigma[p]
    y = sigma[q]
    lo = x if x < y else y
    hi = y if x < y else x
    between = 0
    for m in range(p + 1, q):
        v = sigma[m]
        if v > lo and v < hi:
            between += 1
    d = 2 * between + 1
    if x > y:
        d = -d
    sigma[p] = y
    sigma[q] = x
    sigma_inv[y] = p
    sigma_inv[x] = q
    it = maintained[p]
    maintained[p] = maintained[q]
    maintained[q] = it
    return d


def _simulate(maintained, sigma, sigma_inv, scal, alpha, ms, stack,
              swap_buf, pivot_buf, max_steps, max_rounds, sample_every,
              samples, rounds_out):
    n = sigma.shape[0]
    steps = 0
    while steps < max_steps:
        if max_rounds >= 0 and scal[S_N_ROUNDS] >= max_rounds:
            break
        # suspend before the step if the random window cannot cover it
        if scal[S_SWAP_POS] + alpha > swap_buf.shape[0]:
            break
        quick = ms[M_PHASE] == PH_QUICK
        if quick and ms[M_PART] == 0 and scal[S_PIVOT_POS] >= pivot_buf.shape[0]:
            break

        finished_round = False
        # ---------------- sort sub-step ----------------
        if quick:
            if ms[M_PART] == 0:
                top = ms[M_TOP] - 1
                lo = stack[2 * top]
                hi = stack[2 * top + 1]
                ms[M_TOP] = top
                u = pivot_buf[scal[S_PIVOT_POS]]
                scal[S_PIVOT_POS] += 1
                p = lo + int(u * (hi - lo + 1))
                if p > hi:
                    p = hi
                if p != hi:
                    scal[S_INV] += _exchange(maintained, sigma, sigma_inv, p, hi)
                ms[M_PART] = 1
                ms[M_P_LO] = lo
                ms[M_P_HI] = hi
                ms[M_P_K] = lo
                ms[M_P_STORE] = lo
            lo = ms[M_P_LO]
            hi = ms[M_P_HI]
            k = ms[M_P_K]
            store = ms[M_P_STORE]
            if sigma[k] < sigma[hi]:
                if store != k:
                    scal[S_INV] += _exchange(maintained, sigma, sigma_inv, store, k)
                store += 1
                ms[M_F] += 1
            k += 1
            ms[M_P_K] = k
            ms[M_P_STORE] = store
            if ms[M_KIND] == K_QUICK_THEN_INSERTION:
                ms[M_PRELUDE_STEPS] += 1
            if k == hi:
                if store != hi:
                    scal[S_INV] += _exchange(maintained, sigma, sigma_inv, store, hi)
                ms[M_PART] = 0
                top = ms[M_TOP]
                if hi - (store + 1) >= 1:
                    stack[2 * top] = store + 1
                    stack[2 * top + 1] = hi
                    top += 1
                if store - 1 - lo >= 1:
                    stack[2 * top] = lo
                    stack[2 * top + 1] = store - 1
                    top += 1
                ms[M_TOP] = top
                if top == 0:
                    if ms[M_KIND] == K_QUICK_THEN_INSERTION:
                        ms[M_PHASE] = PH_INSERTION
                        ms[M_I] = 1
                        ms[M_J] = 1
                    else:
                        finished_round = True
        else:
            i = ms[M_I]
            j = ms[M_J]
            if j > 0 and sigma[j] < sigma[j - 1]:
                x = sigma[j]
                y = sigma[j - 1]
                sigma[j] = y
                sigma[j - 1] = x
                sigma_inv[x] = j - 1
                sigma_inv[y] = j
                it = maintained[j]
                maintained[j] = maintained[j - 1]
                maintained[j - 1] = it
                scal[S_INV] -= 1
                ms[M_F] += 1
                ms[M_J] = j - 1
            else:
                i += 1
                ms[M_I] = i
                if i == n:
                    finished_round = True
                else:
                    ms[M_J] = i

        # ---------------- random swaps ----------------
        good = 0
        for _ in range(alpha):
            r = swap_buf[scal[S_SWAP_POS]]
            scal[S_SWAP_POS] += 1
            p = sigma_inv[r]
            q = sigma_inv[r + 1]
            if p < q:
                scal[S_INV] += 1
            else:
                scal[S_INV] -= 1
                good += 1
            sigma[p] = r + 1
            sigma[q] = r
            sigma_inv[r] = q
            sigma_inv[r + 1] = p
        scal[S_CLOCK] += 1
        steps += 1
        ms[M_GOOD_TOTAL] += good

        # ---------------- bookkeeping ----------------
        if ms[M_IN_ROUND] == 1:
            ms[M_GOOD] += good
            drift = scal[S_INV] - ms[M_I_TS]
            if drift > ms[M_MAX_DRIFT]:
                ms[M_MAX_DRIFT] = drift
        if finished_round:
            row = scal[S_N_ROUNDS]
            rounds_out[row, R_ROUND] = ms[M_ROUND]
            rounds_out[row, R_T_S] = ms[M_T_S]
            rounds_out[row, R_T_E] = scal[S_CLOCK]
            rounds_out[row, R_F] = ms[M_F]
            rounds_out[row, R_I_TS] = ms[M_I_TS]
            rounds_out[row, R_I_TE] = scal[S_INV]
            rounds_out[row, R_MAX_DRIFT] = ms[M_MAX_DRIFT]
            rounds_out[row, R_GOOD] = ms[M_GOOD]
            scal[S_N_ROUNDS] = row + 1
            ms[M_ROUND] += 1
            ms[M_IN_ROUND] = 0
            if ms[M_KIND] == K_QUICK_BASELINE:
                stack[0] = 0
                stack[1] = n - 1
                ms[M_TOP] = 1
            else:
                ms[M_I] = 1
                ms[M_J] = 1
        if ms[M_IN_ROUND] == 0 and (ms[M_PHASE] == PH_INSERTION or ms[M_KIND] == K_QUICK_BASELINE):
            ms[M_IN_ROUND] = 1
            ms[M_T_S] = scal[S_CLOCK]
            ms[M_I_TS] = scal[S_INV]
            ms[M_F] = 0
            ms[M_MAX_DRIFT] = 0
            ms[M_GOOD] = 0
        if scal[S_CLOCK] % sample_every == 0:
            row = scal[S_N_SAMPLES]
            if row < samples.shape[0]:
                samples[row, C_T] = scal[S_CLOCK]
                samples[row, C_I] = scal[S_INV]
                samples[row, C_ROUND] = ms[M_ROUND]
                samples[row, C_GOOD] = ms[M_GOOD_TOTAL]
                scal[S_N_SAMPLES] = row + 1
    scal[S_STEPS] += steps
    return steps


simulate = kernel(_simulate)
