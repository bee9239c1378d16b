"""Compare the numba kernel with its interpreted twin.

    python benchmarks/bench_kernels.py [--n 256 512] [--steps 200000]

Both backends run the same seeded trajectory; the script checks that the
final states agree and prints steps per second for each.
"""

import argparse
import time

import numpy as np

from evosort import SorterMachine, new_state, run_rounds


def timed_run(kind, n, steps, seed, backend):
    state = new_state(n, 1, "uniform_random", seed)
    machine = SorterMachine.create(kind, state)
    t0 = time.perf_counter()
    records, _ = run_rounds(machine, state, steps=steps, sample_every=n, backend=backend)
    elapsed = time.perf_counter() - t0
    return elapsed, state, len(records)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, nargs="+", default=[128, 512])
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    # compile once outside the timed region
    timed_run("repeated_insertion", 8, 100, 0, "numba")
    timed_run("quick_then_insertion", 8, 100, 0, "numba")

    print(f"{'sorter':<30}{'n':>6}{'python s':>11}{'numba s':>10}{'speedup':>10}  same")
    for kind in ("repeated_insertion", "quick_then_insertion", "repeated_quicksort_baseline"):
        for n in args.n:
            tp, sp, rp = timed_run(kind, n, args.steps, args.seed, "python")
            tn, sn, rn = timed_run(kind, n, args.steps, args.seed, "numba")
            same = np.array_equal(sp.sigma, sn.sigma) and sp.inversions == sn.inversions and rp == rn
            print(f"{kind:<30}{n:>6}{tp:>11.3f}{tn:>10.4f}{tp / tn:>10.0f}  {same}")


if __name__ == "__main__":
    main()
