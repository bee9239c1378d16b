"""Sorting a list whose true order drifts by random adjacent swaps.

Core model in :mod:`evosort.evolving_core`, step-wise sorters in
:mod:`evosort.sorters`, frozen-state instrumentation in
:mod:`evosort.frozen_analysis`, estimators and preset drivers in
:mod:`evosort.experiments`.
"""

from .evolving_core import (
    ContractViolation,
    EvolvingState,
    InitPolicy,
    RandomSource,
    StepLog,
    brute_force_inversions,
    count_inversions,
    kendall_tau,
    new_state,
)
from .sorters import (
    Phase,
    RoundRecord,
    SorterKind,
    SorterMachine,
    StepOutcome,
    TimeSeries,
    run_rounds,
)

__all__ = [
    "ContractViolation",
    "EvolvingState",
    "InitPolicy",
    "RandomSource",
    "StepLog",
    "brute_force_inversions",
    "count_inversions",
    "kendall_tau",
    "new_state",
    "Phase",
    "RoundRecord",
    "SorterKind",
    "SorterMachine",
    "StepOutcome",
    "TimeSeries",
    "run_rounds",
]

__version__ = "0.1.0"
