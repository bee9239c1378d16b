import numpy as np
import pytest

from evosort import SorterMachine, new_state, run_rounds
from evosort import _jit
from evosort._kernels import simulate


def test_env_flag_selects_backend(monkeypatch):
    monkeypatch.setenv("EVOSORT_BACKEND", "python")
    assert simulate.select() is simulate.py_func
    monkeypatch.setenv("EVOSORT_BACKEND", "numba")
    assert simulate.select() is simulate.compiled
    monkeypatch.setenv("EVOSORT_BACKEND", "auto")
    assert _jit.resolve_backend(None) == "numba"


def test_bad_backend_names(monkeypatch):
    monkeypatch.setenv("EVOSORT_BACKEND", "fortran")
    with pytest.raises(ValueError):
        _jit.default_backend()
    with pytest.raises(ValueError):
        _jit.resolve_backend("gpu")


def test_missing_numba_falls_back(monkeypatch):
    monkeypatch.setattr(_jit, "numba", None)
    assert _jit.resolve_backend("auto") == "python"
    with pytest.raises(RuntimeError):
        _jit.resolve_backend("numba")


@pytest.mark.parametrize("kind", ["repeated_insertion", "quick_then_insertion",
                                  "repeated_quicksort_baseline"])
def test_backends_agree_on_long_runs(kind):
    finals = []
    for backend in ("python", "numba"):
        state = new_state(64, 1, "reversed", 3)
        m = SorterMachine.create(kind, state)
        records, series = run_rounds(m, state, steps=20000, sample_every=64, backend=backend)
        finals.append((state.to_json(), len(records), series.inversions.tolist()))
    assert finals[0] == finals[1]


def test_kernel_inversions_stay_exact():
    state = new_state(100, 3, "uniform_random", 5)
    m = SorterMachine.create("quick_then_insertion", state)
    for _ in range(5):
        run_rounds(m, state, steps=7777)
        state.check_consistency()
    assert state.inversions == state.brute_force_inversions()
