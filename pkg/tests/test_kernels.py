import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcoex import kernels
from qcoex._accel import NUMBA_AVAILABLE

sorted_times = st.lists(st.floats(0.0, 1e6, allow_nan=False), max_size=200).map(
    lambda xs: np.sort(np.array(xs, dtype=float)))


def brute_pairs(a, b, half, offset=0.0):
    return int(sum(np.sum(np.abs(x + offset - b) <= half) for x in a))


def brute_nfold(streams, half):
    ref, rest = streams[0], streams[1:]
    total = 0
    for t in ref:
        prod = 1
        for s in rest:
            prod *= int(np.sum(np.abs(s - t) <= half))
        total += prod
    return total


@pytest.mark.parametrize("use", [False, True] if NUMBA_AVAILABLE else [False])
class TestBackends:
    @given(a=sorted_times, b=sorted_times, half=st.floats(0.0, 5e4), offset=st.floats(-1e4, 1e4))
    def test_count_window_matches_brute_force(self, use, a, b, half, offset):
        assert kernels.count_window(a, b, half, offset, use_numba=use) == brute_pairs(a, b, half, offset)

    @given(streams=st.lists(sorted_times, min_size=2, max_size=4), half=st.floats(0.0, 5e4))
    def test_nfold_matches_brute_force(self, use, streams, half):
        assert kernels.nfold_count(streams, half, use_numba=use) == brute_nfold(streams, half)

    def test_identical_streams(self, use):
        a = np.arange(0.0, 1e6, 1000.0)
        assert kernels.count_window(a, a, 100.0, use_numba=use) == a.size

    def test_empty(self, use):
        assert kernels.count_window(np.array([]), np.array([1.0]), 1.0, use_numba=use) == 0
        assert kernels.nfold_count([np.array([1.0]), np.array([])], 1.0, use_numba=use) == 0


def test_backends_agree_on_large_streams():
    rng = np.random.default_rng(0)
    a = np.sort(rng.uniform(0, 1e9, 200_000))
    b = np.sort(rng.uniform(0, 1e9, 200_000))
    ref = kernels.count_window(a, b, 600.0, use_numba=False)
    if NUMBA_AVAILABLE:
        assert kernels.count_window(a, b, 600.0, use_numba=True) == ref


def test_disable_flag_selects_numpy():
    env = dict(os.environ, QCOEX_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from qcoex._accel import backend; print(backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
