"""Coincidence-counting kernels for sorted timestamp arrays.

Each kernel has a numba version (two-pointer sweeps) and a numpy version
(``searchsorted``). Both return identical integers; ``QCOEX_DISABLE_NUMBA``
selects the numpy path.
"""
import numpy as np

from ._accel import NUMBA_AVAILABLE, njit


@njit(cache=True)
def _count_window_jit(a, b, half, offset):
    n_b = b.shape[0]
    lo = 0
    hi = 0
    total = 0
    for k in range(a.shape[0]):
        t = a[k] + offset
        while lo < n_b and b[lo] < t - half:
            lo += 1
        if hi < lo:
            hi = lo
        while hi < n_b and b[hi] <= t + half:
            hi += 1
        total += hi - lo
    return total


def _count_window_np(a, b, half, offset):
    t = a + offset
    lo = np.searchsorted(b, t - half, side="left")
    hi = np.searchsorted(b, t + half, side="right")
    return int(np.sum(hi - lo))


@njit(cache=True)
def _nfold_jit(ref, others, starts, half):
    # others: all non-reference streams concatenated; starts: offsets, len n+1
    n = starts.shape[0] - 1
    lo = starts[:-1].copy()
    hi = starts[:-1].copy()
    total = 0
    for k in range(ref.shape[0]):
        t = ref[k]
        prod = 1
        for j in range(n):
            end = starts[j + 1]
            while lo[j] < end and others[lo[j]] < t - half:
                lo[j] += 1
            if hi[j] < lo[j]:
                hi[j] = lo[j]
            while hi[j] < end and others[hi[j]] <= t + half:
                hi[j] += 1
            prod *= hi[j] - lo[j]
        total += prod
    return total


def _nfold_np(ref, streams, half):
    prod = np.ones(ref.shape[0], dtype=np.int64)
    for s in streams:
        lo = np.searchsorted(s, ref - half, side="left")
        hi = np.searchsorted(s, ref + half, side="right")
        prod *= hi - lo
    return int(prod.sum())


def count_window(a, b, half, offset=0.0, use_numba=None):
    """Number of pairs (i, j) with ``|a[i] + offset - b[j]| <= half``.

    ``a`` and ``b`` must be sorted ascending.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        return 0
    if use_numba is None:
        use_numba = NUMBA_AVAILABLE
    if use_numba:
        return int(_count_window_jit(a, b, float(half), float(offset)))
    return _count_window_np(a, b, float(half), float(offset))


def nfold_count(streams, half, use_numba=None):
    """Tuples with one event per stream inside ``+-half`` of a stream-0 event."""
    arrays = [np.ascontiguousarray(s, dtype=np.float64) for s in streams]
    if any(s.size == 0 for s in arrays):
        return 0
    ref, rest = arrays[0], arrays[1:]
    if use_numba is None:
        use_numba = NUMBA_AVAILABLE
    if use_numba:
        starts = np.zeros(len(rest) + 1, dtype=np.int64)
        starts[1:] = np.cumsum([s.size for s in rest])
        return int(_nfold_jit(ref, np.concatenate(rest), starts, float(half)))
    return _nfold_np(ref, rest, float(half))
