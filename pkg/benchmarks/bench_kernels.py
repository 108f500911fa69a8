"""Compare the numba and numpy coincidence kernels.

    python3 benchmarks/bench_kernels.py [--events 2000000] [--repeat 5]

Both paths run in the same process (``use_numba`` is passed explicitly), so
the ``QCOEX_DISABLE_NUMBA`` flag is not needed here. Counts are checked for
equality before any timing is reported.
"""
import argparse
import time

import numpy as np

from qcoex import kernels
from qcoex._accel import NUMBA_AVAILABLE
from qcoex.mcsim import poisson_stream


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--events", type=int, default=2_000_000, help="events per stream")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--window", type=float, default=600.0, help="coincidence window, ps")
    args = ap.parse_args(argv)

    duration = 1.0
    rate = args.events / duration
    a = poisson_stream(rate, duration, seed=1)
    b = poisson_stream(rate, duration, seed=2)
    quad = [poisson_stream(rate / 10, duration, seed=s) for s in range(3, 7)]
    half = 0.5 * args.window

    cases = {
        "count_window": lambda use: kernels.count_window(a, b, half, use_numba=use),
        "count_window+delay": lambda use: kernels.count_window(a, b, half, offset=2400.0, use_numba=use),
        "nfold_count(4)": lambda use: kernels.nfold_count(quad, 100 * half, use_numba=use),
    }
    backends = [False] + ([True] if NUMBA_AVAILABLE else [])
    print(f"{len(a)} / {len(b)} events, 4-fold streams of ~{len(quad[0])} events")
    print(f"{'kernel':<22}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, fn in cases.items():
        if NUMBA_AVAILABLE:
            fn(True)  # compile outside the timed region
        res = {use: best_of(lambda: fn(use), args.repeat) for use in backends}
        counts = {out for _, out in res.values()}
        if len(counts) != 1:
            raise SystemExit(f"{name}: backends disagree: {counts}")
        t_np = res[False][0] * 1e3
        if NUMBA_AVAILABLE:
            t_nb = res[True][0] * 1e3
            print(f"{name:<22}{t_np:>12.2f}{t_nb:>12.2f}{t_np / t_nb:>9.1f}x")
        else:
            print(f"{name:<22}{t_np:>12.2f}{'n/a':>12}{'':>10}")


if __name__ == "__main__":
    main()
