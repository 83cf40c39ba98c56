"""Compare the compiled and pure-numpy resampling kernels.

Times the two hot paths on typical problem sizes:

  * bootstrap_replicates, n=200 observations, d=36 product components
    (8 scores), B=1000 replicates, both the AMOC and the epidemic form
  * bridge_chunk, 2000 draws on a 1000-point grid

Both backends are imported directly, so this runs regardless of the
FCOV_NUMBA setting.  The first numba call pays the JIT cost; a warm-up
round keeps it out of the timings.

Run with: python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from fcov.bootstrap import replicate_starts
from fcov.kernels import available_backends, numpy_backend

try:
    from fcov.kernels import numba_backend
except ImportError:
    numba_backend = None

N_OBS = 200
N_COMPONENTS = 36
N_REPLICATES = 1000
BLOCK = 6
BRIDGE_DRAWS = 2000
BRIDGE_GRID = 1000
REPEATS = 5


def best_of(fn, repeats=REPEATS):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def report(label, t_numpy, t_numba):
    if t_numba is None:
        print(f"{label:<28} numpy {t_numpy * 1e3:8.1f} ms   numba unavailable")
    else:
        print(
            f"{label:<28} numpy {t_numpy * 1e3:8.1f} ms   "
            f"numba {t_numba * 1e3:8.1f} ms   speedup {t_numpy / t_numba:5.1f}x"
        )


def bench_bootstrap(epidemic):
    rng = np.random.default_rng(0)
    resid = rng.standard_normal((N_OBS, N_COMPONENTS))
    s11_sq = float(resid[:, 0].var())
    starts = replicate_starts(N_OBS, N_OBS // BLOCK + 1, N_REPLICATES, seed=1)
    args = (resid, starts, BLOCK, 2, s11_sq, epidemic, False, False)

    values_np, _ = numpy_backend.bootstrap_replicates(*args)
    t_numpy = best_of(lambda: numpy_backend.bootstrap_replicates(*args))
    t_numba = None
    if numba_backend is not None:
        values_nb, _ = numba_backend.bootstrap_replicates(*args)  # warm-up + parity
        np.testing.assert_allclose(values_nb, values_np, rtol=1e-10)
        t_numba = best_of(lambda: numba_backend.bootstrap_replicates(*args))
    report(f"bootstrap {'epidemic' if epidemic else 'amoc'} (B=1000)", t_numpy, t_numba)


def bench_bridge():
    rng = np.random.default_rng(2)
    z = rng.standard_normal((BRIDGE_DRAWS, 1, BRIDGE_GRID))

    draws_np = numpy_backend.bridge_chunk(z, 0)
    t_numpy = best_of(lambda: numpy_backend.bridge_chunk(z, 0))
    t_numba = None
    if numba_backend is not None:
        draws_nb = numba_backend.bridge_chunk(z, 0)
        np.testing.assert_allclose(draws_nb, draws_np, rtol=1e-10)
        t_numba = best_of(lambda: numba_backend.bridge_chunk(z, 0))
    report("bridge chunk (2000x1000)", t_numpy, t_numba)


if __name__ == "__main__":
    print(f"available backends: {', '.join(available_backends())}")
    print(f"best of {REPEATS} runs\n")
    bench_bootstrap(epidemic=False)
    bench_bootstrap(epidemic=True)
    bench_bridge()
