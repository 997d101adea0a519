"""Compare the compiled and pure-Python kernel backends.

Run with ``python benchmarks/bench_kernels.py``.  Times the quasi-triangular
Sylvester solve, a full ordered Schur factorization (which exercises the
block swaps), and one ILDM sweep, for every available backend.
"""

import argparse
import timeit

import numpy as np
import scipy.linalg

from sml.linalg import _backend, schur_ordered
from sml.models import mmh_system


def planted(size, n_fast, rng):
    slow = -rng.uniform(0.1, 2.0, size - n_fast)
    fast = -rng.uniform(100.0, 1000.0, n_fast)
    V = rng.normal(size=(size, size))
    return V @ np.diag(np.concatenate([slow, fast])) @ np.linalg.inv(V)


def quasi_triangular_pair(p, q, rng):
    A, _ = scipy.linalg.schur(planted(p, max(1, p // 2), rng), output="real")
    B, _ = scipy.linalg.schur(-np.abs(rng.normal(size=(q, q))) * 0.01 + np.diag(-rng.uniform(0.1, 1, q)),
                              output="real")
    return A, B, rng.normal(size=(p, q))


def bench(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    backends = _backend.available()
    print(f"backends: {', '.join(backends)}")
    print(f"{'case':34s}" + "".join(f"{b:>14s}" for b in backends) + "   speedup")

    rows = []
    for p, q in ((2, 2), (8, 8), (32, 32)):
        A, B, C = quasi_triangular_pair(p, q, rng)
        number = max(1, 2000 // (p * q))
        rows.append((f"trsyl {p}x{q}", {b: bench(lambda b=b: _backend.get(b).trsyl(A, B, C), args.repeat, number)
                                       for b in backends}))
    for size in (4, 16, 48):
        J = planted(size, size // 2, rng)
        number = max(1, 200 // size)
        rows.append((f"schur_ordered {size}x{size}",
                     {b: bench(lambda b=b: schur_ordered(J, size // 2, backend=b), args.repeat, number)
                      for b in backends}))

    from sml.ildm import ildm_sweep

    sys_ = mmh_system()
    axes = (np.linspace(0, 3, 61),)
    timings = {}
    for b in backends:
        _backend.set_backend(b)
        timings[b] = bench(lambda: ildm_sweep(sys_, axes, 1e-2), max(1, args.repeat // 2), 1)
    _backend.set_backend(backends[0] if "cython" not in backends else "cython")
    rows.append(("ildm_sweep mmh 61 nodes", timings))

    for name, t in rows:
        line = f"{name:34s}" + "".join(f"{t[b] * 1e6:12.1f}us" for b in backends)
        if "cython" in t and "python" in t:
            line += f"   {t['python'] / t['cython']:6.1f}x"
        print(line)


if __name__ == "__main__":
    main()
