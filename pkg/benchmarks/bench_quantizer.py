"""Benchmark the nearest-codeword kernel: compiled extension vs numpy fallback.

The quantizer is the hot inner loop of the Monte-Carlo decoding chains (each
trial quantizes several times against tables of up to p^k_F codewords), so
this is the comparison that matters.  Also cross-checks that both backends
return identical points.

Usage: python3 benchmarks/bench_quantizer.py [--samples N]
"""

import argparse
import time

import numpy as np

from cfkit._kernels import _pyquant

try:
    from cfkit._kernels import _quant

    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False


def make_table(p, k, n, gamma, rng):
    import itertools

    V = np.array(list(itertools.product(range(p), repeat=k)), dtype=np.int64)
    G = rng.integers(0, p, size=(k, n))
    return (gamma / p) * ((V @ G) % p).astype(np.float64)


def run(fn, shifts, queries, gamma):
    start = time.perf_counter()
    out = [fn(shifts, q, gamma) for q in queries]
    return time.perf_counter() - start, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=2000)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    gamma = 4.0
    print(f"{'table':>14} {'queries':>8} {'numpy':>12} {'compiled':>12} {'speedup':>8}")
    for p, k, n in [(3, 2, 4), (5, 3, 6), (7, 4, 8), (11, 4, 10)]:
        shifts = make_table(p, k, n, gamma, rng)
        queries = [rng.normal(size=n) * gamma for _ in range(args.samples)]
        t_py, out_py = run(_pyquant.nearest_codeword_point, shifts, queries, gamma)
        if HAVE_COMPILED:
            t_c, out_c = run(_quant.nearest_codeword_point, shifts, queries, gamma)
            for a, b in zip(out_py, out_c):
                assert np.array_equal(a, b), "backends disagree"
            speed = f"{t_py / t_c:7.1f}x"
            t_c_str = f"{t_c * 1e3:9.1f} ms"
        else:
            speed, t_c_str = "   n/a", "   not built"
        print(f"{p}^{k} = {p ** k:>6} {args.samples:>8} {t_py * 1e3:9.1f} ms "
              f"{t_c_str} {speed}")
    if not HAVE_COMPILED:
        print("compiled kernel unavailable; run `pip install -e . "
              "--no-build-isolation` to build it")


if __name__ == "__main__":
    main()
