"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat 3] [--events 200000] [--bits 1000000]

Prints one line per kernel and backend with the best-of-N wall time, plus the
speedup. The pure-Python path is always available; the compiled one only if
the extension was built.
"""

import argparse
import time

import numpy as np

from arng import kernels
from arng.simulate import ScenarioConfig, simulate


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--events", type=int, default=200_000, help="approximate stream length for the gap filter")
    ap.add_argument("--bits", type=int, default=1_000_000)
    ap.add_argument("--order", type=int, default=7, help="n-gram length (lookback depth + 1)")
    args = ap.parse_args(argv)

    rate = args.events / 2.0
    stream = simulate(ScenarioConfig(duration=1.0, s_blue=rate, s_red=rate, seed=1))
    gap = 420e-9 * 1e15 / stream.clock_fs
    bits = (np.random.default_rng(2).random(args.bits) < 0.74).astype(np.uint8)

    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    print(f"default backend: {kernels.BACKEND}; {len(stream)} events, {bits.size} bits, n-gram order {args.order}")
    results = {}
    for name in backends:
        results[("gap", name)] = best_of(lambda: kernels.greedy_gap_mask(stream.ticks, gap, True, backend=name), args.repeat)
        results[("ngram", name)] = best_of(lambda: kernels.ngram_counts(bits, args.order, backend=name), args.repeat)

    # both backends must agree before their timings mean anything
    if "cython" in backends:
        assert np.array_equal(kernels.greedy_gap_mask(stream.ticks, gap, True, backend="python"),
                              kernels.greedy_gap_mask(stream.ticks, gap, True, backend="cython"))
        assert np.array_equal(kernels.ngram_counts(bits, args.order, backend="python"),
                              kernels.ngram_counts(bits, args.order, backend="cython"))

    for kernel in ("gap", "ngram"):
        line = f"{kernel:6s}" + "".join(f"  {b}: {results[(kernel, b)] * 1e3:9.2f} ms" for b in backends)
        if "cython" in backends:
            line += f"  speedup x{results[(kernel, 'python')] / results[(kernel, 'cython')]:.1f}"
        print(line)


if __name__ == "__main__":
    main()
