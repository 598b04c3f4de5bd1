"""Compare the numba and numpy backends of the batched recursion kernel.

Usage::

    python benchmarks/bench_kernels.py [--claims 5000] [--agents 9] [--repeat 5]

Both backends run the nine-agent population over the same synthetic corpus.
The first numba call includes JIT compilation and is reported separately.
"""

import argparse
import time

import numpy as np

from bpl import _kernels
from bpl.features import FeatureExtractor
from bpl.population import RecallPool, canonical_population, run_population
from bpl.synth import liar_corpus


def timed(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, min(times), float(np.median(times))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--claims", type=int, default=5000)
    ap.add_argument("--agents", type=int, default=9)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    claims = liar_corpus(args.claims, seed=0)
    feats = FeatureExtractor().extract_all(claims)
    ids = [c.id for c in claims]
    pool = RecallPool.from_split(feats, [c.label.binary for c in claims])
    agents = canonical_population(0)[: args.agents]

    def run(use_numba):
        return run_population(ids, feats, agents, pool, 0, use_numba=use_numba)

    print(f"{args.claims} claims x {len(agents)} agents, recall pool {pool.phi.size}")
    ref, best_np, med_np = timed(lambda: run(False), args.repeat)
    print(f"numpy   best {best_np * 1e3:9.1f} ms   median {med_np * 1e3:9.1f} ms")
    if not _kernels.HAS_NUMBA:
        print("numba   unavailable (not installed or BPL_DISABLE_NUMBA set)")
        return
    t0 = time.perf_counter()
    run(True)
    print(f"numba   first call (includes compilation) {(time.perf_counter() - t0) * 1e3:.1f} ms")
    fast, best_nb, med_nb = timed(lambda: run(True), args.repeat)
    print(f"numba   best {best_nb * 1e3:9.1f} ms   median {med_nb * 1e3:9.1f} ms")
    print(f"speedup {best_np / best_nb:.1f}x (best of {args.repeat})")
    print(f"max |belief difference| {np.max(np.abs(ref.beliefs - fast.beliefs)):.2e}")


if __name__ == "__main__":
    main()
