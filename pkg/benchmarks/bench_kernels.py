"""Compiled vs numpy kernels on the shapes the synthesis and soft-covering code uses.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from synthcap import _pykernels
from synthcap.util import sequences

try:
    from synthcap import _ckernels
except ImportError:
    _ckernels = None


def cases():
    rng = np.random.default_rng(0)
    for n, k, c in ((4, 2, 16), (6, 3, 64), (8, 2, 256), (10, 2, 1024)):
        logw = np.log2(rng.dirichlet(np.ones(k), size=k))
        seqs = sequences(k, n)
        cw = rng.integers(0, k, size=(c, n))
        yield f"loglik n={n} |V|={k} M={c}", "sequence_loglik", (cw, seqs, logw)
    for rows, k in ((256, 64), (4096, 256), (16384, 1024)):
        r = rng.dirichlet(np.ones(k), size=rows)
        yield f"batch_tv {rows}x{k}", "batch_tv", (r, rng.dirichlet(np.ones(k)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'case':32s} {'numpy ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for label, name, inputs in cases():
        py = min(timeit.repeat(lambda: getattr(_pykernels, name)(*inputs),
                               number=1, repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{label:32s} {py:10.3f} {'n/a':>10s} {'n/a':>8s}")
            continue
        cy = min(timeit.repeat(lambda: getattr(_ckernels, name)(*inputs),
                               number=1, repeat=args.repeat)) * 1e3
        a, b = getattr(_pykernels, name)(*inputs), getattr(_ckernels, name)(*inputs)
        assert np.allclose(a, b, atol=1e-10), label
        print(f"{label:32s} {py:10.3f} {cy:10.3f} {py / cy:8.2f}")


if __name__ == "__main__":
    main()
