"""Compare the compiled and pure-Python top-k kernels.

    python benchmarks/bench_knn.py [--n 20000] [--dim 128] [--threads 8] [--repeat 3]

Times the selection kernel alone on one similarity block, then the full
exact kNN build, for each available backend.
"""
import argparse
import time

import numpy as np

from coordnet.kernels import BACKENDS, topk_rows
from coordnet.knn import build_knn, default_k
from coordnet.vectorize import EmbeddingMatrix


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20_000)
    ap.add_argument("--dim", type=int, default=128)
    ap.add_argument("--threads", type=int, default=8)
    ap.add_argument("--block", type=int, default=1024, help="rows in the kernel-only block")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    x = rng.normal(size=(args.n, args.dim))
    emb = EmbeddingMatrix(tuple(f"p{i}" for i in range(args.n)), x).normalize()
    k = default_k(args.n)
    block = np.ascontiguousarray(emb.vectors[: args.block] @ emb.vectors.T)

    print(f"N={args.n} dim={args.dim} k={k} threads={args.threads} backends={sorted(BACKENDS)}")
    print(f"{'backend':<8} {'kernel (s)':>11} {'build_knn (s)':>14}")
    results = {}
    for name in sorted(BACKENDS):
        idx = np.empty((len(block), k), dtype=np.intp)
        val = np.empty((len(block), k))
        kernel = best_of(lambda: topk_rows(block, 0, k, idx, val, backend=name), args.repeat)
        full = best_of(lambda: build_knn(emb, k=k, threads=args.threads, backend=name), args.repeat)
        results[name] = (kernel, full)
        print(f"{name:<8} {kernel:>11.4f} {full:>14.3f}")
    if len(results) == 2:
        kp, fp = results["python"]
        kc, fc = results["cython"]
        print(f"speedup  {kp / kc:>10.1f}x {fp / fc:>13.1f}x")


if __name__ == "__main__":
    main()
