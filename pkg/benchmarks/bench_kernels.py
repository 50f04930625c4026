"""Compiled vs pure-Python kernels: row-wise FWHT, one SDCA epoch, a full local solve.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import time

import numpy as np

from dualloco import _fallback
from dualloco.losses import LOSS_CODES

try:
    from dualloco import _kernels
except ImportError:  # extension not built
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_fwht(mod, rows, width, repeat):
    A = np.random.default_rng(0).standard_normal((rows, width))
    return best_of(lambda: mod.fwht_rows(A), repeat)


def bench_epoch(mod, n, d, loss, repeat):
    g = np.random.default_rng(1)
    X = g.standard_normal((n, d))
    y = np.sign(g.standard_normal(n))
    q = np.einsum("ij,ij->i", X, X)
    order = g.permutation(n).astype(np.int64)
    alpha, beta = np.zeros(n), np.zeros(d)
    return best_of(lambda: mod.sdca_epoch(X, y, alpha, beta, q, order, LOSS_CODES[loss], 0.1, 1.0),
                   repeat)


def bench_run(mod, n, d, epochs, repeat):
    g = np.random.default_rng(2)
    X = g.standard_normal((n, d))
    y = g.standard_normal(n)
    q = np.einsum("ij,ij->i", X, X)
    orders = np.stack([g.permutation(n) for _ in range(epochs)]).astype(np.int64)
    x_norm = float(np.sqrt(q.sum()))

    def run():
        mod.sdca_run(X, y, np.zeros(n), np.zeros(d), q, orders, 0, 0.01, 1.0, 1e-300, x_norm,
                     np.empty(epochs), np.empty(d))
    return best_of(run, repeat)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not available; nothing to compare")
        return
    cases = [
        ("fwht 200x1024", lambda m: bench_fwht(m, 200, 1024, args.repeat)),
        ("fwht 200x8192", lambda m: bench_fwht(m, 200, 8192, args.repeat)),
        ("epoch squared 500x256", lambda m: bench_epoch(m, 500, 256, "squared", args.repeat)),
        ("epoch logistic 500x256", lambda m: bench_epoch(m, 500, 256, "logistic", args.repeat)),
        ("epoch hinge 500x256", lambda m: bench_epoch(m, 500, 256, "hinge", args.repeat)),
        ("20 epochs + gaps 200x224", lambda m: bench_run(m, 200, 224, 20, args.repeat)),
    ]
    print(f"{'case':<28}{'compiled (ms)':>15}{'python (ms)':>14}{'speedup':>10}")
    for name, fn in cases:
        c, p = fn(_kernels), fn(_fallback)
        print(f"{name:<28}{1e3 * c:>15.3f}{1e3 * p:>14.3f}{p / c:>9.1f}x")


if __name__ == "__main__":
    main()
