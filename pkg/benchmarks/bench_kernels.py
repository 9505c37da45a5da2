"""Time the numba kernels against their numpy fallbacks.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``. Each kernel is
called once before timing so numba compilation is excluded, and the two
results are checked for agreement.
"""

import argparse
import time

import numpy as np

from curvscape import kernels
from curvscape.graph import generate_er


def best_of(fn, repeat):
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(rng):
    g = generate_er(200, 0.3, 7)
    e = g.edge_array
    vals = rng.normal(size=len(e))
    order = np.lexsort((e[:, 1], e[:, 0], vals))
    us, vs, vals = e[order, 0].copy(), e[order, 1].copy(), vals[order]

    a = rng.random(40)
    b = rng.random(40)
    cost = rng.integers(1, 4, size=(40, 40)).astype(float)
    a, b = a / a.sum(), b / b.sum()

    births = rng.random(300)
    deaths = births + rng.random(300)
    ts = np.linspace(0.0, 2.0, 1000)

    heads = np.concatenate([us, vs])
    tails = np.concatenate([vs, us])
    o = np.lexsort((tails, heads))
    indices = tails[o]
    indptr = np.zeros(g.n + 1, dtype=np.int64)
    np.add.at(indptr, heads + 1, 1)
    indptr = np.cumsum(indptr)

    return [
        ("transport 40x40", lambda: kernels.transport_cost_numba(a, b, cost),
         lambda: kernels.transport_cost_numpy(a, b, cost)),
        (f"sweep ER(200) m={len(us)}", lambda: kernels.sweep_numba(g.n, us, vs, vals),
         lambda: kernels.sweep_numpy(g.n, us, vs, vals)),
        ("landscape 300 pairs x 1000", lambda: kernels.landscape_numba(births, deaths, ts, 64),
         lambda: kernels.landscape_numpy(births, deaths, ts, 64)),
        ("forman ER(200)", lambda: kernels.forman_numba(indptr, indices, us, vs),
         lambda: kernels.forman_numpy(g.n, us, vs)),
    ]


def same(x, y):
    if isinstance(x, tuple):
        return all(same(a, b) for a, b in zip(x, y))
    return np.allclose(x, y, atol=1e-9)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<30}{'numba s':>12}{'numpy s':>12}{'speedup':>10}  agree")
    for name, fast, slow in cases(rng):
        agree = same(fast(), slow())
        tf, ts = best_of(fast, args.repeat), best_of(slow, args.repeat)
        print(f"{name:<30}{tf:>12.6f}{ts:>12.6f}{ts / tf:>10.1f}  {agree}")


if __name__ == "__main__":
    main()
