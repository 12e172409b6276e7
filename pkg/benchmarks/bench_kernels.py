"""Compare the compiled and pure-Python greedy kernels.

    python3 benchmarks/bench_kernels.py [--vertices 40000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from nervecraft import _kernels_py
from nervecraft.good_cover import members_varradius
from nervecraft.metric_core import flat_torus

try:
    from nervecraft import _kernels
except ImportError:  # extension not built
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--vertices", type=int, default=40_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    res = int(round(args.vertices ** 0.5))
    M = flat_torus(1.0, res)
    ids = np.arange(M.n_vertices)
    # balls a few grid steps wide so that sets overlap
    ip, ix, _ = members_varradius(M, ids, np.full(M.n_vertices, 3.0 / res))
    order = ids.copy()
    print(f"instance: flat_torus(1,{res}), {M.n_vertices} sets, {len(ix)} memberships")
    for name in ("greedy_disjoint", "greedy_layers"):
        t_py, out_py = best_of(lambda: getattr(_kernels_py, name)(ip, ix, order, M.n_vertices),
                               args.repeat)
        line = f"{name:16s} python {t_py * 1e3:9.2f} ms"
        if _kernels is not None:
            t_c, out_c = best_of(lambda: getattr(_kernels, name)(ip, ix, order, M.n_vertices),
                                 args.repeat)
            same = np.array_equal(np.asarray(out_py), np.asarray(out_c))
            line += f"   cython {t_c * 1e3:8.2f} ms   speedup {t_py / t_c:7.1f}x   identical={same}"
        else:
            line += "   (compiled extension unavailable)"
        print(line)


if __name__ == "__main__":
    main()
