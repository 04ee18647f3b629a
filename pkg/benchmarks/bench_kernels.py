"""Time the compiled and pure-Python kernels on the same inputs.

Usage: python benchmarks/bench_kernels.py [--pieces 200] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from olspace import kernels

FAMILIES = {"power": (kernels.POWER, 2.0, 0.0), "powerlog": (kernels.POWERLOG, 2.0, 1.0),
            "expm1": (kernels.EXPM1, 0.0, 0.0)}


def inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    vals = np.sort(np.exp(rng.uniform(-3, 2, n)))[::-1].copy()
    dw = np.exp(rng.uniform(-6, 0, n))
    return vals, dw


def cases(vals, dw):
    shuffled = vals[np.random.default_rng(1).permutation(len(vals))]
    out = {"rearrange": lambda: kernels.rearrange(shuffled, dw),
           "distribution": lambda: kernels.distribution(vals, dw, float(np.median(vals)))}
    for name, (code, p, q) in FAMILIES.items():
        out[f"modular[{name}]"] = lambda c=code, p=p, q=q: kernels.scaled_modular(c, p, q, vals, dw, 1.5)

        def full_norm(c=code, p=p, q=q):
            lo, hi, _ = kernels.norm_bracket(c, p, q, vals, dw, float(vals[0]))
            return kernels.norm_bisect(c, p, q, vals, dw, lo, hi, 1e-12)

        out[f"norm[{name}]"] = full_norm
    return out


def bench(backend, n, repeat):
    kernels.use(backend)
    vals, dw = inputs(n)
    res = {}
    for name, fn in cases(vals, dw).items():
        t = timeit.Timer(fn)
        loops, _ = t.autorange()
        res[name] = min(t.repeat(repeat, loops)) / loops
    return res


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pieces", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args()
    saved = kernels.BACKEND
    py = bench("python", a.pieces, a.repeat)
    try:
        cy = bench("cython", a.pieces, a.repeat)
    except ImportError:
        cy = None
    kernels.use(saved)
    print(f"{'kernel':<18}{'python (us)':>14}{'cython (us)':>14}{'speedup':>10}   pieces={a.pieces}")
    for name, t in py.items():
        if cy is None:
            print(f"{name:<18}{t * 1e6:>14.2f}{'n/a':>14}{'':>10}")
        else:
            print(f"{name:<18}{t * 1e6:>14.2f}{cy[name] * 1e6:>14.2f}{t / cy[name]:>9.1f}x")


if __name__ == "__main__":
    main()
