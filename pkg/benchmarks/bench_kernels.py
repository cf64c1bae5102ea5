"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Times ``mat_exp``, ``commutator`` and ``dexpinv`` at small sizes, then a
whole Lie-Euler / RKMK4 trajectory with each backend swapped in.
"""
import argparse
import json
import timeit

import numpy as np

from foliate import _pykernels, matgroup
from foliate.integrators import make_stepper
from foliate.systems import builtin_system, default_ic

try:
    from foliate import _kernels
except ImportError:
    _kernels = None


def best(fn, number, repeat):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def kernel_cases(rng):
    cases = []
    for n in (2, 3, 8):
        X = rng.standard_normal((n, n))
        Y = rng.standard_normal((n, n))
        cases.append((f"expm n={n}", lambda k, X=X: k.expm(X)))
        cases.append((f"commutator n={n}", lambda k, X=X, Y=Y: k.commutator(X, Y)))
        cases.append((f"dexpinv q=4 n={n}", lambda k, X=X, Y=Y: k.dexpinv(X, Y, 4)))
    return cases


def trajectory(method, system, steps):
    sys = builtin_system(system)
    step = make_stepper(method)
    x = default_ic(system)
    for _ in range(steps):
        x = step(sys, x, 0.01)
    return x


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--number", type=int, default=2000)
    parser.add_argument("--steps", type=int, default=200)
    parser.add_argument("--json", help="write results here")
    args = parser.parse_args(argv)

    backends = {"python": _pykernels}
    if _kernels is not None:
        backends["cython"] = _kernels
    else:
        print("compiled extension not available; timing the fallback only")

    rng = np.random.default_rng(0)
    rows = []
    for label, fn in kernel_cases(rng):
        times = {name: best(lambda: fn(k), args.number, args.repeat) for name, k in backends.items()}
        rows.append((label, times))

    saved = matgroup._backend
    try:
        for method, system in (("lie-euler", "isospectral"), ("rkmk4", "left-mult"), ("rkmk4", "eq1")):
            times = {}
            for name, k in backends.items():
                matgroup._backend = k
                times[name] = best(lambda: trajectory(method, system, args.steps), 1, args.repeat)
            rows.append((f"{method} {system} x{args.steps}", times))
    finally:
        matgroup._backend = saved

    names = list(backends)
    head = f"{'case':30s}" + "".join(f"{n:>14s}" for n in names) + ("   speedup" if len(names) > 1 else "")
    print(head)
    for label, times in rows:
        line = f"{label:30s}" + "".join(f"{times[n] * 1e6:12.2f}us" for n in names)
        if len(names) > 1:
            line += f"   {times['python'] / times['cython']:7.2f}x"
        print(line)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump([{"case": label, "seconds": times} for label, times in rows], fh, indent=1)


if __name__ == "__main__":
    main()
