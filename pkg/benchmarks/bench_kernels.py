"""Compiled vs pure-Python kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--L 64] [--repeat 3]

Both backends must return identical results; the script checks that before
reporting timings.
"""

import argparse
import math
import time

import numpy as np

from isingdroplet import _backend, _fallback
from isingdroplet.lattice import init_from_shape, square_shape


def _time(fn, repeat):
    best, out = math.inf, None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", type=int, default=48)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)
    if not _backend.COMPILED:
        raise SystemExit("compiled extension not available; build with pip install -e .")
    config = init_from_shape(square_shape(), args.L)
    horizon = 0.5 * args.L**2  # about a quarter of the h = 0 lifetime
    no_samples = np.zeros(0)
    cases = {
        "kmc h=0": lambda mod: mod.kmc_run(config.spins.copy(), config.frozen, 0.5, 0.5, horizon,
                                           no_samples, args.seed, 2, -1),
        "kmc h=inf": lambda mod: mod.kmc_run(config.spins.copy(), config.frozen, 1.0, 0.0, math.inf,
                                             no_samples, args.seed, 2, -1),
        "graphical h=0": lambda mod: mod.graphical_run(config.spins.copy(), config.frozen,
                                                       -config.offset, -config.offset, 0.0, math.inf,
                                                       horizon, no_samples, args.seed, 2),
    }
    print(f"L={args.L}, best of {args.repeat}")
    print(f"{'case':<16}{'events':>10}{'compiled s':>12}{'python s':>12}{'speedup':>10}")
    for name, run in cases.items():
        tc, rc = _time(lambda: run(_backend), args.repeat)
        tp, rp = _time(lambda: run(_fallback), 1)
        if rc["events"] != rp["events"] or rc["extinction"] != rp["extinction"]:
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<16}{rc['events']:>10}{tc:>12.4f}{tp:>12.4f}{tp / tc:>10.1f}")


if __name__ == "__main__":
    main()
