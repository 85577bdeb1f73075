"""Time the numba loop kernels against their numpy counterparts.

Run with ``python benchmarks/bench_kernels.py``. When numba is missing the
loop kernels run as plain Python and the comparison shows the cost of that.
"""

import argparse
import math
import timeit

import numpy as np

from incomeqr import _kernels
from incomeqr._accel import HAVE_NUMBA
from incomeqr.specfun import gauss_2f1


def _inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    gamma = np.exp(rng.uniform(0.5, 2.5, n))
    y = gamma * np.exp(rng.normal(0.0, 0.3, n))
    return y, gamma


def _best(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def bench_nll(sizes, repeat):
    a, s, tau = 5.0, 1.0, 0.5
    lc = math.log((1 - tau) ** (-1 / s) - 1)
    rows = []
    for n in sizes:
        y, gamma = _inputs(n)
        for name, loop, vec in (
            ("qsm_nll_grad", _kernels.qsm_nll_grad_loop, _kernels.qsm_nll_grad_vec),
            ("qda_nll_grad", _kernels.qda_nll_grad_loop, _kernels.qda_nll_grad_vec),
        ):
            loop(y, gamma, a, s, lc, 0.1)  # compile outside the timed region
            number = max(1, 20000 // n)
            t_loop = _best(lambda: loop(y, gamma, a, s, lc, 0.1), repeat, number)
            t_vec = _best(lambda: vec(y, gamma, a, s, lc, 0.1), repeat, number)
            rows.append((name, n, t_loop, t_vec))
    return rows


def bench_hyp2f1(repeat):
    cases = [(1.5, 0.7, 1.7, -0.3), (3.0, 0.85, 1.85, -4.0), (3.0, 5.0, 1.0, -0.875)]
    out = []
    for args in cases:
        gauss_2f1(*args)
        out.append((args, _best(lambda: gauss_2f1(*args), repeat, 200)))
    return out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="600,5000", help="comma separated sample sizes")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    sizes = [int(v) for v in args.sizes.split(",")]
    print(f"numba available: {HAVE_NUMBA}")
    print(f"{'kernel':<14}{'n':>7}{'loop (us)':>12}{'numpy (us)':>12}{'speedup':>9}")
    for name, n, t_loop, t_vec in bench_nll(sizes, args.repeat):
        print(f"{name:<14}{n:>7}{t_loop * 1e6:>12.1f}{t_vec * 1e6:>12.1f}{t_vec / t_loop:>9.2f}")
    print()
    for case, t in bench_hyp2f1(args.repeat):
        print(f"gauss_2f1{case}: {t * 1e6:.1f} us")


if __name__ == "__main__":
    main()
