"""Compare the numba and pure-numpy kernels.

    python3 benchmarks/bench_kernels.py [--repeat 20]

The first jitted call (compilation) is excluded from the timings.
"""

import argparse
import timeit

import numpy as np

from zmpgait import kernels
from zmpgait._accel import HAS_NUMBA
from zmpgait.pattern_gen import zmp_system
from zmpgait.robot_model import bundled_model_path, load_model


def cases(rng):
    n = 4801  # 48 s at 0.01 s
    z = 0.45 + 0.015 * np.sin(np.linspace(0, 30, n))
    zdd = kernels.second_difference_numpy(z, 0.01)
    lower, diag, upper = zmp_system(z, zdd, 0.01)
    rhs = rng.normal(size=(n, 2))
    yield "thomas_solve (N=4801, 2 rhs)", (lower, diag, upper, rhs), \
        kernels.thomas_solve_jit, kernels.thomas_solve_numpy

    com = rng.normal(size=(n, 3))
    yield "second_difference (N=4801 x 3)", (com, 0.01), \
        kernels.second_difference_jit, kernels.second_difference_numpy

    model = load_model(bundled_model_path())
    arr = model._arrays
    q = rng.uniform(-0.5, 0.5, model.n_joints)
    yield "chain_poses (15 joints)", (q, arr["order"], arr["parent"], arr["origin_rot"],
                                      arr["origin_pos"], arr["axis"]), \
        kernels.chain_poses_jit, kernels.chain_poses_numpy


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args()
    if not HAS_NUMBA:
        print("numba is not installed: the *_jit kernels run as plain Python")
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'numba [us]':>12s} {'numpy [us]':>12s} {'speed-up':>9s}")
    for name, inputs, jit_fn, np_fn in cases(rng):
        a = jit_fn(*inputs)
        b = np_fn(*inputs)
        for x, y in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
            np.testing.assert_allclose(x, y, rtol=1e-10, atol=1e-12)
        number = 50
        t_jit = min(timeit.repeat(lambda: jit_fn(*inputs), number=number, repeat=args.repeat)) / number
        t_np = min(timeit.repeat(lambda: np_fn(*inputs), number=number, repeat=args.repeat)) / number
        print(f"{name:34s} {t_jit * 1e6:12.1f} {t_np * 1e6:12.1f} {t_np / t_jit:8.1f}x")


if __name__ == "__main__":
    main()
