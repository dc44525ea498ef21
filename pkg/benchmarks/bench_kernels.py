"""Time the numba and numpy implementations of the hot kernels side by side.

    python benchmarks/bench_kernels.py [--repeat 5] [--trials 20] [--particles 60]

Both paths are called directly, so the ``SPINEST_NUMBA`` flag does not matter
here.  The first numba call (compilation or cache load) is excluded.
"""
import argparse
import time

import numpy as np

from spinest import kernels, special
from spinest.geometry import SeededRng
from spinest.quadrature import sphere_grid
from spinest.strategies import ADAPTIVE_N_PHI, ADAPTIVE_N_THETA, AdaptivePolicy, _adaptive_inputs


def best_of(func, repeat):
    func()  # warm-up
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        func()
        times.append(time.perf_counter() - t0)
    return min(times)


def adaptive_case(impl, trials, particles):
    theta, phi, _ = sphere_grid(ADAPTIVE_N_THETA, ADAPTIVE_N_PHI)
    policy = AdaptivePolicy()
    truth, triads, u_out, u_tie = _adaptive_inputs(SeededRng(0, 1), range(trials), particles, policy)

    def run():
        fid = np.empty(trials)
        trace = np.empty((trials, particles))
        status = np.zeros(trials, dtype=np.int64)
        impl(theta, phi, truth, triads, u_out, u_tie, True, False, fid, trace, status)

    return run


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--particles", type=int, default=60)
    args = parser.parse_args()

    x = np.linspace(-1.0, 1.0, 200_001)
    cases = [
        ("legendre r=500, 2e5 points",
         lambda: special._legendre_numba(500, x), lambda: special._legendre_numpy(500, x)),
        ("wigner matrix j=100",
         lambda: special._wigner_matrix_numba(200, 1.1), lambda: special._wigner_matrix_numpy(200, 1.1)),
        (f"adaptive {args.trials} trials x N={args.particles}",
         adaptive_case(kernels._adaptive_numba, args.trials, args.particles),
         adaptive_case(kernels._adaptive_numpy, args.trials, args.particles)),
    ]
    print(f"{'kernel':40s} {'numba [s]':>12s} {'numpy [s]':>12s} {'speedup':>8s}")
    for name, fast, slow in cases:
        t_nb = best_of(fast, args.repeat)
        t_np = best_of(slow, args.repeat)
        print(f"{name:40s} {t_nb:12.5f} {t_np:12.5f} {t_np / t_nb:8.1f}")


if __name__ == "__main__":
    main()
