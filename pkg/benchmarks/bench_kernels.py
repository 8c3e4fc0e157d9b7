"""Time the numba kernels against their numpy twins.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 200]

Each kernel is run once before timing so numba compilation is excluded.
Outputs are compared so a speedup never hides a wrong answer.
"""

import argparse
import timeit

import numpy as np
from scipy.linalg import expm

from corrdyn import kernels


def random_unitary(n, rng):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return expm(-1j * (A + A.conj().T) / 2)


def cases(rng):
    out = []
    for d_s, d_e in ((2, 2), (2, 5), (3, 8)):
        n = d_s * d_e
        U = random_unitary(n, rng)
        M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        rho_e = np.diag(rng.dirichlet(np.ones(d_e))).astype(complex)
        A = rng.normal(size=(d_s * d_s, d_s * d_s)) + 0j
        K = rng.normal(size=(d_s, d_s)) + 0j
        Ls = rng.normal(size=(4, d_s, d_s)) + 1j * rng.normal(size=(4, d_s, d_s))
        rates = rng.normal(size=4)
        tag = f"{d_s}x{d_e}"
        out += [
            (f"ptrace_env {tag}", "ptrace_env", (M, d_s, d_e)),
            (f"traced_sandwich {tag}", "traced_sandwich", (U, M, U, d_s, d_e)),
            (f"reduced_superop {tag}", "reduced_superop", (U, U, rho_e, d_s, d_e)),
            (f"reshuffle {tag}", "reshuffle", (A, d_s)),
            (f"lindblad_superop {tag}", "lindblad_superop", (K, rates, Ls)),
        ]
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if kernels.numba_kernels is None:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<28}{'numpy [us]':>12}{'numba [us]':>12}{'speedup':>9}{'max diff':>11}")
    for label, name, a in cases(rng):
        f_np = getattr(kernels.numpy_kernels, name)
        f_nb = getattr(kernels.numba_kernels, name)
        diff = np.max(np.abs(f_np(*a) - f_nb(*a)))  # also triggers compilation
        t_np = timeit.timeit(lambda: f_np(*a), number=args.repeat) / args.repeat * 1e6
        t_nb = timeit.timeit(lambda: f_nb(*a), number=args.repeat) / args.repeat * 1e6
        print(f"{label:<28}{t_np:>12.2f}{t_nb:>12.2f}{t_np / t_nb:>9.2f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
