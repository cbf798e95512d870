#!/usr/bin/env python3
"""Per-step cost of the hot kernels: numba backend vs pure-numpy fallback.

Times one full force evaluation (two deformation-rate passes, one fused
stress pass, one pair-sum acceleration pass) on a cubic lattice block, the
mix executed by every integrator step.

    python3 benchmarks/bench_backends.py --sides 10 16 24 --reps 20
"""

import argparse
import time

import numpy as np

from tlsph import backend
from tlsph.materials import Material
from tlsph.neighbors import build_reference_neighborhoods
from tlsph.solver import compute_correction_matrices
from tlsph.system import ParticleSystem


def build(side, dp=0.05):
    x = (np.arange(side) + 0.5) * dp
    g = np.meshgrid(x, x, x, indexing="ij")
    pos = np.column_stack([a.ravel() for a in g])
    mat = Material.from_E_nu(1100.0, 1.7e7, 0.45, law="neo-hookean")
    system = ParticleSystem(pos, rho0=mat.rho0, dp=dp)
    nbhd = build_reference_neighborhoods(pos, 1.15 * dp)
    compute_correction_matrices(system, nbhd)
    rng = np.random.default_rng(0)
    system.v[:] = 0.1 * rng.normal(size=(system.n, 3))
    return system, nbhd, mat


def step_cost(ops, system, nbhd, mat, pi, reps):
    args = (nbhd.offsets, nbhd.neighbors, nbhd.owners, nbhd.grad0, system.V0)
    gravity = np.zeros(3)

    def one_step():
        rates = ops.deformation_rates(*args, system.v, system.B0)
        pb, _ = ops.stress_times_b(system.F, rates, system.B0,
                                   mat.lam, mat.mu, pi, 1)
        ops.accelerations(*args, pb, system.m, gravity)
        ops.deformation_rates(*args, system.v, system.B0)

    one_step()  # warm the jit cache before timing
    start = time.perf_counter()
    for _ in range(reps):
        one_step()
    return (time.perf_counter() - start) / reps


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sides", type=int, nargs="+", default=[8, 12, 16, 24])
    parser.add_argument("--reps", type=int, default=10)
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args()

    backend.set_threads(args.threads)
    names = ["numpy"] + (["numba"] if backend.numba_available() else [])
    print(f"{'n':>8} {'pairs':>9} " + " ".join(f"{n + ' ms/step':>15}" for n in names)
          + ("   speedup" if len(names) == 2 else ""))
    for side in args.sides:
        system, nbhd, mat = build(side)
        pi = mat.pi_coeff(1.15 * system.dp)
        times = {}
        for name in names:
            ops = backend.get_ops(name)
            times[name] = step_cost(ops, system, nbhd, mat, pi, args.reps)
        row = f"{system.n:>8} {nbhd.n_pairs:>9} " + " ".join(
            f"{1e3 * times[n]:>15.3f}" for n in names
        )
        if len(names) == 2:
            row += f"   {times['numpy'] / times['numba']:>6.1f}x"
        print(row)


if __name__ == "__main__":
    main()
