"""Oracle self-checks behind the ``tlsph verify`` subcommand.

Each check pits an implementation against an independent construction
(adaptive quadrature, finite differences, exact 1D wave solutions, brute
arithmetic identities) and reports a PASS/FAIL line.
"""

import numpy as np

from . import backend
from .kernels import wendland_gradient, wendland_value
from .materials import Material, neo_hookean_S
from .neighbors import build_reference_neighborhoods
from .oracles import (
    CableWave,
    cable_grid_history,
    energy_gradient_oracle,
    lattice_interior_mask,
)
from .solver import compute_correction_matrices, deformation_gradient_rate
from .system import ParticleSystem


def _check_kernel_normalization():
    from scipy.integrate import quad

    h = 0.7
    integral, _ = quad(lambda r: 4.0 * np.pi * r * r * wendland_value(r, h),
                       0.0, 2.0 * h, limit=200)
    err = abs(integral - 1.0)
    return err <= 1e-6, f"|integral W dV - 1| = {err:.3e}"


def _check_kernel_gradient():
    h = 0.9
    r = h  # q = 1
    eps = 1e-6 * h
    fd = (wendland_value(r + eps, h) - wendland_value(r - eps, h)) / (2.0 * eps)
    grad = wendland_gradient(np.array([r, 0.0, 0.0]), h)[0]
    rel = abs(grad - fd) / abs(fd)
    return rel <= 1e-6, f"radial derivative vs finite difference: rel = {rel:.3e}"


def _check_cable_crosscheck(quick):
    # not reduced in quick mode: the displacement tolerance needs the fine grid
    wave = CableWave()
    grid = cable_grid_history(n_cells=10000)
    x = grid["x_probe"]
    v_exact = wave.velocity(x, grid["times"])
    u_exact = wave.displacement(x, grid["times"])
    dv = float(np.max(np.abs(v_exact - grid["velocity"]))) / wave.v0
    du = float(np.max(np.abs(u_exact - grid["displacement"])))
    u_scale = float(np.max(np.abs(u_exact)))
    ok = dv <= 1e-3 and du <= 1e-3 * u_scale
    return ok, f"max dv/v0 = {dv:.3e}, max du = {du:.3e} m"


def _lattice_fixture(side, dp=0.1):
    x = (np.arange(side) + 0.5) * dp
    g = np.meshgrid(x, x, x, indexing="ij")
    pos = np.column_stack([a.ravel() for a in g])
    system = ParticleSystem(pos, rho0=1000.0, dp=dp)
    nbhd = build_reference_neighborhoods(pos, 1.15 * dp)
    return system, nbhd


def _check_correction_identity(quick):
    system, nbhd = _lattice_fixture(6 if quick else 10)
    B0 = compute_correction_matrices(system, nbhd)
    # sum_j V0_j (r0_j - r0_i) (x) (B0_i grad_ij) must reproduce the identity
    ops = backend.get_ops()
    moment = ops.moment_matrices(nbhd.offsets, nbhd.neighbors, nbhd.owners,
                                 nbhd.r0_ij, nbhd.grad0, system.V0)
    err = float(np.max(np.abs(moment @ B0 - np.eye(3))))
    return err <= 1e-10, f"max |M B - I| = {err:.3e}"


def _check_affine_rates(quick):
    system, nbhd = _lattice_fixture(8 if quick else 12)
    compute_correction_matrices(system, nbhd)
    rng = np.random.default_rng(7)
    A = rng.uniform(-1.0, 1.0, (3, 3))
    system.v[:] = system.r0 @ A.T
    rates = deformation_gradient_rate(system, nbhd)
    interior = lattice_interior_mask(system.r0, 2.0 * nbhd.h)
    err = float(np.max(np.abs(rates[interior] - A)))
    return err <= 1e-10, f"max |dF/dt - A| (interior) = {err:.3e}"


def _check_neo_hookean(quick):
    rng = np.random.default_rng(11)
    mat = Material.from_E_nu(1000.0, 1e6, 0.3, law="neo-hookean")
    worst = 0.0
    n = 20 if quick else 100
    count = 0
    while count < n:
        F = np.eye(3) + rng.uniform(-0.3, 0.3, (3, 3))
        if not 0.5 <= np.linalg.det(F) <= 2.0:
            continue
        count += 1
        S = neo_hookean_S(F, mat.lam, mat.mu)
        S_fd = energy_gradient_oracle(F, mat.lam, mat.mu)
        worst = max(worst, float(np.linalg.norm(S - S_fd) / np.linalg.norm(S_fd)))
    return worst <= 1e-5, f"max rel error vs energy gradient = {worst:.3e}"


def run_verification(quick=False):
    """Run every self-check; returns [(name, passed, detail), ...]."""
    results = [
        ("kernel-normalization", *_check_kernel_normalization()),
        ("kernel-gradient-fd", *_check_kernel_gradient()),
        ("cable-oracle-crosscheck", *_check_cable_crosscheck(quick)),
        ("correction-identity", *_check_correction_identity(quick)),
        ("affine-rate-recovery", *_check_affine_rates(quick)),
        ("neo-hookean-energy-fd", *_check_neo_hookean(quick)),
    ]
    return [(name, ok, detail) for name, ok, detail in results]
