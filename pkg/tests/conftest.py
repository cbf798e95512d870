import numpy as np
import pytest

from tlsph.neighbors import build_reference_neighborhoods
from tlsph.solver import compute_correction_matrices
from tlsph.system import ParticleSystem

H_FACTOR = 1.15


def cubic_lattice(side, dp=0.1, origin=(0.0, 0.0, 0.0)):
    axes = [origin[k] + (np.arange(side) + 0.5) * dp for k in range(3)]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([g.ravel() for g in grids])


def prepared_lattice(side, dp=0.1, rho0=1000.0):
    """Lattice block with neighborhoods and correction matrices ready."""
    pos = cubic_lattice(side, dp)
    system = ParticleSystem(pos, rho0=rho0, dp=dp)
    nbhd = build_reference_neighborhoods(pos, H_FACTOR * dp)
    compute_correction_matrices(system, nbhd)
    return system, nbhd


@pytest.fixture(scope="session")
def lattice_10():
    return prepared_lattice(10)


def random_rotation(rng):
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
