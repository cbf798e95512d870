"""Per-particle solver state and kinematic constraints."""

import numpy as np

from .errors import ConfigurationError

FREE = 0
CLAMPED = 1
PRESCRIBED = 2


class ParticleSystem:
    """Flat per-particle arrays for the total-Lagrangian solver.

    Bodies generated from a lattice use V0 = dp^3 and m = rho0 dp^3 per
    particle.  The displacement is always r - r0, exposed as a property so
    it cannot drift out of sync with the positions.
    """

    def __init__(self, ref_positions, rho0, dp):
        pos = np.ascontiguousarray(np.asarray(ref_positions, dtype=np.float64))
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError(f"expected (n, 3) positions, got shape {pos.shape}")
        if pos.shape[0] == 0:
            raise ValueError("a particle system needs at least one particle")
        if dp <= 0.0:
            raise ValueError(f"particle spacing must be positive, got {dp}")
        n = pos.shape[0]
        self.rho0 = float(rho0)
        self.dp = float(dp)
        self.r0 = pos
        self.r = pos.copy()
        self.v = np.zeros((n, 3))
        self.a = np.zeros((n, 3))
        self.F = np.tile(np.eye(3), (n, 1, 1))
        self.dFdt = np.zeros((n, 3, 3))
        self.B0 = np.tile(np.eye(3), (n, 1, 1))
        self.V0 = np.full(n, dp**3)
        self.m = self.rho0 * self.V0
        self.flags = np.zeros(n, dtype=np.uint8)

    @property
    def n(self):
        return self.r0.shape[0]

    @property
    def u(self):
        return self.r - self.r0

    def total_mass(self):
        return float(np.sum(self.m))


class Constraints:
    """Clamped and prescribed-velocity particle sets.

    ``prescribed`` is a list of (mask, velocity_fn) pairs where velocity_fn
    maps (t, r0_subset) to an (k, 3) velocity array.  Constrained particles
    still evolve their deformation gradient from neighbor motion; only their
    positions and velocities are pinned.
    """

    def __init__(self, system, clamp_mask=None, prescribed=()):
        n = system.n
        self.clamp_mask = np.zeros(n, dtype=bool) if clamp_mask is None else np.asarray(
            clamp_mask, dtype=bool
        )
        if self.clamp_mask.shape != (n,):
            raise ValueError("clamp mask length does not match the particle count")
        if clamp_mask is not None and not self.clamp_mask.any():
            raise ConfigurationError("clamp region selects zero particles")
        self.prescribed = []
        for mask, fn in prescribed:
            mask = np.asarray(mask, dtype=bool)
            if not mask.any():
                raise ConfigurationError("prescribed-velocity region selects zero particles")
            if (mask & self.clamp_mask).any():
                raise ConfigurationError("a particle cannot be both clamped and prescribed")
            self.prescribed.append((mask, fn))
        system.flags[self.clamp_mask] = CLAMPED
        for mask, _ in self.prescribed:
            system.flags[mask] = PRESCRIBED

    def enforce_velocities(self, system, t):
        if self.clamp_mask.any():
            system.v[self.clamp_mask] = 0.0
        for mask, fn in self.prescribed:
            system.v[mask] = fn(t, system.r0[mask])

    def enforce_positions(self, system):
        if self.clamp_mask.any():
            system.r[self.clamp_mask] = system.r0[self.clamp_mask]

    def apply(self, system, t):
        self.enforce_velocities(system, t)
        self.enforce_positions(system)


def apply_constraints(system, constraints, t=0.0):
    """Pin clamped particles to their reference state and impose velocities."""
    if constraints is not None:
        constraints.apply(system, t)
