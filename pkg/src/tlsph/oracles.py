"""Independent reference solutions used by tests and acceptance runs.

These are first-class, tested code: the solver is only trusted where it
agrees with them.  None of them call into the SPH discretization.
"""

from dataclasses import dataclass

import numpy as np

from .materials import green_lagrange


# ---------------------------------------------------------------------------
# 1D fixed-free bar wave (exact, method of characteristics / images)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CableWave:
    """Exact solution for a 1D bar, fixed at x = 0 and free at x = length,
    started with velocity v0 on x >= moving_start and zero displacement.

    With zero Poisson ratio the 3D rod decouples exactly into this 1D
    problem with wave speed sqrt(E / rho0).  The initial velocity profile
    is extended odd about the fixed end and even about the free end
    (period 4 L); d'Alembert then gives

        v(x, t) = (vext(x - c t) + vext(x + c t)) / 2
        u(x, t) = (Iext(x + c t) - Iext(x - c t)) / (2 c),  Iext' = vext

    so velocities are piecewise constant between wave arrivals and
    displacements are their exact time integrals.
    """

    length: float = 10.0
    wave_speed: float = 5000.0
    v0: float = 5.0
    moving_start: float = 7.5

    @classmethod
    def from_material(cls, material, length=10.0, v0=5.0, moving_fraction=0.25):
        c_bar = float(np.sqrt(material.E / material.rho0))
        return cls(length=length, wave_speed=c_bar, v0=v0,
                   moving_start=(1.0 - moving_fraction) * length)

    # -- periodic extension --------------------------------------------------

    def _v0_profile(self, s):
        """Initial velocity on [0, length]."""
        return np.where(s >= self.moving_start, self.v0, 0.0)

    def _A(self, s):
        """Antiderivative of the initial profile on [0, length]."""
        return self.v0 * np.clip(s - self.moving_start, 0.0, self.length - self.moving_start)

    def _vext(self, xi):
        """Odd-about-0, even-about-length extension of the initial profile."""
        L = self.length
        s = np.mod(xi, 4.0 * L)
        return np.select(
            [s <= L, s <= 2.0 * L, s <= 3.0 * L],
            [self._v0_profile(s), self._v0_profile(2.0 * L - s),
             -self._v0_profile(s - 2.0 * L)],
            -self._v0_profile(4.0 * L - s),
        )

    def _Iext(self, xi):
        """Exact integral of the extension from 0 to xi (periodic, even)."""
        L = self.length
        s = np.mod(xi, 4.0 * L)
        AL = self._A(L)
        return np.select(
            [s <= L, s <= 2.0 * L, s <= 3.0 * L],
            [self._A(s), 2.0 * AL - self._A(2.0 * L - s),
             2.0 * AL - self._A(s - 2.0 * L)],
            self._A(4.0 * L - s),
        )

    # -- field evaluation ----------------------------------------------------

    def velocity(self, x, t):
        x = np.asarray(x, dtype=np.float64)
        t = np.asarray(t, dtype=np.float64)
        c = self.wave_speed
        return 0.5 * (self._vext(x - c * t) + self._vext(x + c * t))

    def displacement(self, x, t):
        x = np.asarray(x, dtype=np.float64)
        t = np.asarray(t, dtype=np.float64)
        c = self.wave_speed
        return (self._Iext(x + c * t) - self._Iext(x - c * t)) / (2.0 * c)

    def momentum_per_area(self, rho0, a=None, b=None, t=0.0):
        """integral of rho0 v over [a, b] at time t, exactly."""
        a = 0.0 if a is None else a
        b = self.length if b is None else b
        c = self.wave_speed
        left = self._Iext(b - c * t) - self._Iext(a - c * t)
        right = self._Iext(b + c * t) - self._Iext(a + c * t)
        return rho0 * 0.5 * (left + right)

    def tip_history(self, t_grid):
        """(velocity, displacement) at the free end for 0 <= t <= 2 L / c."""
        t = np.asarray(t_grid, dtype=np.float64)
        t_max = 2.0 * self.length / self.wave_speed
        if np.any(t < 0.0) or np.any(t > t_max * (1.0 + 1e-12)):
            raise ValueError(f"tip history is defined for t in [0, {t_max:.6g}] s")
        return self.velocity(self.length, t), self.displacement(self.length, t)

    def tip_plateau_breakpoints(self, t_max):
        """Times at which the free-end velocity jumps, ascending."""
        L, c, s0 = self.length, self.wave_speed, self.moving_start
        times = []
        for k in range(-4, 5):
            for d in (s0, 2.0 * L - s0, 2.0 * L + s0, 4.0 * L - s0):
                t = (L - (d + 4.0 * L * k)) / c
                if 0.0 < t < t_max:
                    times.append(t)
        return sorted(set(times))

    def tip_plateaus(self, t_max):
        """(t_lo, t_hi, velocity) intervals covering [0, t_max]."""
        edges = [0.0] + self.tip_plateau_breakpoints(t_max) + [t_max]
        out = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            mid = 0.5 * (lo + hi)
            out.append((lo, hi, float(self.velocity(self.length, mid))))
        return out


def cable_tip_history(t_grid, length=10.0, wave_speed=5000.0, v0=5.0,
                      moving_start=7.5):
    """Free-end (velocity, displacement) of the default cable benchmark."""
    wave = CableWave(length=length, wave_speed=wave_speed, v0=v0,
                     moving_start=moving_start)
    return wave.tip_history(t_grid)


def cable_grid_history(n_cells=10000, t_end=0.004, length=10.0,
                       wave_speed=5000.0, v0=5.0, moving_start=7.5):
    """Cross-check: upwind advection of the characteristic variables.

    At unit Courant number the scheme shifts each invariant exactly one cell
    per step, so it is exact up to front positions being quantized to cell
    boundaries.  Returns samples at the last cell center.
    """
    n = int(n_cells)
    dx = length / n
    dt = dx / wave_speed
    x = (np.arange(n) + 0.5) * dx
    v = np.where(x >= moving_start, v0, 0.0)
    p = np.zeros(n)  # stress / (rho c), same units as v
    w1 = v + p  # left-moving invariant
    w2 = v - p  # right-moving invariant

    n_steps = int(round(t_end / dt))
    times = np.empty(n_steps + 1)
    tip_v = np.empty(n_steps + 1)
    tip_u = np.empty(n_steps + 1)
    times[0] = 0.0
    tip_v[0] = 0.5 * (w1[-1] + w2[-1])
    tip_u[0] = 0.0
    for k in range(1, n_steps + 1):
        # state is piecewise constant over the step about to be taken
        tip_u[k] = tip_u[k - 1] + 0.5 * (w1[-1] + w2[-1]) * dt
        new_w2 = np.empty(n)
        new_w2[1:] = w2[:-1]
        new_w2[0] = -w1[0]          # fixed end: v = 0
        new_w1 = np.empty(n)
        new_w1[:-1] = w1[1:]
        new_w1[-1] = w2[-1]         # free end: stress = 0
        w1, w2 = new_w1, new_w2
        times[k] = k * dt
        tip_v[k] = 0.5 * (w1[-1] + w2[-1])
    return {"times": times, "velocity": tip_v, "displacement": tip_u,
            "x_probe": x[-1]}


# ---------------------------------------------------------------------------
# affine motion (consistency of the discrete gradient operators)
# ---------------------------------------------------------------------------

def affine_motion_oracle(A, b, positions):
    """Expected fields for u = A r0 + b and v = A r0.

    F = I + A and dF/dt = A everywhere; the discrete operators must
    reproduce them at particles with full interior support.
    """
    A = np.asarray(A, dtype=np.float64)
    n = np.asarray(positions).shape[0]
    F = np.tile(np.eye(3) + A, (n, 1, 1))
    dFdt = np.tile(A, (n, 1, 1))
    return F, dFdt


def lattice_interior_mask(positions, margin):
    """Particles farther than ``margin`` from the axis-aligned hull."""
    positions = np.asarray(positions, dtype=np.float64)
    lo = positions.min(axis=0) + margin
    hi = positions.max(axis=0) - margin
    return np.all((positions > lo) & (positions < hi), axis=1)


# ---------------------------------------------------------------------------
# finite-difference gradient of the neo-Hookean strain energy
# ---------------------------------------------------------------------------

def _energy_of_strain(E, lam, mu):
    C = 2.0 * E + np.eye(3)
    det_c = float(np.linalg.det(C))
    if det_c <= 0.0:
        raise ValueError("perturbed strain left the admissible range (det C <= 0)")
    ln_j = 0.5 * np.log(det_c)
    tr_e = float(np.trace(E))
    return mu * tr_e - mu * ln_j + 0.5 * lam * ln_j**2


def energy_gradient_oracle(F, lam, mu, step=1e-6):
    """Second Piola-Kirchhoff stress via central differences of the
    neo-Hookean strain energy with respect to the Green-Lagrange strain.

    Symmetric perturbations E +- step * H_kl with H_kk = e_k (x) e_k and
    H_kl = (e_k (x) e_l + e_l (x) e_k) / 2 give S_kl directly.
    """
    F = np.asarray(F, dtype=np.float64)
    if float(np.linalg.det(F)) <= 0.0:
        raise ValueError("det F must be positive")
    E0 = green_lagrange(F)
    S = np.zeros((3, 3))
    for k in range(3):
        for l in range(k, 3):
            H = np.zeros((3, 3))
            if k == l:
                H[k, k] = 1.0
            else:
                H[k, l] = H[l, k] = 0.5
            w_plus = _energy_of_strain(E0 + step * H, lam, mu)
            w_minus = _energy_of_strain(E0 - step * H, lam, mu)
            S[k, l] = S[l, k] = (w_plus - w_minus) / (2.0 * step)
    return S
