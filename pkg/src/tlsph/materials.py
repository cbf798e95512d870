"""Elastic parameters, constitutive laws and the Kelvin-Voigt damper stress.

All tensor operations accept a single (3, 3) matrix or a stack (..., 3, 3)
and are pure functions; the jitted solver path has its own fused versions,
certified against these in the test suite.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ElementInversionError

LINEAR_ELASTIC = "linear"
NEO_HOOKEAN = "neo-hookean"
_LAW_CODES = {LINEAR_ELASTIC: 0, NEO_HOOKEAN: 1}

_EYE = np.eye(3)


def lame_from_E_nu(E, nu):
    """Lame parameters (lambda, mu) from Young's modulus and Poisson's ratio.

    lambda = E nu / ((1 + nu)(1 - 2 nu)),  mu = E / (2 (1 + nu)).
    """
    if E <= 0.0:
        raise ValueError(f"Young's modulus must be positive, got E = {E}")
    if nu >= 0.5:
        raise ValueError(
            f"Poisson's ratio {nu} >= 0.5: incompressible limit is not representable"
        )
    if nu <= -1.0:
        raise ValueError(f"Poisson's ratio must exceed -1, got {nu}")
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    return lam, mu


def E_nu_from_lame(lam, mu):
    """Inverse of lame_from_E_nu."""
    E = mu * (3.0 * lam + 2.0 * mu) / (lam + mu)
    nu = lam / (2.0 * (lam + mu))
    return E, nu


@dataclass(frozen=True)
class Material:
    """Elastic constants plus the artificial-damping configuration.

    alpha scales the von Neumann-Richtmyer style damping coefficient
    pi = alpha rho0 c h; alpha = 0 (or damping_enabled = False) recovers the
    undamped scheme exactly.
    """

    rho0: float
    E: float
    nu: float
    lam: float
    mu: float
    K: float
    G: float
    c: float
    law: str = LINEAR_ELASTIC
    alpha: float = 0.5
    damping_enabled: bool = True

    def __post_init__(self):
        if self.rho0 <= 0.0:
            raise ValueError(f"density must be positive, got {self.rho0}")
        if self.law not in _LAW_CODES:
            raise ValueError(f"unknown constitutive law {self.law!r}")
        if self.alpha < 0.0:
            raise ValueError(f"damping scale must be non-negative, got {self.alpha}")

    @classmethod
    def from_E_nu(cls, rho0, E, nu, law=LINEAR_ELASTIC, alpha=0.5, damping_enabled=True):
        lam, mu = lame_from_E_nu(E, nu)
        K = lam + 2.0 * mu / 3.0
        c = math.sqrt(K / rho0)
        return cls(
            rho0=float(rho0), E=float(E), nu=float(nu), lam=lam, mu=mu,
            K=K, G=mu, c=c, law=law, alpha=float(alpha),
            damping_enabled=bool(damping_enabled),
        )

    @property
    def law_code(self):
        return _LAW_CODES[self.law]

    @property
    def c_dilatational(self):
        """P-wave speed sqrt((lam + 2 mu) / rho0), the fastest signal speed.

        Exceeds the bulk sound speed c whenever mu > 0 (factor sqrt(3) at
        nu = 0); explicit time steps must resolve this one, not c.
        """
        return math.sqrt((self.lam + 2.0 * self.mu) / self.rho0)

    @property
    def effective_alpha(self):
        return self.alpha if self.damping_enabled else 0.0

    def pi_coeff(self, h):
        """Damping coefficient for the given smoothing length, Pa s."""
        return damping_coefficient(self.rho0, self.c, h, self.effective_alpha)


def green_lagrange(F):
    """Green-Lagrange strain E = (F^T F - I) / 2; symmetric by construction."""
    F = np.asarray(F, dtype=np.float64)
    Ft = np.swapaxes(F, -1, -2)
    return 0.5 * (Ft @ F - _EYE)


def linear_elastic_S(E_strain, lam, mu):
    """Second Piola-Kirchhoff stress S = lam tr(E) I + 2 mu E."""
    E_strain = np.asarray(E_strain, dtype=np.float64)
    tr = np.trace(E_strain, axis1=-2, axis2=-1)
    return (lam * tr)[..., None, None] * _EYE + (2.0 * mu) * E_strain


def _check_positive_jacobian(J):
    J = np.atleast_1d(J)
    if np.any(J <= 0.0) or not np.isfinite(J).all():
        bad = int(np.argmin(np.where(np.isfinite(J), J, -np.inf)))
        raise ElementInversionError(bad, float(J[bad]))


def neo_hookean_S(F, lam, mu):
    """Second Piola-Kirchhoff stress of the compressible neo-Hookean law.

    Derived from the strain energy W = mu tr(E) - mu ln J + lam/2 (ln J)^2:

        S = mu (I - C^-1) + lam ln(J) C^-1,  C = F^T F,  J = det F.

    Stress free at F = I; equals the linear law to first order in strain.
    """
    F = np.asarray(F, dtype=np.float64)
    J = np.linalg.det(F)
    _check_positive_jacobian(J)
    Ft = np.swapaxes(F, -1, -2)
    C = Ft @ F
    Cinv = np.linalg.inv(C)
    Cinv = 0.5 * (Cinv + np.swapaxes(Cinv, -1, -2))
    lnJ = np.log(J)
    return mu * (_EYE - Cinv) + (lam * np.asarray(lnJ))[..., None, None] * Cinv


def kv_damping_S(F, dFdt, pi_coeff):
    """Kelvin-Voigt damper stress S_D = pi dE/dt.

    dE/dt = (dF/dt^T F + F^T dF/dt) / 2 is the Green-Lagrange strain rate,
    so this vanishes identically for rigid-body motion.
    """
    if pi_coeff < 0.0:
        raise ValueError(f"damping coefficient must be non-negative, got {pi_coeff}")
    F = np.asarray(F, dtype=np.float64)
    dFdt = np.asarray(dFdt, dtype=np.float64)
    Ft = np.swapaxes(F, -1, -2)
    dFt = np.swapaxes(dFdt, -1, -2)
    return (0.5 * pi_coeff) * (dFt @ F + Ft @ dFdt)


def damping_coefficient(rho0, c, h, alpha):
    """von Neumann-Richtmyer style scaling pi = alpha rho0 c h, Pa s."""
    if rho0 <= 0.0 or c <= 0.0 or h <= 0.0:
        raise ValueError("rho0, c and h must all be positive")
    if alpha < 0.0:
        raise ValueError(f"damping scale must be non-negative, got {alpha}")
    return alpha * rho0 * c * h


def first_pk(F, S_total):
    """First Piola-Kirchhoff stress P = F S."""
    return np.asarray(F, dtype=np.float64) @ np.asarray(S_total, dtype=np.float64)


def second_pk(F, dFdt, material, h):
    """Total second Piola-Kirchhoff stress (elastic plus damper)."""
    if material.law == LINEAR_ELASTIC:
        S = linear_elastic_S(green_lagrange(F), material.lam, material.mu)
    else:
        S = neo_hookean_S(F, material.lam, material.mu)
    pi = material.pi_coeff(h)
    if pi > 0.0:
        S = S + kv_damping_S(F, dFdt, pi)
    return S


def strain_energy_density(F, material):
    """Stored elastic energy per unit reference volume, J/m^3."""
    F = np.asarray(F, dtype=np.float64)
    if material.law == LINEAR_ELASTIC:
        E = green_lagrange(F)
        tr = np.trace(E, axis1=-2, axis2=-1)
        return 0.5 * material.lam * tr**2 + material.mu * np.einsum(
            "...ij,...ij->...", E, E
        )
    J = np.linalg.det(F)
    _check_positive_jacobian(J)
    E = green_lagrange(F)
    tr = np.trace(E, axis1=-2, axis2=-1)
    lnJ = np.log(J)
    return material.mu * tr - material.mu * lnJ + 0.5 * material.lam * lnJ**2
