"""Wendland C2 quintic smoothing kernel, 3D, compact support 2h.

W(q) = sigma3 / h^3 * (1 - q/2)^4 (1 + 2q)   for q = |r| / h in [0, 2)
     = 0                                      for q >= 2

sigma3 = 21 / (16 pi) makes the integral of W over the support ball equal 1.
"""

import math
from dataclasses import dataclass

import numpy as np

SIGMA3 = 21.0 / (16.0 * math.pi)


def wendland_value(distance, h):
    """Kernel value at the given distance(s). Units 1/m^3.

    Accepts a scalar or an ndarray of distances.
    """
    if h <= 0.0:
        raise ValueError(f"smoothing length must be positive, got h = {h}")
    q = np.asarray(distance, dtype=np.float64) / h
    if np.any(q < 0.0):
        raise ValueError("distance must be non-negative")
    tail = 1.0 - 0.5 * q
    w = np.where(q < 2.0, (SIGMA3 / h**3) * tail**4 * (1.0 + 2.0 * q), 0.0)
    if np.isscalar(distance):
        return float(w)
    return w


def wendland_radial_derivative(distance, h):
    """dW/d|r| = -5 sigma3 / h^4 * q (1 - q/2)^3 inside the support, else 0."""
    if h <= 0.0:
        raise ValueError(f"smoothing length must be positive, got h = {h}")
    q = np.asarray(distance, dtype=np.float64) / h
    if np.any(q < 0.0):
        raise ValueError("distance must be non-negative")
    tail = 1.0 - 0.5 * q
    dw = np.where(q < 2.0, (-5.0 * SIGMA3 / h**4) * q * tail**3, 0.0)
    if np.isscalar(distance):
        return float(dw)
    return dw


def wendland_gradient(r0_ij, h):
    """Gradient of W(|r0_ij|) with respect to the first particle's position.

    Returns dW/d|r| * e_ij with e_ij = r0_ij / |r0_ij|.  W decreases with
    distance, so the gradient points along -e_ij inside the support and is
    the zero vector outside it.  Coincident particles have no defined
    direction and are rejected.
    """
    r0_ij = np.asarray(r0_ij, dtype=np.float64)
    dist = float(np.sqrt(np.dot(r0_ij, r0_ij)))
    if dist == 0.0:
        raise ValueError("coincident particles: kernel gradient direction undefined")
    return wendland_radial_derivative(dist, h) * (r0_ij / dist)


@dataclass(frozen=True)
class SmoothingKernel:
    """Wendland C2 kernel bound to a smoothing length."""

    h: float
    dim: int = 3

    def __post_init__(self):
        if self.h <= 0.0:
            raise ValueError(f"smoothing length must be positive, got h = {self.h}")
        if self.dim != 3:
            raise ValueError("only the 3D kernel is implemented")

    @property
    def support_radius(self):
        return 2.0 * self.h

    @property
    def normalization(self):
        return SIGMA3 / self.h**3

    def value(self, distance):
        return wendland_value(distance, self.h)

    def radial_derivative(self, distance):
        return wendland_radial_derivative(distance, self.h)

    def gradient(self, r_ij):
        return wendland_gradient(r_ij, self.h)
