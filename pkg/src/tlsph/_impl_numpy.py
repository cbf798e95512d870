"""Pure-numpy implementations of the hot per-step kernels.

Fallback path for machines without numba (or with TLSPH_BACKEND=numpy).
Neighbor contributions are reduced per CSR row in slot order, matching the
loop order of the jitted backend.
"""

import numpy as np

NAME = "numpy"

_EYE = np.eye(3)


def _segment_sum(values, offsets):
    """Sum ``values`` rows over the CSR segments described by ``offsets``."""
    n = len(offsets) - 1
    out = np.zeros((n,) + values.shape[1:], dtype=values.dtype)
    if values.shape[0] == 0:
        return out
    nonempty = offsets[1:] > offsets[:-1]
    if not nonempty.any():
        return out
    starts = offsets[:-1][nonempty]
    # reduceat sums each [starts[k], starts[k+1]) run; empty rows are skipped
    # above so consecutive starts bracket exactly one row's slots.
    out[nonempty] = np.add.reduceat(values, starts, axis=0)
    return out


def moment_matrices(offsets, neighbors, owners, r0_ij, grad0, V0):
    """M_i = -sum_j V0_j r0_ij (x) grad0_ij, the gradient-correction moment."""
    contrib = r0_ij[:, :, None] * grad0[:, None, :]
    contrib *= -V0[neighbors][:, None, None]
    flat = _segment_sum(contrib.reshape(-1, 9), offsets)
    return flat.reshape(-1, 3, 3)


def deformation_rates(offsets, neighbors, owners, grad0, V0, v, B0):
    """dF_i/dt = (-sum_j V0_j (v_i - v_j) (x) grad0_ij) B0_i."""
    vij = v[owners] - v[neighbors]
    contrib = vij[:, :, None] * grad0[:, None, :]
    contrib *= -V0[neighbors][:, None, None]
    raw = _segment_sum(contrib.reshape(-1, 9), offsets).reshape(-1, 3, 3)
    return raw @ B0


def accelerations(offsets, neighbors, owners, grad0, V0, pb, m, gravity):
    """a_i = (V0_i / m_i) sum_j V0_j (P_i B0_i + P_j B0_j) grad0_ij + g."""
    tij = pb[owners] + pb[neighbors]
    f = np.einsum("pab,pb->pa", tij, grad0)
    f *= V0[neighbors][:, None]
    acc = _segment_sum(f, offsets)
    acc *= (V0 / m)[:, None]
    acc += gravity
    return acc


def _det3(F):
    return (
        F[..., 0, 0] * (F[..., 1, 1] * F[..., 2, 2] - F[..., 1, 2] * F[..., 2, 1])
        - F[..., 0, 1] * (F[..., 1, 0] * F[..., 2, 2] - F[..., 1, 2] * F[..., 2, 0])
        + F[..., 0, 2] * (F[..., 1, 0] * F[..., 2, 1] - F[..., 1, 1] * F[..., 2, 0])
    )


def _sym_inverse(C):
    """Cofactor inverse of symmetric 3x3 stacks; symmetric by construction."""
    c00 = C[..., 1, 1] * C[..., 2, 2] - C[..., 1, 2] * C[..., 1, 2]
    c01 = C[..., 0, 2] * C[..., 1, 2] - C[..., 0, 1] * C[..., 2, 2]
    c02 = C[..., 0, 1] * C[..., 1, 2] - C[..., 0, 2] * C[..., 1, 1]
    c11 = C[..., 0, 0] * C[..., 2, 2] - C[..., 0, 2] * C[..., 0, 2]
    c12 = C[..., 0, 1] * C[..., 0, 2] - C[..., 0, 0] * C[..., 1, 2]
    c22 = C[..., 0, 0] * C[..., 1, 1] - C[..., 0, 1] * C[..., 0, 1]
    det = C[..., 0, 0] * c00 + C[..., 0, 1] * c01 + C[..., 0, 2] * c02
    det = np.where(det != 0.0, det, 1.0)  # garbage rows are caught by the J check
    inv = np.empty_like(C)
    inv[..., 0, 0] = c00 / det
    inv[..., 0, 1] = inv[..., 1, 0] = c01 / det
    inv[..., 0, 2] = inv[..., 2, 0] = c02 / det
    inv[..., 1, 1] = c11 / det
    inv[..., 1, 2] = inv[..., 2, 1] = c12 / det
    inv[..., 2, 2] = c22 / det
    return inv


def stress_times_b(F, dFdt, B0, lam, mu, pi_coeff, law_code):
    """Per-particle P B0 product and det F.

    law_code 0: linear elastic S = lam tr(E) I + 2 mu E.
    law_code 1: neo-Hookean   S = mu (I - C^-1) + lam ln(J) C^-1.
    A Kelvin-Voigt damper pi * dE/dt is added when pi_coeff > 0; the branch
    is skipped entirely at pi_coeff = 0 so the disabled path leaves the
    arithmetic of the undamped scheme untouched.
    """
    J = _det3(F)
    Ft = np.swapaxes(F, -1, -2)
    C = Ft @ F
    if law_code == 0:
        E = 0.5 * (C - _EYE)
        tr = np.trace(E, axis1=-2, axis2=-1)
        S = (lam * tr)[..., None, None] * _EYE + (2.0 * mu) * E
    elif law_code == 1:
        Cinv = _sym_inverse(C)
        with np.errstate(invalid="ignore", divide="ignore"):
            lnJ = np.log(np.where(J > 0.0, J, 1.0))
        S = mu * (_EYE - Cinv) + (lam * lnJ)[..., None, None] * Cinv
    else:
        raise ValueError(f"unknown constitutive law code {law_code}")
    if pi_coeff > 0.0:
        dFt = np.swapaxes(dFdt, -1, -2)
        S = S + (0.5 * pi_coeff) * (dFt @ F + Ft @ dFdt)
    return (F @ S) @ B0, J


def ray_crossings_z(points, tris, tri_min, tri_max, eps_det, eps_bary, eps_len):
    """Count +z ray/triangle crossings for each point.

    Returns (counts, suspicious).  A point is suspicious when some hit lands
    within ``eps_bary`` of a triangle edge, within ``eps_len`` of the ray
    origin, or when the ray runs within ``eps_len`` of the plane of a
    triangle parallel to it; parity is then unreliable and the caller should
    retry with a jittered origin.
    """
    npts = points.shape[0]
    counts = np.zeros(npts, dtype=np.int64)
    suspicious = np.zeros(npts, dtype=np.uint8)
    if npts == 0 or tris.shape[0] == 0:
        return counts, suspicious

    v0 = tris[:, 0, :]
    e1 = tris[:, 1, :] - v0
    e2 = tris[:, 2, :] - v0
    # direction d = (0, 0, 1):  pvec = d x e2 = (-e2y, e2x, 0)
    det = e1[:, 0] * (-e2[:, 1]) + e1[:, 1] * e2[:, 0]
    parallel = np.abs(det) <= eps_det
    normal = np.cross(e1, e2)
    nrm = np.linalg.norm(normal, axis=1)
    nrm = np.where(nrm > 0.0, nrm, 1.0)
    inv_det = 1.0 / np.where(parallel, 1.0, det)

    chunk = 2048
    for lo in range(0, npts, chunk):
        p = points[lo : lo + chunk]  # (c, 3)
        in_xy = (
            (tri_min[None, :, 0] <= p[:, None, 0])
            & (tri_max[None, :, 0] >= p[:, None, 0])
            & (tri_min[None, :, 1] <= p[:, None, 1])
            & (tri_max[None, :, 1] >= p[:, None, 1])
            & (tri_max[None, :, 2] >= p[:, None, 2])
        )
        tvec = p[:, None, :] - v0[None, :, :]  # (c, T, 3)
        u = (tvec[:, :, 0] * (-e2[None, :, 1]) + tvec[:, :, 1] * e2[None, :, 0]) * inv_det
        qx = tvec[:, :, 1] * e1[None, :, 2] - tvec[:, :, 2] * e1[None, :, 1]
        qy = tvec[:, :, 2] * e1[None, :, 0] - tvec[:, :, 0] * e1[None, :, 2]
        qz = tvec[:, :, 0] * e1[None, :, 1] - tvec[:, :, 1] * e1[None, :, 0]
        v = qz * inv_det
        t = (e2[None, :, 0] * qx + e2[None, :, 1] * qy + e2[None, :, 2] * qz) * inv_det

        live = in_xy & ~parallel[None, :]
        hit = live & (u >= 0.0) & (u <= 1.0) & (v >= 0.0) & (u + v <= 1.0) & (t > 0.0)
        counts[lo : lo + chunk] = hit.sum(axis=1)

        near = (
            live
            & (u >= -eps_bary)
            & (u <= 1.0 + eps_bary)
            & (v >= -eps_bary)
            & (u + v <= 1.0 + eps_bary)
            & (t > -eps_len)
        )
        marginal = near & (
            (np.abs(u) < eps_bary)
            | (np.abs(v) < eps_bary)
            | (np.abs(u + v - 1.0) < eps_bary)
            | (np.abs(t) < eps_len)
        )
        # ray almost contained in the plane of a parallel triangle
        plane_dist = np.abs(np.einsum("ctk,tk->ct", tvec, normal)) / nrm[None, :]
        in_plane = in_xy & parallel[None, :] & (plane_dist < eps_len)
        suspicious[lo : lo + chunk] = (marginal | in_plane).any(axis=1).astype(np.uint8)
    return counts, suspicious
