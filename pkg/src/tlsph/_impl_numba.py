"""Numba-jitted implementations of the hot per-step kernels.

Mirrors tlsph._impl_numpy function for function.  Loops are parallel over
particles; every particle writes only its own output rows and accumulates
its neighbor slots in CSR order, so results do not depend on the thread
count.  fastmath stays off: reruns must be bitwise reproducible.
"""

import numpy as np
from numba import njit, prange

NAME = "numba"

_OPTS = dict(cache=True, fastmath=False)


@njit(**_OPTS)
def moment_matrices(offsets, neighbors, owners, r0_ij, grad0, V0):
    n = offsets.shape[0] - 1
    out = np.zeros((n, 3, 3), dtype=np.float64)
    for i in prange(n):
        for p in range(offsets[i], offsets[i + 1]):
            j = neighbors[p]
            c = V0[j]
            for a in range(3):
                ra = r0_ij[p, a]
                for b in range(3):
                    out[i, a, b] -= c * ra * grad0[p, b]
    return out


@njit(parallel=True, **_OPTS)
def deformation_rates(offsets, neighbors, owners, grad0, V0, v, B0):
    n = offsets.shape[0] - 1
    out = np.empty((n, 3, 3), dtype=np.float64)
    for i in prange(n):
        g00 = 0.0; g01 = 0.0; g02 = 0.0
        g10 = 0.0; g11 = 0.0; g12 = 0.0
        g20 = 0.0; g21 = 0.0; g22 = 0.0
        for p in range(offsets[i], offsets[i + 1]):
            j = neighbors[p]
            c = V0[j]
            vx = v[i, 0] - v[j, 0]
            vy = v[i, 1] - v[j, 1]
            vz = v[i, 2] - v[j, 2]
            gx = grad0[p, 0]
            gy = grad0[p, 1]
            gz = grad0[p, 2]
            g00 -= c * vx * gx; g01 -= c * vx * gy; g02 -= c * vx * gz
            g10 -= c * vy * gx; g11 -= c * vy * gy; g12 -= c * vy * gz
            g20 -= c * vz * gx; g21 -= c * vz * gy; g22 -= c * vz * gz
        for b in range(3):
            out[i, 0, b] = g00 * B0[i, 0, b] + g01 * B0[i, 1, b] + g02 * B0[i, 2, b]
            out[i, 1, b] = g10 * B0[i, 0, b] + g11 * B0[i, 1, b] + g12 * B0[i, 2, b]
            out[i, 2, b] = g20 * B0[i, 0, b] + g21 * B0[i, 1, b] + g22 * B0[i, 2, b]
    return out


@njit(parallel=True, **_OPTS)
def accelerations(offsets, neighbors, owners, grad0, V0, pb, m, gravity):
    n = offsets.shape[0] - 1
    out = np.empty((n, 3), dtype=np.float64)
    for i in prange(n):
        ax = 0.0
        ay = 0.0
        az = 0.0
        for p in range(offsets[i], offsets[i + 1]):
            j = neighbors[p]
            c = V0[j]
            gx = grad0[p, 0]
            gy = grad0[p, 1]
            gz = grad0[p, 2]
            ax += c * ((pb[i, 0, 0] + pb[j, 0, 0]) * gx
                       + (pb[i, 0, 1] + pb[j, 0, 1]) * gy
                       + (pb[i, 0, 2] + pb[j, 0, 2]) * gz)
            ay += c * ((pb[i, 1, 0] + pb[j, 1, 0]) * gx
                       + (pb[i, 1, 1] + pb[j, 1, 1]) * gy
                       + (pb[i, 1, 2] + pb[j, 1, 2]) * gz)
            az += c * ((pb[i, 2, 0] + pb[j, 2, 0]) * gx
                       + (pb[i, 2, 1] + pb[j, 2, 1]) * gy
                       + (pb[i, 2, 2] + pb[j, 2, 2]) * gz)
        scale = V0[i] / m[i]
        out[i, 0] = scale * ax + gravity[0]
        out[i, 1] = scale * ay + gravity[1]
        out[i, 2] = scale * az + gravity[2]
    return out


@njit(parallel=True, **_OPTS)
def stress_times_b(F, dFdt, B0, lam, mu, pi_coeff, law_code):
    n = F.shape[0]
    pb = np.empty((n, 3, 3), dtype=np.float64)
    J = np.empty(n, dtype=np.float64)
    for i in prange(n):
        f00 = F[i, 0, 0]; f01 = F[i, 0, 1]; f02 = F[i, 0, 2]
        f10 = F[i, 1, 0]; f11 = F[i, 1, 1]; f12 = F[i, 1, 2]
        f20 = F[i, 2, 0]; f21 = F[i, 2, 1]; f22 = F[i, 2, 2]
        detF = (f00 * (f11 * f22 - f12 * f21)
                - f01 * (f10 * f22 - f12 * f20)
                + f02 * (f10 * f21 - f11 * f20))
        J[i] = detF
        # C = F^T F (symmetric, six unique entries)
        c00 = f00 * f00 + f10 * f10 + f20 * f20
        c01 = f00 * f01 + f10 * f11 + f20 * f21
        c02 = f00 * f02 + f10 * f12 + f20 * f22
        c11 = f01 * f01 + f11 * f11 + f21 * f21
        c12 = f01 * f02 + f11 * f12 + f21 * f22
        c22 = f02 * f02 + f12 * f12 + f22 * f22
        if law_code == 0:
            e00 = 0.5 * (c00 - 1.0)
            e11 = 0.5 * (c11 - 1.0)
            e22 = 0.5 * (c22 - 1.0)
            e01 = 0.5 * c01
            e02 = 0.5 * c02
            e12 = 0.5 * c12
            tr = e00 + e11 + e22
            s00 = lam * tr + 2.0 * mu * e00
            s11 = lam * tr + 2.0 * mu * e11
            s22 = lam * tr + 2.0 * mu * e22
            s01 = 2.0 * mu * e01
            s02 = 2.0 * mu * e02
            s12 = 2.0 * mu * e12
        else:
            k00 = c11 * c22 - c12 * c12
            k01 = c02 * c12 - c01 * c22
            k02 = c01 * c12 - c02 * c11
            k11 = c00 * c22 - c02 * c02
            k12 = c01 * c02 - c00 * c12
            k22 = c00 * c11 - c01 * c01
            detC = c00 * k00 + c01 * k01 + c02 * k02
            if detC == 0.0 or detF <= 0.0:
                # flagged through J; fill a harmless placeholder row
                detC = 1.0
                lnJ = 0.0
            else:
                lnJ = np.log(detF)
            i00 = k00 / detC
            i01 = k01 / detC
            i02 = k02 / detC
            i11 = k11 / detC
            i12 = k12 / detC
            i22 = k22 / detC
            s00 = mu * (1.0 - i00) + lam * lnJ * i00
            s11 = mu * (1.0 - i11) + lam * lnJ * i11
            s22 = mu * (1.0 - i22) + lam * lnJ * i22
            s01 = -mu * i01 + lam * lnJ * i01
            s02 = -mu * i02 + lam * lnJ * i02
            s12 = -mu * i12 + lam * lnJ * i12
        if pi_coeff > 0.0:
            d00 = dFdt[i, 0, 0]; d01 = dFdt[i, 0, 1]; d02 = dFdt[i, 0, 2]
            d10 = dFdt[i, 1, 0]; d11 = dFdt[i, 1, 1]; d12 = dFdt[i, 1, 2]
            d20 = dFdt[i, 2, 0]; d21 = dFdt[i, 2, 1]; d22 = dFdt[i, 2, 2]
            # dE/dt = 0.5 (dF^T F + F^T dF)
            h = 0.5 * pi_coeff
            s00 += h * 2.0 * (d00 * f00 + d10 * f10 + d20 * f20)
            s11 += h * 2.0 * (d01 * f01 + d11 * f11 + d21 * f21)
            s22 += h * 2.0 * (d02 * f02 + d12 * f12 + d22 * f22)
            s01 += h * ((d00 * f01 + d10 * f11 + d20 * f21)
                        + (f00 * d01 + f10 * d11 + f20 * d21))
            s02 += h * ((d00 * f02 + d10 * f12 + d20 * f22)
                        + (f00 * d02 + f10 * d12 + f20 * d22))
            s12 += h * ((d01 * f02 + d11 * f12 + d21 * f22)
                        + (f01 * d02 + f11 * d12 + f21 * d22))
        # P = F S
        p00 = f00 * s00 + f01 * s01 + f02 * s02
        p01 = f00 * s01 + f01 * s11 + f02 * s12
        p02 = f00 * s02 + f01 * s12 + f02 * s22
        p10 = f10 * s00 + f11 * s01 + f12 * s02
        p11 = f10 * s01 + f11 * s11 + f12 * s12
        p12 = f10 * s02 + f11 * s12 + f12 * s22
        p20 = f20 * s00 + f21 * s01 + f22 * s02
        p21 = f20 * s01 + f21 * s11 + f22 * s12
        p22 = f20 * s02 + f21 * s12 + f22 * s22
        for b in range(3):
            pb[i, 0, b] = p00 * B0[i, 0, b] + p01 * B0[i, 1, b] + p02 * B0[i, 2, b]
            pb[i, 1, b] = p10 * B0[i, 0, b] + p11 * B0[i, 1, b] + p12 * B0[i, 2, b]
            pb[i, 2, b] = p20 * B0[i, 0, b] + p21 * B0[i, 1, b] + p22 * B0[i, 2, b]
    return pb, J


@njit(parallel=True, **_OPTS)
def ray_crossings_z(points, tris, tri_min, tri_max, eps_det, eps_bary, eps_len):
    npts = points.shape[0]
    ntri = tris.shape[0]
    counts = np.zeros(npts, dtype=np.int64)
    suspicious = np.zeros(npts, dtype=np.uint8)
    for idx in prange(npts):
        px = points[idx, 0]
        py = points[idx, 1]
        pz = points[idx, 2]
        count = 0
        flag = 0
        for t_i in range(ntri):
            if tri_min[t_i, 0] > px or tri_max[t_i, 0] < px:
                continue
            if tri_min[t_i, 1] > py or tri_max[t_i, 1] < py:
                continue
            if tri_max[t_i, 2] < pz:
                continue
            v0x = tris[t_i, 0, 0]; v0y = tris[t_i, 0, 1]; v0z = tris[t_i, 0, 2]
            e1x = tris[t_i, 1, 0] - v0x
            e1y = tris[t_i, 1, 1] - v0y
            e1z = tris[t_i, 1, 2] - v0z
            e2x = tris[t_i, 2, 0] - v0x
            e2y = tris[t_i, 2, 1] - v0y
            e2z = tris[t_i, 2, 2] - v0z
            tvx = px - v0x
            tvy = py - v0y
            tvz = pz - v0z
            # direction (0, 0, 1): pvec = d x e2 = (-e2y, e2x, 0)
            det = -e1x * e2y + e1y * e2x
            if -eps_det < det < eps_det:
                # ray parallel to the triangle: only dangerous when it runs
                # (nearly) inside the triangle's plane
                nx = e1y * e2z - e1z * e2y
                ny = e1z * e2x - e1x * e2z
                nz = e1x * e2y - e1y * e2x
                nn = np.sqrt(nx * nx + ny * ny + nz * nz)
                if nn > 0.0:
                    dist = abs(tvx * nx + tvy * ny + tvz * nz) / nn
                    if dist < eps_len:
                        flag = 1
                continue
            inv_det = 1.0 / det
            u = (-tvx * e2y + tvy * e2x) * inv_det
            qx = tvy * e1z - tvz * e1y
            qy = tvz * e1x - tvx * e1z
            qz = tvx * e1y - tvy * e1x
            v = qz * inv_det
            t = (e2x * qx + e2y * qy + e2z * qz) * inv_det
            if 0.0 <= u <= 1.0 and v >= 0.0 and u + v <= 1.0 and t > 0.0:
                count += 1
            if (u >= -eps_bary and u <= 1.0 + eps_bary and v >= -eps_bary
                    and u + v <= 1.0 + eps_bary and t > -eps_len):
                if (abs(u) < eps_bary or abs(v) < eps_bary
                        or abs(u + v - 1.0) < eps_bary or abs(t) < eps_len):
                    flag = 1
        counts[idx] = count
        suspicious[idx] = flag
    return counts, suspicious
