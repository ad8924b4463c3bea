"""Compiled inner loops (numba backend).

Everything here has a vectorized numpy/scipy twin in :mod:`cqscat.kernels`
and :mod:`cqscat.assembly`; the env flag CQSCAT_BACKEND picks the path.
The scaled Bessel evaluation returns nan on (never observed) continued
fraction non-convergence; wrappers patch such entries through the scipy
route, so results are identical up to roundoff either way.

Shift handling: every fill kernel takes the integer shift matrix and
evaluates zeta^m * exp(-s*(r - m*dt)) * [e^{sr} K(s, r)] entrywise.  The
standard assembly is the same code path with all shifts zero, which keeps
the two schemes bit-for-bit consistent at zero shift.
"""

from __future__ import annotations

import cmath

import numpy as np
from numba import njit

_EULER = 0.5772156649015329
_INV_2PI = 1.0 / (2.0 * np.pi)
_INV_4PI = 1.0 / (4.0 * np.pi)


@njit(cache=True, nogil=True)
def k0e_scalar(z):
    """e^z K0(z) for Re z >= 0, z != 0.

    Power series below |z| = 2 (cancellation there costs < 1 digit),
    continued fraction above (Temme-style CF2 evaluated by the modified
    Lentz recurrence; converges geometrically on the closed right
    half-plane, slowest near |z| = 2 on the imaginary axis, ~160 terms).
    """
    az = abs(z)
    if az <= 2.0:
        zz = 0.25 * z * z
        term = 1.0 + 0j
        i0 = term
        ksum = 0j
        h = 0.0
        for k in range(1, 64):
            term *= zz / (k * k)
            h += 1.0 / k
            i0 += term
            ksum += term * h
            if abs(term) * (h + 1.0) < 1e-18 * (abs(i0) + abs(ksum)):
                break
        return cmath.exp(z) * (-(cmath.log(0.5 * z) + _EULER) * i0 + ksum)

    a = -0.25
    b = 2.0 * (1.0 + z)
    d = 1.0 / b
    delh = d
    q1 = 0j
    q2 = 1.0 + 0j
    q = 0.25
    c = 0.25
    ssum = 1.0 + q * delh
    for i in range(2, 3001):
        a -= 2.0 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (a * d + b)
        delh = (b * d - 1.0) * delh
        ssum += q * delh
        if abs(q * delh) < abs(ssum) * 1e-17:
            return cmath.sqrt(cmath.pi / (2.0 * z)) / ssum
    return complex(np.nan, np.nan)


@njit(cache=True, nogil=True)
def k0e_many(z):
    out = np.empty_like(z)
    flat_in = z.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.size):
        flat_out[i] = k0e_scalar(flat_in[i])
    return out


@njit(cache=True, nogil=True)
def fill_pointwise(s, dist, shifts, dt, zeta, three_d):
    """Entrywise shifted kernel matrix for point-to-point interactions.

    dist: (M, K) distances, all > 0.  shifts: (M, K) int64 with
    shifts*dt <= dist.  Returns zeta^m * e^{-s(r - m dt)} * K0(sr)e^{sr}/2pi
    (2D) or zeta^m * e^{-s(r - m dt)} / (4 pi r) (3D).
    """
    m_rows, n_cols = dist.shape
    out = np.empty((m_rows, n_cols), dtype=np.complex128)
    for i in range(m_rows):
        for j in range(n_cols):
            r = dist[i, j]
            m = shifts[i, j]
            zp = 1.0 + 0j if m == 0 else zeta**m
            damp = cmath.exp(-s * (r - m * dt))
            if three_d:
                out[i, j] = zp * damp * (_INV_4PI / r)
            else:
                out[i, j] = zp * damp * k0e_scalar(s * r) * _INV_2PI
    return out


@njit(cache=True, nogil=True)
def fill_pair_segments(s, flat_r, flat_w, seg_start, seg_stop, tm):
    """Per-pair quadrature sums sum_k w_k e^{-s(r_k - tm_p)} K0(s r_k) e^{s r_k} / 2pi.

    Segment p covers flat indices seg_start[p]:seg_stop[p]; tm[p] is the
    pair's shift time (0 for touching pairs).  The zeta^m factor is applied
    by the caller.
    """
    n_seg = seg_start.size
    out = np.empty(n_seg, dtype=np.complex128)
    for p in range(n_seg):
        acc = 0j
        for k in range(seg_start[p], seg_stop[p]):
            r = flat_r[k]
            acc += flat_w[k] * cmath.exp(-s * (r - tm[p])) * k0e_scalar(s * r)
        out[p] = acc * _INV_2PI
    return out


@njit(cache=True, nogil=True)
def convolve_scalar(w, g):
    n = g.shape[0]
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for j in range(i + 1):
            acc += w[i - j] * g[j]
        out[i] = acc
    return out
