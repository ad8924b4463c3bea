"""Laplace-domain layer kernels and scaled Bessel evaluation.

The wave equation single layer kernel in the Laplace domain is
K(s, r) = K0(s r) / 2 pi in 2D and e^{-s r} / 4 pi r in 3D.  Everything
downstream works with the exponentially scaled form e^{s r} K(s, r),
which stays O(1) on the right half-plane; the damping factor e^{-s r}
(or e^{-s (r - t_m)} for the shifted scheme) is reattached at the last
moment so no intermediate under- or overflows.
"""

from __future__ import annotations

import enum
import logging

import numpy as np
from scipy.special import hankel1e, j0

from ._backend import use_numba

logger = logging.getLogger(__name__)

_INV_2PI = 1.0 / (2.0 * np.pi)
_INV_4PI = 1.0 / (4.0 * np.pi)

# Relative slack on the causality bound m*dt <= r; floor() of an exactly
# representable ratio can land one ulp high, which is harmless.
SHIFT_SLACK = 1e-9


class KernelFamily(enum.Enum):
    """Spatial dimension of the wave kernel."""

    D2 = 2
    D3 = 3


def _check_right_half_plane(z: np.ndarray) -> None:
    if np.any(z.real < 0.0):
        raise ValueError("scaled K0 requires Re z >= 0")
    if np.any(z == 0.0):
        raise ValueError("scaled K0 is singular at z = 0")


def bessel_k0_scaled(z):
    """e^z K0(z) on the closed right half-plane (z != 0).

    The numpy path routes through the scaled Hankel function,
    e^z K0(z) = i pi/2 e^{i (iz)} H0^(1)(i z); the numba path uses a power
    series below |z| = 2 and a continued fraction above.  Both are good to
    a few ulp; the backends agree to ~1e-14 relative.
    """
    z = np.asarray(z, dtype=np.complex128)
    _check_right_half_plane(z)
    if use_numba():
        from . import _kernels_numba as nk

        out = nk.k0e_many(np.ascontiguousarray(z.ravel())).reshape(z.shape)
        bad = np.isnan(out)
        if np.any(bad):
            # continued fraction hit its iteration cap; fall back pointwise
            logger.warning("k0e continued fraction bailed on %d points", bad.sum())
            out[bad] = _k0e_scipy(z[bad])
        return out
    return _k0e_scipy(z)


def _k0e_scipy(z):
    return 0.5j * np.pi * hankel1e(0, 1j * z)


def bessel_j0(x):
    """J0 on the real line."""
    return j0(x)


def laplace_kernel(family: KernelFamily, s: complex, r):
    """K(s, r): fundamental solution of (s^2 - Lap) u = delta, Re s >= 0.

    r must be positive.  Decays like e^{-r Re s}, so large Re s * r
    underflows to 0 rather than overflowing.
    """
    r = np.asarray(r, dtype=np.float64)
    if np.any(r <= 0.0):
        raise ValueError("kernel distance must be positive")
    if family is KernelFamily.D3:
        return np.exp(-s * r) * _INV_4PI / r
    return np.exp(-s * r) * bessel_k0_scaled(s * r) * _INV_2PI


def shifted_kernel(family: KernelFamily, s: complex, r, t_shift):
    """e^{s t_shift} K(s, r), evaluated fused as e^{-s (r - t_shift)} e^{s r} K(s, r).

    Requires 0 <= t_shift <= r (up to SHIFT_SLACK relative), which keeps
    the exponent argument in the decaying direction for Re s >= 0.  This
    is the entry functional of the shifted convolution quadrature, where
    t_shift = floor(r / dt) * dt never exceeds r.
    """
    r = np.asarray(r, dtype=np.float64)
    t_shift = np.asarray(t_shift, dtype=np.float64)
    if np.any(r <= 0.0):
        raise ValueError("kernel distance must be positive")
    if np.any(t_shift < 0.0):
        raise ValueError("kernel time shift must be nonnegative")
    if np.any(t_shift > r * (1.0 + SHIFT_SLACK)):
        raise ValueError("kernel time shift must not exceed the distance")
    if family is KernelFamily.D3:
        return np.exp(-s * (r - t_shift)) * _INV_4PI / r
    return np.exp(-s * (r - t_shift)) * bessel_k0_scaled(s * r) * _INV_2PI


def time_kernel_2d(t, r):
    """Time-domain single layer kernel H(t - r) / (2 pi sqrt(t^2 - r^2)).

    Returns 0 for t < r.  The integrable singularity at t = r is refused
    pointwise; callers integrating across the wavefront are expected to
    use weighted quadrature instead.
    """
    t = np.asarray(t, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if np.any(r <= 0.0):
        raise ValueError("kernel distance must be positive")
    if np.any(t == r):
        raise ValueError("time kernel is singular on the wavefront t = r")
    out = np.zeros(np.broadcast(t, r).shape)
    mask = t > r
    if np.any(mask):
        tt = np.broadcast_to(t, out.shape)[mask]
        rr = np.broadcast_to(r, out.shape)[mask]
        out[mask] = _INV_2PI / np.sqrt(tt * tt - rr * rr)
    return out
