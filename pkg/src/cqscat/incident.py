"""Incident waves and the boundary data they induce.

The scattering problems are driven by Dirichlet data g = -u_inc on the
boundary, so the total field u + u_inc vanishes there.  The plane-wave
generator follows the convention of returning the boundary data directly;
the sign-flipped incident field is available separately.  The symbol
overloading between the wave profile and its window is resolved by naming:
`window` is the Gaussian envelope, `plane_wave` the windowed wave data.
"""

from __future__ import annotations

import dataclasses
import functools
import math

import numpy as np

from .kernels import bessel_j0

TAIL_TOL = 1e-16
OVERSAMPLING = 8


def window(t, width: float = 0.7):
    """Gaussian envelope e^{-(t/width)^2}."""
    t = np.asarray(t, dtype=np.float64)
    return np.exp(-((t / width) ** 2))


@dataclasses.dataclass(frozen=True)
class WindowedPlaneWave:
    """Windowed sinusoidal plane wave travelling along a unit direction."""

    omega: float = 1.0
    direction: tuple = (0.0, -1.0)
    delay: float = 4.0
    width: float = 0.7

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64)
        if abs(float(np.hypot(d[0], d[1])) - 1.0) > 1e-12:
            raise ValueError("plane wave direction must be a unit vector")
        if self.width <= 0.0:
            raise ValueError("window width must be positive")

    def data(self, t, points):
        return plane_wave(t, points, self)

    def field(self, t, points):
        return -plane_wave(t, points, self)


@dataclasses.dataclass(frozen=True)
class GaussianPulse:
    """Radial Gaussian pulse released at t = 0 from an interior point."""

    sharpness: float = 10.0
    center: tuple = (0.25, 0.0)

    def __post_init__(self):
        if self.sharpness <= 0.0:
            raise ValueError("pulse sharpness must be positive")

    def data(self, t, points):
        return -gaussian_incident(points, t, self)

    def field(self, t, points):
        return gaussian_incident(points, t, self)


def plane_wave(t, points, spec: WindowedPlaneWave) -> np.ndarray:
    """Dirichlet data sin(omega (t - x.alpha)) window(t - delay - x.alpha).

    This is -u_inc; the window peaks where t = delay + x.alpha.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    stagger = pts @ np.asarray(spec.direction, dtype=np.float64)
    phase = np.asarray(t, dtype=np.float64) - stagger
    return np.sin(spec.omega * phase) * window(phase - spec.delay, spec.width)


@functools.lru_cache(maxsize=None)
def _gauss_rule(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def gaussian_incident(points, t: float, spec: GaussianPulse) -> np.ndarray:
    """u_inc(x, t) = int_0^inf F(k) J0(k r) k cos(k t) dk, r = |x - center|.

    F(k) = a^{-2} e^{-k^2 / (2 a^2)}.  Truncated where the Gaussian tail
    falls below TAIL_TOL and integrated by Gauss-Legendre with a node
    count tracking the fastest oscillation k_max (t + r); node counts are
    rounded up in blocks so rules are reused across time steps.
    """
    if t < 0.0:
        raise ValueError("the pulse is defined for t >= 0")
    a = spec.sharpness
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    d = pts - np.asarray(spec.center, dtype=np.float64)
    r = np.hypot(d[:, 0], d[:, 1])
    k_max = a * math.sqrt(2.0 * math.log(1.0 / TAIL_TOL))
    n = k_max * (t + float(r.max(initial=0.0))) / (2.0 * math.pi) * OVERSAMPLING
    n = max(64, 32 * math.ceil(n / 32))
    x, w = _gauss_rule(n)
    k = k_max * x
    profile = (k_max / a**2) * w * np.exp(-(k**2) / (2.0 * a**2)) * k * np.cos(k * t)
    return bessel_j0(np.multiply.outer(r, k)) @ profile
