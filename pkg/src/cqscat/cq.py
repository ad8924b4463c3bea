"""Convolution quadrature core: generating functions, contours, weights.

Discretizes causal convolutions K(d/dt)g on a uniform grid t_n = n*dt by
evaluating the transfer function K at the scaled generating function
delta(zeta)/dt of an A-stable multistep rule.  Weights come either from an
FFT over the contour |zeta| = lambda < 1 (fast path, accuracy ~sqrt(eps))
or from exact truncated power-series arithmetic (oracle path, see
:mod:`cqscat.series`).

The shifted variant multiplies the weight generating function by
zeta^m * exp(m*delta(zeta)), which pushes the support of the weights to
indices >= m while preserving consistency; m is a travel-time step count.

DFT convention used throughout the package: forward transform
X_k = sum_n x_n * zeta_{N+1}^{-k n} (numpy.fft.fft) and inverse with the
1/(N+1) factor (numpy.fft.ifft), where zeta_{N+1} = exp(2j*pi/(N+1)).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._backend import use_numba

__all__ = [
    "MultistepRule",
    "TimeGrid",
    "WeightSequence",
    "delta_at",
    "choose_lambda",
    "contour_points",
    "cq_frequencies",
    "modified_symbol",
    "scalar_weights_fft",
    "apply_convolution",
]


class MultistepRule(enum.Enum):
    """Second-order A-stable multistep rules shipped with the package."""

    BDF2 = "bdf2"
    TRAPEZOIDAL = "trapezoidal"

    @property
    def order(self) -> int:
        return 2


def delta_at(rule: MultistepRule, zeta):
    """Evaluate the generating function delta(zeta) of a multistep rule.

    BDF2: (1 - zeta) + (1 - zeta)^2 / 2.  Trapezoidal: 2(1 - zeta)/(1 + zeta),
    which has a pole at zeta = -1.

    Parameters
    ----------
    rule : MultistepRule
    zeta : complex scalar or ndarray

    Returns
    -------
    complex scalar or ndarray matching the input shape.
    """
    zeta = np.asarray(zeta)
    if rule is MultistepRule.BDF2:
        w = 1.0 - zeta
        out = w + 0.5 * w * w
    elif rule is MultistepRule.TRAPEZOIDAL:
        if np.any(zeta == -1.0):
            raise ValueError("trapezoidal generating function has a pole at zeta = -1")
        out = 2.0 * (1.0 - zeta) / (1.0 + zeta)
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown rule {rule}")
    return out[()] if out.ndim == 0 else out


def choose_lambda(num_steps: int, eps: float) -> float:
    """Contour radius lambda = eps^(1/(2(N+1))).

    Balances the O(lambda^(N+1)) contour truncation error against roundoff
    amplified by lambda^(-n), giving overall accuracy ~sqrt(eps).
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return float(eps ** (1.0 / (2.0 * (num_steps + 1))))


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid t_n = n*dt, n = 0..N, with its CQ contour.

    Attributes
    ----------
    num_steps : int
        N; the grid has N+1 nodes and t_N = horizon.
    dt : float
        Step size.
    eps : float
        Target precision used to pick the contour radius.
    contour_radius : float
        lambda in (0, 1); defaults to ``choose_lambda(num_steps, eps)``.
    """

    num_steps: int
    dt: float
    eps: float = 1e-16
    contour_radius: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.num_steps < 0:
            raise ValueError("num_steps must be >= 0")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.contour_radius is None:
            object.__setattr__(
                self, "contour_radius", choose_lambda(self.num_steps, self.eps)
            )
        if not 0.0 < self.contour_radius < 1.0:
            raise ValueError(
                f"contour radius must lie in (0, 1), got {self.contour_radius}"
            )

    @property
    def num_nodes(self) -> int:
        return self.num_steps + 1

    @property
    def horizon(self) -> float:
        return self.num_steps * self.dt

    def times(self) -> np.ndarray:
        return np.arange(self.num_nodes) * self.dt

    @classmethod
    def from_horizon(
        cls, num_steps: int, horizon: float, eps: float = 1e-16, contour_radius=None
    ) -> "TimeGrid":
        return cls(num_steps, horizon / num_steps, eps, contour_radius)


def contour_points(grid: TimeGrid) -> np.ndarray:
    """The N+1 contour points lambda * zeta_{N+1}^{-ell}, ell = 0..N.

    The second half is written as the exact conjugate of the first so
    that conjugate-mirror shortcuts agree with full sweeps to the bit;
    sin/cos round differently at the two angles otherwise.
    """
    n = grid.num_nodes
    ell = np.arange(n)
    pts = grid.contour_radius * np.exp(-2j * np.pi * ell / n)
    for k in range(1, n - n // 2):
        pts[n - k] = np.conj(pts[k])
    return pts


def cq_frequencies(rule: MultistepRule, grid: TimeGrid) -> np.ndarray:
    """Contour frequencies s_ell = delta(lambda * zeta_{N+1}^{-ell}) / dt.

    All returned frequencies have positive real part (A-stability plus
    lambda < 1).  Their magnitude grows like O(dt^-1) for BDF2 and
    O(dt^-2) for the trapezoidal rule as the grid is refined.
    """
    return delta_at(rule, contour_points(grid)) / grid.dt


def modified_symbol(
    K: Callable, shift: int, rule: MultistepRule, zeta, dt: float
):
    """Scalar shifted weight generating function zeta^m e^{m delta} K(delta/dt).

    For shift m = 0 this is the standard symbol K(delta(zeta)/dt).  The
    direct product computed here overflows once m * Re(delta) exceeds ~700;
    matrix assembly therefore never calls this but fuses the exponential
    with the kernel (see :func:`cqscat.kernels.shifted_kernel`).  Intended
    for scalar transfer functions and moderate shifts.
    """
    if shift < 0:
        raise ValueError("shift must be >= 0")
    zeta = np.asarray(zeta, dtype=complex)
    d = delta_at(rule, zeta)
    base = K(d / dt)
    if shift == 0:
        return base
    return zeta**shift * np.exp(shift * d) * base


@dataclass
class WeightSequence:
    """Discrete convolution weights omega_0..omega_N with causal shift.

    ``weights`` has shape (N+1,) for scalar kernels or (N+1, M, K) for
    matrix kernels.  ``shift`` is m >= 0; exact-path sequences vanish
    identically below index m, FFT-path sequences only up to ``tol``.
    ``imag_residual`` is the largest imaginary magnitude discarded when a
    conjugate-symmetric spectrum was collapsed to real weights.
    """

    weights: np.ndarray
    shift: int = 0
    tol: float = 0.0
    imag_residual: float = 0.0

    def __post_init__(self):
        if self.shift < 0:
            raise ValueError("shift must be >= 0")

    @property
    def num_nodes(self) -> int:
        return self.weights.shape[0]


def weights_from_contour_values(values: np.ndarray, grid: TimeGrid, shift: int = 0) -> WeightSequence:
    """Inverse transform of symbol samples on the contour into weights.

    ``values`` holds the symbol at the contour points of ``grid`` along
    axis 0 (any trailing shape).  Returns omega_j = lambda^{-j} * ifft(values)_j
    with the imaginary part dropped after recording its maximum; the declared
    tolerance is tol_fft = 100 * sqrt(eps) * max|omega|.
    """
    if values.shape[0] != grid.num_nodes:
        raise ValueError("one symbol sample per contour point required")
    lam = grid.contour_radius
    w = np.fft.ifft(values, axis=0)
    scale = lam ** (-np.arange(grid.num_nodes, dtype=float))
    w *= scale.reshape((-1,) + (1,) * (w.ndim - 1))
    imag_residual = float(np.max(np.abs(w.imag))) if w.size else 0.0
    real = np.ascontiguousarray(w.real)
    tol = 100.0 * math.sqrt(grid.eps) * (float(np.max(np.abs(real))) if real.size else 0.0)
    if imag_residual > max(tol, 1e-300):
        # non-symmetric spectrum; keep the complex weights
        return WeightSequence(w, shift=shift, tol=tol, imag_residual=imag_residual)
    return WeightSequence(real, shift=shift, tol=tol, imag_residual=imag_residual)


def scalar_weights_fft(
    K: Callable, rule: MultistepRule, grid: TimeGrid, shift: int = 0
) -> WeightSequence:
    """CQ weights of a scalar transfer function via the FFT contour.

    omega_j ~ lambda^{-j}/(N+1) * sum_ell K(s_ell) zeta_{N+1}^{ell j},
    exact Taylor coefficients of the symbol up to O(lambda^{N+1}) plus
    roundoff amplified by lambda^{-j}.  ``shift`` > 0 requests the shifted
    symbol; the resulting weights are numerically zero below index m.

    A failure to evaluate K at some contour frequency is re-raised with the
    offending frequency index attached.
    """
    pts = contour_points(grid)
    s = delta_at(rule, pts) / grid.dt
    try:
        vals = np.asarray(K(s), dtype=complex)
    except Exception:
        vals = np.empty(grid.num_nodes, dtype=complex)
        for ell in range(grid.num_nodes):
            try:
                vals[ell] = K(s[ell])
            except Exception as exc:
                raise ValueError(
                    f"transfer function failed at contour frequency index {ell}, s={s[ell]}"
                ) from exc
    if shift:
        vals = pts**shift * np.exp(shift * delta_at(rule, pts)) * vals
    return weights_from_contour_values(vals, grid, shift=shift)


def _convolve_scalar_numpy(w: np.ndarray, g: np.ndarray) -> np.ndarray:
    n = g.shape[0]
    out = np.empty_like(g, dtype=np.result_type(w.dtype, g.dtype))
    for i in range(n):
        # sum_{j<=i} w[i-j] g[j]
        out[i] = np.tensordot(w[i::-1], g[: i + 1], axes=(0, 0))
    return out


def apply_convolution(weights: WeightSequence, g: np.ndarray) -> np.ndarray:
    """Discrete causal convolution (K(d/dt) g)(t_n) = sum_{j<=n} omega_{n-j} g_j.

    ``g`` has shape (N+1,) or (N+1, d); matrix weights (N+1, M, d) contract
    against vector data (N+1, d) to give (N+1, M).
    """
    w = weights.weights
    g = np.asarray(g)
    if g.shape[0] != w.shape[0]:
        raise ValueError(
            f"data length {g.shape[0]} does not match weight count {w.shape[0]}"
        )
    if w.ndim == 1:
        if use_numba() and g.ndim == 1 and w.dtype == g.dtype == np.float64:
            from ._kernels_numba import convolve_scalar

            return convolve_scalar(w, g)
        return _convolve_scalar_numpy(w, g)
    if w.ndim == 3:
        if g.ndim != 2 or g.shape[1] != w.shape[2]:
            raise ValueError(
                f"matrix weights {w.shape} incompatible with data {g.shape}"
            )
        out = np.zeros((g.shape[0], w.shape[1]), dtype=np.result_type(w.dtype, g.dtype))
        for i in range(g.shape[0]):
            for j in range(i + 1):
                out[i] += w[i - j] @ g[j]
        return out
    raise ValueError(f"unsupported weight array rank {w.ndim}")
