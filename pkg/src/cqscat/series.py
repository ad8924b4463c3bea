"""Exact CQ weights via truncated power-series arithmetic.

FFT-free second route to the convolution weights: the Taylor coefficients
of K(delta(zeta)/dt) (optionally shifted by zeta^m e^{m delta(zeta)}) are
computed by exact rational series arithmetic wherever the inputs are
rational, with a single floating prefactor exp(a_0) where a series
exponential is involved.  Used to cross-validate the contour path; the
shifted sequences produced here vanish *exactly* below the shift index.

Transfer functions are declared structurally: :class:`RationalTransfer`
for p(s)/q(s) and :class:`ExpTransfer` for exp(-rate * s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .cq import MultistepRule, TimeGrid, WeightSequence

__all__ = [
    "RationalTransfer",
    "ExpTransfer",
    "scalar_weights_exact",
]


@dataclass(frozen=True)
class RationalTransfer:
    """K(s) = num(s) / den(s), coefficient tuples in ascending powers of s."""

    num: Sequence
    den: Sequence = (1,)

    def __post_init__(self):
        if not any(self.den):
            raise ValueError("denominator polynomial is identically zero")


@dataclass(frozen=True)
class ExpTransfer:
    """K(s) = exp(-rate * s) with rate >= 0 (a pure transport delay)."""

    rate: Union[int, float, Fraction]

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("delay rate must be >= 0")


TransferLike = Union[RationalTransfer, ExpTransfer]


def _mul(a: list, b: list, n: int) -> list:
    out = [Fraction(0)] * n
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        top = min(n - i, len(b))
        for j in range(top):
            out[i + j] += ai * b[j]
    return out


def _recip(a: list, n: int) -> list:
    # (1/a) as a series; requires a[0] != 0
    if a[0] == 0:
        raise ZeroDivisionError("series reciprocal needs a nonzero constant term")
    inv0 = Fraction(1) / a[0]
    out = [Fraction(0)] * n
    out[0] = inv0
    for k in range(1, n):
        acc = Fraction(0)
        top = min(k, len(a) - 1)
        for i in range(1, top + 1):
            acc += a[i] * out[k - i]
        out[k] = -inv0 * acc
    return out


def _exp_zero_constant(a: list, n: int) -> list:
    # exp of a series with a[0] == 0, via e' = a' e
    out = [Fraction(0)] * n
    out[0] = Fraction(1)
    for k in range(1, n):
        acc = Fraction(0)
        top = min(k, len(a) - 1)
        for i in range(1, top + 1):
            acc += i * a[i] * out[k - i]
        out[k] = acc / k
    return out


def _exp(a: list, n: int) -> tuple[float, list]:
    # exp(a) = exp(a0) * exp(a - a0); the prefactor is the only float
    tail = list(a)
    a0 = tail[0]
    tail[0] = Fraction(0)
    return math.exp(float(a0)), _exp_zero_constant(tail, n)


def _delta_series(rule: MultistepRule, n: int) -> list:
    if rule is MultistepRule.BDF2:
        coeffs = [Fraction(3, 2), Fraction(-2), Fraction(1, 2)]
        return (coeffs + [Fraction(0)] * n)[:n]
    if rule is MultistepRule.TRAPEZOIDAL:
        # 2(1-z)/(1+z) = 2 + sum_{k>=1} 4(-1)^k z^k
        out = [Fraction(2)]
        for k in range(1, n):
            out.append(Fraction(4) if k % 2 == 0 else Fraction(-4))
        return out[:n]
    raise ValueError(f"unknown rule {rule}")  # pragma: no cover


def _poly_of_series(coeffs: Sequence, a: list, n: int) -> list:
    # Horner evaluation of a polynomial at the series a
    out = [Fraction(0)] * n
    for c in reversed([Fraction(c) for c in coeffs]):
        out = _mul(out, a, n)
        out[0] += c
    return out


def scalar_weights_exact(
    K: TransferLike, rule: MultistepRule, grid: TimeGrid, shift: int = 0
) -> WeightSequence:
    """Exact Taylor weights of the (optionally shifted) scalar symbol.

    Computes the coefficients of zeta^m e^{m delta(zeta)} K(delta(zeta)/dt)
    through order N by power-series arithmetic on exact rationals; the only
    rounding happens in one exponential prefactor and the final conversion
    to float64.  Weights below the shift index are exactly zero.

    Raises ``TypeError`` for transfer functions that are not
    series-composable (anything other than the two declared forms).
    """
    if shift < 0:
        raise ValueError("shift must be >= 0")
    n = grid.num_nodes
    keep = n - shift
    if keep <= 0:
        return WeightSequence(np.zeros(n), shift=shift, tol=0.0)

    delta = _delta_series(rule, keep)
    inv_dt = Fraction(1) / Fraction(grid.dt)
    a = [c * inv_dt for c in delta]  # delta(zeta)/dt

    prefactor = 1.0
    if isinstance(K, RationalTransfer):
        num = _poly_of_series(K.num, a, keep)
        den = _poly_of_series(K.den, a, keep)
        body = _mul(num, _recip(den, keep), keep)
    elif isinstance(K, ExpTransfer):
        pre, body = _exp([-Fraction(K.rate) * c for c in a], keep)
        prefactor *= pre
    else:
        raise TypeError(
            f"transfer function {type(K).__name__} is not series-composable; "
            "use RationalTransfer or ExpTransfer"
        )

    if shift:
        pre, shift_series = _exp([Fraction(shift) * c for c in delta], keep)
        prefactor *= pre
        body = _mul(shift_series, body, keep)

    weights = np.zeros(n)
    for j, c in enumerate(body):
        weights[shift + j] = prefactor * float(c)
    return WeightSequence(weights, shift=shift, tol=0.0)
