"""Exact power-series CQ weights (the FFT-free oracle path)."""

import numpy as np
import pytest

from cqscat.cq import MultistepRule, TimeGrid, scalar_weights_fft
from cqscat.series import ExpTransfer, RationalTransfer, scalar_weights_exact

from oracles import taylor_weights

SQRT_EPS = np.sqrt(np.finfo(float).eps)
RULES = [MultistepRule.BDF2, MultistepRule.TRAPEZOIDAL]


def _delta_callable(rule):
    if rule is MultistepRule.BDF2:
        return lambda z: (1 - z) + (1 - z) ** 2 / 2
    return lambda z: 2 * (1 - z) / (1 + z)


def test_transfer_validation():
    with pytest.raises(ValueError):
        RationalTransfer(num=(1,), den=(0, 0))
    with pytest.raises(ValueError):
        ExpTransfer(rate=-0.5)


def test_unsupported_transfer_rejected():
    g = TimeGrid(4, 1.0)
    with pytest.raises(TypeError, match="series-composable"):
        scalar_weights_exact(lambda s: 1.0 / s, MultistepRule.BDF2, g)


def test_differentiator_square_is_polynomial_square():
    # K(s) = s^2, dt = 1: coefficients of delta(zeta)^2 exactly
    g = TimeGrid(8, 1.0)
    w = scalar_weights_exact(RationalTransfer(num=(0, 0, 1)), MultistepRule.BDF2, g)
    want = np.zeros(9)
    want[:5] = [2.25, -6.0, 5.5, -2.0, 0.25]
    assert np.array_equal(w.weights, want)


def test_integrator_first_weight_exact():
    for dt in (0.5, 0.1, 0.0625):
        g = TimeGrid(6, dt)
        w = scalar_weights_exact(RationalTransfer(num=(1,), den=(0, 1)), MultistepRule.BDF2, g)
        assert w.weights[0] == pytest.approx(2 * dt / 3, rel=1e-15)


@pytest.mark.parametrize("rule", RULES)
def test_exact_matches_taylor_oracle(rule):
    dt = 0.25
    g = TimeGrid(20, dt)
    cases = [
        (RationalTransfer(num=(1,), den=(0, 1)), lambda s: 1 / s),
        (RationalTransfer(num=(1,), den=(0, 0, 1)), lambda s: 1 / (s * s)),
        (RationalTransfer(num=(0, 1), den=(1, 1)), lambda s: s / (1 + s)),
        (ExpTransfer(rate=0.75), lambda s: np.exp(-0.75 * s) if isinstance(s, float) else __import__("mpmath").e ** (-0.75 * s)),
    ]
    for K, K_call in cases:
        got = scalar_weights_exact(K, rule, g).weights
        want = taylor_weights(K_call, _delta_callable(rule), dt, g.num_steps).real
        np.testing.assert_allclose(got, want, atol=1e-13 * max(1.0, np.abs(want).max()))


@pytest.mark.parametrize("rule", RULES)
def test_exact_vs_fft_cross_validation(rule):
    dt = 10.0 / 128
    g = TimeGrid(128, dt)
    pairs = [
        (RationalTransfer(num=(1,)), lambda s: np.ones_like(s)),
        (RationalTransfer(num=(1,), den=(0, 1)), lambda s: 1.0 / s),
        (RationalTransfer(num=(0, 1)), lambda s: s),
        (RationalTransfer(num=(0, 0, 1)), lambda s: s * s),
        (ExpTransfer(rate=3 * dt), lambda s: np.exp(-3 * dt * s)),
    ]
    for K_exact, K_fft in pairs:
        we = scalar_weights_exact(K_exact, rule, g).weights
        wf = scalar_weights_fft(K_fft, rule, g).weights
        scale = np.abs(we).max()
        assert np.abs(we - wf).max() <= 10 * SQRT_EPS * scale


def test_delay_at_whole_steps_is_unit_shift():
    # K(s) = e^{-s m dt}: shifted symbol zeta^m e^{m delta} K collapses to zeta^m
    dt = 0.2
    g = TimeGrid(12, dt)
    m = 4
    w = scalar_weights_exact(ExpTransfer(rate=m * dt), MultistepRule.BDF2, g, shift=m)
    want = np.zeros(g.num_nodes)
    want[m] = 1.0
    np.testing.assert_allclose(w.weights, want, atol=1e-13)


@pytest.mark.parametrize("rule", RULES)
@pytest.mark.parametrize("shift", [1, 2, 5])
def test_shifted_weights_exactly_causal(rule, shift):
    g = TimeGrid(16, 0.3)
    w = scalar_weights_exact(RationalTransfer(num=(1,), den=(0, 1)), rule, g, shift=shift)
    assert w.shift == shift
    assert np.all(w.weights[:shift] == 0.0)
    assert np.any(w.weights[shift:] != 0.0)


@pytest.mark.parametrize("rule", RULES)
def test_shifted_exact_vs_fft(rule):
    # the shift is only ever applied against kernels decaying at least like
    # e^{-s m dt}; a bare e^{m delta(zeta)} has an essential singularity at
    # the trapezoidal pole and genuinely diverging weights
    dt = 0.125
    g = TimeGrid(64, dt)
    shift = 6
    r = 2 * shift * dt
    we = scalar_weights_exact(ExpTransfer(rate=r), rule, g, shift=shift).weights
    wf = scalar_weights_fft(lambda s: np.exp(-r * s), rule, g, shift=shift).weights
    assert np.abs(we - wf).max() <= 10 * SQRT_EPS * np.abs(we).max()


def test_shift_beyond_horizon_gives_zero_sequence():
    g = TimeGrid(4, 0.5)
    w = scalar_weights_exact(RationalTransfer(num=(1,)), MultistepRule.BDF2, g, shift=9)
    assert np.array_equal(w.weights, np.zeros(5))


def test_negative_shift_rejected():
    g = TimeGrid(4, 0.5)
    with pytest.raises(ValueError):
        scalar_weights_exact(RationalTransfer(num=(1,)), MultistepRule.BDF2, g, shift=-1)
