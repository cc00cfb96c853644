import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavebreak import InsufficientData, InvalidArgument, PeriodicGrid, QuadratureFailure
from wavebreak.kernel import (QuadratureSpec, build_kernel_table, f0, f1, fit_bound_constants,
                              fractional_multiplier, fractional_normalization,
                              fractional_normalization_exact, kernel_mass, kernel_ww,
                              kernel_ww_derivative, kernel_ww_derivative_profile,
                              kernel_ww_profile, sine_integral_check, sine_integral_truncated,
                              singular_convolution, singular_integral, whitham_convolution,
                              whitham_multiplier)

# mpmath quadosc at 30 digits on the cosine / sine transforms of sqrt(tanh k / k)
ORACLE = {
    0.01: (3.6385938699055427746, -199.47043950287890488),
    0.5: (0.22171893666379911564, -0.53225285791841103215),
    1.0: (0.077607334915298361471, -0.14966375385333910834),
    2.0: (0.012513012176756488866, -0.022103139611753684539),
}


@pytest.mark.parametrize("x", sorted(ORACLE))
def test_kernel_matches_high_precision_oracle(x):
    k, kp = ORACLE[x]
    assert kernel_ww(x) == pytest.approx(k, rel=1e-9)
    assert kernel_ww_derivative(x) == pytest.approx(kp, rel=1e-9)


@pytest.mark.parametrize("x", [1e-4, 1e-3, 0.01, 0.1, 0.5])
def test_fourier_and_profile_routes_agree(x):
    assert kernel_ww_profile(x) == pytest.approx(kernel_ww(x), rel=1e-8)
    assert kernel_ww_derivative_profile(x) == pytest.approx(kernel_ww_derivative(x), rel=1e-7)


@pytest.mark.parametrize("x", [0.003, 0.2, 1.5])
def test_derivative_matches_finite_difference(x):
    h = 1e-4 * x
    fd = (kernel_ww(x + h) - kernel_ww(x - h)) / (2 * h)
    assert kernel_ww_derivative(x) == pytest.approx(fd, rel=1e-6)


def test_profile_limits():
    assert f0(0.0) == 0.0 and f1(0.0) == 0.0
    assert f0(60.0) == pytest.approx(1.0, abs=1e-12)
    assert f1(60.0) == pytest.approx(0.5, abs=1e-12)
    z = 0.02
    assert f0(z) == pytest.approx(2 / 3 * z ** 2.5, rel=1e-3)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-3, 30.0))
def test_profiles_bounded(z):
    # f0 rises monotonically to 1; f1 overshoots its limit 1/2 (peak ~1.007)
    assert 0.0 <= f0(z) <= 1.0 + 1e-12
    assert 0.0 <= f1(z) <= 1.01


def test_kernel_positive_and_decreasing():
    xs = np.geomspace(1e-3, 8.0, 25)
    k = np.array([kernel_ww(x) for x in xs])
    assert np.all(k > 0)
    assert np.all(np.diff(k) < 0)


def test_argument_checks():
    with pytest.raises(InvalidArgument):
        kernel_ww(0.0)
    with pytest.raises(InvalidArgument):
        kernel_ww(-1.0)
    with pytest.raises(InvalidArgument):
        QuadratureSpec(tol=0.0)
    with pytest.raises(QuadratureFailure):
        kernel_ww(0.5, QuadratureSpec(tol=1e-30, limit=50))


def test_sine_integral_and_truncation():
    assert sine_integral_check() == pytest.approx(math.sqrt(2 * math.pi), abs=1e-12)
    # a hard cutoff at z = 1000 leaves an error of order 1000**-1.5
    gap = abs(sine_integral_truncated(1e3) - math.sqrt(2 * math.pi))
    assert 1e-6 < gap < 1e-4


def test_kernel_mass_is_symbol_at_zero():
    assert kernel_mass() == pytest.approx(1.0, abs=1e-10)


def test_table_shape_and_constants(kernel_table):
    table, _ = kernel_table
    assert table.xs.size == 200
    assert table.k0 == pytest.approx(1.1 * table.k0_raw)
    assert table.k0_raw >= 1 / math.sqrt(2 * math.pi)
    # k_inf bounds the total variation of K past delta0, which is K(delta0)
    assert table.k_inf_raw == pytest.approx(kernel_ww(0.5), rel=0.2)
    assert table.k_inf_raw >= kernel_ww(0.5) * (1 - 1e-3)


def test_table_interpolation(kernel_table):
    table, _ = kernel_table
    for x in (2e-4, 0.037, 0.77, 6.3):
        assert table.evaluate(x)[()] == pytest.approx(kernel_ww(x), rel=1e-5)
    assert table.evaluate(11.0)[()] < table.k_vals[-1]


def test_fit_needs_enough_span():
    short = build_kernel_table(1e-3, 10.0, 20, fit=False)
    with pytest.raises(InsufficientData):
        fit_bound_constants(short)


def _fields(n):
    g = PeriodicGrid(n)
    yield g.field(lambda x: np.exp(np.sin(x)) - np.i0(1.0))
    rng = np.random.default_rng(7)
    k = np.arange(1, n // 16)
    amp = rng.normal(size=k.size) * np.exp(-0.05 * k)
    ph = rng.uniform(0, 2 * math.pi, k.size)
    yield g.field(lambda x: (amp[:, None] * np.cos(k[:, None] * x + ph[:, None])).sum(axis=0))


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_normalization_calibration_matches_closed_form(alpha):
    assert fractional_normalization(alpha) == pytest.approx(fractional_normalization_exact(alpha), rel=1e-10)


@pytest.mark.parametrize("alpha", [0.25, 0.5])
def test_singular_convolution_matches_multiplier(alpha):
    # the random field reaches k dx ~ 0.4, where quintic spreading costs accuracy
    for u, tol in zip(_fields(1024), (1e-10, 1e-5)):
        ref = fractional_multiplier(u, alpha).values
        got = singular_convolution(u, alpha).values
        assert np.abs(got - ref).max() / np.abs(ref).max() < tol


def test_singular_convolution_split_independent():
    u = next(_fields(512))
    a = singular_convolution(u, 0.5, delta=u.grid.dx).values
    b = singular_convolution(u, 0.5, delta=0.7).values
    assert np.allclose(a, b, atol=1e-9)


def test_singular_integral_argument_checks():
    u = next(_fields(64))
    with pytest.raises(InvalidArgument, match="alpha out of range"):
        singular_integral(u, 1.0)
    with pytest.raises(InvalidArgument):
        singular_integral(u, 0.5, delta=4.0)


def test_operators_annihilate_constants(kernel_table):
    g = PeriodicGrid(256)
    c = g.field(lambda x: 3.0 + 0 * x)
    assert np.abs(singular_convolution(c, 0.5).values).max() < 1e-12
    assert np.abs(whitham_convolution(c, kernel_table[0]).values).max() < 1e-12


def test_whitham_convolution_matches_multiplier(kernel_table):
    table, _ = kernel_table
    for u in _fields(1024):
        ref = whitham_multiplier(u).values
        got = whitham_convolution(u, table).values
        assert np.abs(got - ref).max() / np.abs(ref).max() < 1e-3


def test_whitham_convolution_needs_long_table():
    short = build_kernel_table(1e-4, 2.0, 40, fit=False)
    with pytest.raises(InsufficientData):
        whitham_convolution(next(_fields(64)), short)
