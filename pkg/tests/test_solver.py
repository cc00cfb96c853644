import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavebreak import (CorruptedState, DispersionSymbol, Field, InvalidArgument, PeriodicGrid,
                       StepFailure, UnderResolved)
from wavebreak.characteristics import detect_breaking
from wavebreak.solver import (Outcome, SolveConfig, conserved_quantities, rhs, run, step,
                              suggest_dt)

WHITHAM = DispersionSymbol.whitham()
KDV = DispersionSymbol.kdv()


def test_rhs_of_zero_is_zero():
    g = PeriodicGrid(32)
    assert np.all(rhs(Field.zeros(g), WHITHAM).values == 0.0)


def test_rhs_linear_mode_speed():
    g = PeriodicGrid(64)
    eps, k = 1e-8, 3
    u = g.field(lambda x: eps * np.sin(k * x))
    out = rhs(u, WHITHAM).values
    lin = -eps * k * WHITHAM(k) * np.cos(k * g.x)
    # the quadratic term is O(eps^2)
    assert np.allclose(out, lin, atol=1e-14)


def test_rhs_burgers_case():
    g = PeriodicGrid(64)
    u = g.field(lambda x: 0.3 * np.sin(x))
    ux = 0.3 * np.cos(g.x)
    expect = -(1 + u.values) * ux
    assert np.allclose(rhs(u, DispersionSymbol.fractional(1.0)).values, expect, atol=1e-13)


def test_rhs_rejects_nan():
    g = PeriodicGrid(16)
    f = Field(g, np.zeros(16))
    # Field validates on construction, so assemble a corrupt one by hand
    bad = Field.__new__(Field)
    bad.grid, bad._values, bad._spectrum = g, np.full(16, np.nan), None
    with pytest.raises(CorruptedState):
        rhs(bad, WHITHAM)
    assert rhs(f, WHITHAM).max_abs() == 0.0


def test_step_contracts():
    g = PeriodicGrid(32)
    cfg = SolveConfig(WHITHAM, dt_initial=1e-2, dt_floor=1e-6)
    assert step(Field.zeros(g), cfg, 1e-3).max_abs() == 0.0
    with pytest.raises(InvalidArgument):
        step(Field.zeros(g), cfg, 2e-2)
    with pytest.raises(StepFailure):
        step(Field.zeros(g), cfg, 1e-7)


@pytest.mark.parametrize("sym", [WHITHAM, KDV, DispersionSymbol.fractional(0.5)])
def test_linear_evolution_is_exact(sym):
    g = PeriodicGrid(64)
    k = 5
    u = g.field(lambda x: np.sin(k * x))
    cfg = SolveConfig(sym, dt_initial=0.1, nonlinear=False)
    t = 0.0
    for _ in range(20):
        u = step(u, cfg, 0.1)
        t += 0.1
    exact = np.sin(k * (g.x - sym(k) * t))
    assert np.allclose(u.values, exact, atol=1e-12)


def _smooth_datum(g):
    return g.field(lambda x: 0.3 * np.exp(np.cos(x)) - 0.3 * np.i0(1.0))


def _advance(u, cfg, dt, t_end):
    for _ in range(int(round(t_end / dt))):
        u = step(u, cfg, dt)
    return u


def test_fourth_order_convergence_kdv():
    g = PeriodicGrid(64)
    u0 = _smooth_datum(g)
    cfg = SolveConfig(KDV, dt_initial=0.1)
    t_end = 0.8
    ref = _advance(u0, cfg, 0.1 / 8, t_end).values
    e1 = np.abs(_advance(u0, cfg, 0.1, t_end).values - ref).max()
    e2 = np.abs(_advance(u0, cfg, 0.05, t_end).values - ref).max()
    assert 12.0 < e1 / e2 < 20.0


def test_conserved_quantities_closed_forms():
    g = PeriodicGrid(64)
    assert conserved_quantities(Field.zeros(g)) == (0.0, 0.0)
    mass, l2 = conserved_quantities(g.field(np.sin))
    assert mass == pytest.approx(0.0, abs=1e-14)
    assert l2 == pytest.approx(math.pi, rel=1e-14)


def test_zero_datum_reaches_tmax():
    g = PeriodicGrid(32)
    res = run(Field.zeros(g), SolveConfig(WHITHAM, dt_initial=0.05, t_max=0.5))
    assert res.outcome is Outcome.REACHED_TMAX
    assert all(f.max_abs() == 0.0 for f in res.trajectory.fields)


def test_under_resolved_datum_rejected():
    g = PeriodicGrid(64)
    rng = np.random.default_rng(1)
    with pytest.raises(UnderResolved):
        run(Field(g, rng.normal(size=64)), SolveConfig(WHITHAM))


def test_config_validation():
    with pytest.raises(InvalidArgument):
        SolveConfig(WHITHAM, dt_initial=1e-9, dt_floor=1e-8)
    with pytest.raises(InvalidArgument):
        SolveConfig(WHITHAM, slope_stop=-0.5)
    with pytest.raises(InvalidArgument):
        SolveConfig(WHITHAM, dealias_fraction=0.4)


def test_whitham_invariants_pre_breaking():
    g = PeriodicGrid(256)
    u0 = g.field(lambda x: 0.2 * np.sin(x) + 0.1 * np.cos(2 * x))
    res = run(u0, SolveConfig(WHITHAM, dt_initial=suggest_dt(u0), t_max=1.0))
    mass, l2 = res.series["mass"], res.series["l2"]
    assert np.abs(mass - mass[0]).max() <= 1e-13
    assert np.abs(l2 - l2[0]).max() / l2[0] <= 1e-6
    # reality: fields real by construction, spectra conjugate-symmetric
    last = res.trajectory.fields[-1]
    full = np.fft.fft(last.values)
    assert np.allclose(full[1:], np.conj(full[1:][::-1]), atol=1e-10)


@pytest.mark.parametrize("amp", [1.0, 2.0, 4.0])
def test_burgers_breaking_time_scales_inversely(amp):
    g = PeriodicGrid(1024)
    u0 = g.field(lambda x: -amp * np.sin(x))
    cfg = SolveConfig(DispersionSymbol.fractional(1.0), dt_initial=suggest_dt(u0),
                      t_max=1.5 / amp, slope_stop=-30 * amp)
    rep = detect_breaking(run(u0, cfg).history)
    assert rep.detected
    assert rep.T_estimate * amp == pytest.approx(1.0, abs=0.05)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.05, 0.3), st.integers(1, 4))
def test_mass_untouched_by_every_term(amp, k):
    g = PeriodicGrid(64)
    u0 = g.field(lambda x: amp * np.cos(k * x) + 0.1)
    u = _advance(u0, SolveConfig(WHITHAM, dt_initial=0.02), 0.02, 0.2)
    assert u.mean() == pytest.approx(0.1, abs=1e-14)


def _steepening_time(period, n_points, factor=3.0):
    # time at which inf u_x first reaches factor * inf u0', a resolved-stage marker
    g = PeriodicGrid(n_points, period)
    u0 = g.field(lambda x: 2.0 * np.exp(-((x - 0.5 * period) / 0.5) ** 2))
    res = run(u0, SolveConfig(WHITHAM, dt_initial=suggest_dt(u0), t_max=3.0, slope_stop=-30.0))
    h = res.history
    m = h.m_vals[: h.resolved_prefix()]
    i = int(np.flatnonzero(m <= factor * m[0])[0])
    return float(np.interp(factor * m[0], m[i - 1:i + 1][::-1], h.times[i - 1:i + 1][::-1]))


def test_period_doubling_sensitivity():
    # same dx, cell doubled; a localized datum should not feel the images
    t1 = _steepening_time(2 * math.pi, 2048)
    t2 = _steepening_time(4 * math.pi, 4096)
    print(f"period-doubling sensitivity of the 3 m0 crossing time: {abs(t2 - t1) / t2:.3g}")
    assert abs(t2 - t1) / t2 < 1e-4
