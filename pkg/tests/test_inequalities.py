import math
import time

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavebreak import InvalidArgument, OutOfRange, PeriodicGrid
from wavebreak.inequalities import (InequalityReport, delta_grid, lemma_n3_check, lemma_n3_sides,
                                    lemma_n3_sweep, splitting_bound_check, summary_lines,
                                    whitham_splitting_check)


def _exact_lhs(n, p):
    # integer arithmetic is exact when 1/alpha is a whole number
    return sum(math.comb(n, j) * (j - 1) ** ((j - 1) * p) * (n - j) ** ((n - j) * p) for j in range(2, n))


@pytest.mark.parametrize("alpha,p", [(0.5, 2), (0.25, 4)])
@pytest.mark.parametrize("n", [3, 4, 10, 37, 60])
def test_log_sum_matches_exact_integers(n, alpha, p):
    log_lhs, log_proof, log_display = lemma_n3_sides(n, alpha)
    exact = _exact_lhs(n, p)
    assert log_lhs == pytest.approx(float(mpmath.log(exact)), rel=1e-13)
    mpmath.mp.dps = 30
    base = mpmath.e / (p - 1) * n * mpmath.mpf(n - 1) ** ((n - 1) * p)
    assert log_proof == pytest.approx(float(mpmath.log(base * mpmath.mpf(1.5) ** (p - 1))), rel=1e-13)
    assert log_display == pytest.approx(float(mpmath.log(base * mpmath.mpf(1.5) ** p)), rel=1e-13)


def test_small_n_closed_forms():
    # n = 3, alpha = 1/2: the only term j = 2 is C(3,2) * 1 * 1 = 3
    r = lemma_n3_check(3, 0.5)
    assert float(r.lhs) == pytest.approx(3.0)
    assert float(r.rhs) == pytest.approx(math.e * 3 * 16 * 1.5)
    r4 = lemma_n3_check(4, 0.5)
    # j=2: C(4,2) * 1 * 2**4 = 96; j=3: C(4,3) * 2**4 * 1 = 64
    assert float(r4.lhs) == pytest.approx(6 * 16 + 64)


def test_sweep_passes_with_room_and_fast():
    t0 = time.perf_counter()
    reports = lemma_n3_sweep()
    elapsed = time.perf_counter() - t0
    assert len(reports) == 2 * 4 * 58
    assert all(r.passed for r in reports)
    assert max(r.ratio for r in reports) < 0.5
    assert elapsed < 10.0


def test_argument_checks():
    with pytest.raises(OutOfRange):
        lemma_n3_check(5, 0.7)
    with pytest.raises(InvalidArgument):
        lemma_n3_check(2, 0.5)
    with pytest.raises(InvalidArgument):
        lemma_n3_check(5, 0.5, variant="loose")


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 120), st.floats(0.05, 0.66))
def test_display_form_dominates_proof_form(n, alpha):
    _, proof, display = lemma_n3_sides(n, alpha)
    assert display > proof


def test_report_ratio_and_csv():
    r = InequalityReport("x", {"a": 1}, math.log(2.0), math.log(8.0))
    assert r.passed and r.ratio == pytest.approx(0.25)
    row = r.csv_row()
    assert row[0] == "x" and row[-1] == "true"
    assert any("max_ratio=0.25" in line for line in summary_lines([r]))


def test_delta_grid_density():
    g = delta_grid(1e-3, 1.0)
    assert g.size == 31
    assert g[0] == pytest.approx(1e-3) and g[-1] == pytest.approx(1.0)
    assert np.allclose(np.diff(np.log10(g)), 0.1)
    assert delta_grid(1e-3, 1.0, include_hi=False)[-1] < 1.0


def _suite(n):
    g = PeriodicGrid(n)
    yield g.field(np.sin)
    yield g.field(lambda x: np.exp(np.sin(x)) - np.i0(1.0))
    yield g.field(lambda x: np.cos(3 * x) + 0.5 * np.sin(5 * x))
    yield g.field(lambda x: 1.0 / (1.2 - np.cos(x)))


@pytest.mark.parametrize("alpha", [0.25, 0.5])
def test_fractional_splitting_passes_on_suite(alpha):
    g = PeriodicGrid(256)
    for u in _suite(256):
        for n in (0, 1, 2):
            for d in delta_grid(g.dx, 1.0)[::3]:
                assert splitting_bound_check(u, n, alpha, d).passed


def test_fractional_splitting_fails_near_alpha_one():
    # the delta**(1-alpha) coefficient of the sharp bound is 2/(alpha(1-alpha)),
    # which exceeds 6/alpha once alpha > 2/3
    g = PeriodicGrid(256)
    reports = [splitting_bound_check(u, 0, 0.9, d) for u in _suite(256) for d in delta_grid(g.dx, 1.0)]
    assert not all(r.passed for r in reports)


def test_whitham_splitting_passes_on_suite(kernel_table):
    table, _ = kernel_table
    g = PeriodicGrid(256)
    for u in _suite(256):
        for d in delta_grid(g.dx, table.delta0, include_hi=False)[::3]:
            assert whitham_splitting_check(u, 0, d, table).passed
    with pytest.raises(OutOfRange):
        whitham_splitting_check(next(_suite(256)), 0, table.delta0, table)
