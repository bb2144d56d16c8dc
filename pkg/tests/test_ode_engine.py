"""Shooting engine: starts, integration, counting, fits, renormalization."""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad, solve_ivp

import gapspec as gs
from gapspec.errors import (DomainError, FitUnreliable, SeriesRadiusExceeded,
                            TailNotAsymptotic, VolterraDiverged)
from gapspec.ode_engine import _cumquad

from conftest import B_SPHERE_K1, MU2_SPHERE_K2


def test_series_start_euclidean_leading_power():
    start = gs.series_start(gs.euclidean(2), 0.0, 1e-3)
    assert start.phi / 1e-3 ** 2.5 == pytest.approx(1.0, rel=1e-6)


def test_series_start_free_exponent():
    start = gs.series_start(gs.half_line(gs.sphere(1, 0.0)), 0.25, 1e-3)
    assert start.phi / 1e-3 ** 1.5 == pytest.approx(1.0, rel=1e-6)
    assert start.phi_prime / 1e-3 ** 0.5 == pytest.approx(1.5, rel=1e-6)


def test_series_start_self_convergence():
    # moving the seed deeper into the series region must not move the shot
    op = gs.half_line(gs.sphere(2, 3.0))
    a = gs.endpoint_state(op, 0.1, gs.series_start(op, 0.1), 2.0)
    b = gs.endpoint_state(op, 0.1, gs.series_start(op, 0.1, 2e-4), 2.0)
    va = a.phi * math.exp(a.log_scale)
    vb = b.phi * math.exp(b.log_scale)
    assert va == pytest.approx(vb, rel=1e-9)


def test_series_start_guards():
    op = gs.half_line(gs.sphere(2, 3.0))
    with pytest.raises(SeriesRadiusExceeded):
        gs.series_start(op, 0.1, 0.5)
    with pytest.raises(DomainError):
        gs.series_start(op, 0.1, -1.0)


def test_integrate_zero_energy_stays_positive():
    op = gs.half_line(gs.sphere(1, 1.0))
    tr = gs.integrate(op, 0.0, gs.series_start(op, 0.0), 30.0)
    assert tr.zero_count == 0
    assert np.all(tr.values[:, 0] > 0.0)
    assert np.all(np.diff(tr.grid) > 0.0)


def test_integrate_oscillatory_above_edge():
    # frequency sqrt(mu2 - 1/4) = 1 over (1, 30) gives about 29/pi zeros
    op = gs.half_line(gs.sphere(1, 0.0))
    n = gs.count_zeros(op, 1.25, (1.0, 1.0, 0.0, 0.0), 30.0)
    assert n >= 8


def test_integrate_euclidean_tracks_closed_profile():
    op = gs.euclidean(2)
    tr = gs.integrate(op, 0.0, gs.series_start(op, 0.0), 50.0)
    assert tr.zero_count == 0
    vals = tr.values[:, 0] * np.exp(tr.log_scale)
    prof = tr.grid ** 2.5 / (1.0 + tr.grid ** 4)
    i = int(np.searchsorted(tr.grid, 40.0))
    assert vals[i] / prof[i] == pytest.approx(vals[-1] / prof[-1], rel=1e-4)


def test_integrate_matches_scipy_reference():
    op = gs.half_line(gs.sphere(2, 1.0))
    mu2 = 0.1
    start = gs.series_start(op, mu2)

    def rhs(x, y):
        return [y[1], (gs.effective_potential(op, x) - mu2) * y[0]]

    ref = solve_ivp(rhs, (start.x, 10.0), [start.phi, start.phi_prime],
                    method="DOP853", rtol=1e-11, atol=1e-13)
    tr = gs.integrate(op, mu2, start, 10.0)
    mine = tr.values[-1] * np.exp(tr.log_scale[-1])
    assert mine[0] == pytest.approx(ref.y[0][-1], rel=1e-8)
    assert mine[1] == pytest.approx(ref.y[1][-1], rel=1e-8)


def test_integrate_validation():
    op = gs.half_line(gs.sphere(1, 1.0))
    with pytest.raises(DomainError):
        gs.integrate(op, 0.1, (2.0, 1.0, 0.0, 0.0), 2.0)
    with pytest.raises(DomainError):
        gs.integrate(op, 0.1, (-1.0, 1.0, 0.0, 0.0), 2.0)


def test_count_zeros_matches_trace():
    op = gs.half_line(gs.sphere(2, 8.0))
    for mu2 in (0.01, 0.1, 0.2, 0.24):
        start = gs.series_start(op, mu2)
        tr = gs.integrate(op, mu2, start, 25.0)
        assert gs.count_zeros(op, mu2, start, 25.0) == tr.zero_count


@given(data=st.data())
@settings(max_examples=10, deadline=None)
def test_zero_count_monotone_in_mu2(data):
    if data.draw(st.booleans()):
        geom = gs.sphere(data.draw(st.integers(1, 5)),
                         data.draw(st.floats(0.1, 20.0)))
    else:
        geom = gs.yang_mills(data.draw(st.floats(0.1, 20.0)))
    op = gs.half_line(geom)
    counts = [gs.count_zeros(op, m, gs.series_start(op, m), 20.0)
              for m in np.linspace(0.0, 0.249, 20)]
    assert all(b >= a for a, b in zip(counts, counts[1:]))


def test_tail_start_decaying():
    op = gs.half_line(gs.sphere(2, 5.0))
    start = gs.tail_start_decaying(op, 0.0, 60.0)
    assert start.phi_prime / start.phi == pytest.approx(-0.5)
    assert start.log_scale == pytest.approx(-30.0)
    with pytest.raises(DomainError):
        gs.tail_start_decaying(op, 0.3, 60.0)
    with pytest.raises(TailNotAsymptotic):
        gs.tail_start_decaying(op, 0.24, 15.0)


def test_forward_backward_wronskian_at_eigenvalue():
    mu2 = MU2_SPHERE_K2[5.0]
    op = gs.half_line(gs.sphere(2, 5.0))
    fwd = gs.endpoint_state(op, mu2, gs.series_start(op, mu2), 1.0)
    bwd = gs.endpoint_state(op, mu2, gs.tail_start_decaying(op, mu2, 45.0),
                            1.0)
    m = math.sqrt(0.25 - mu2)
    w = fwd.phi * bwd.phi_prime - fwd.phi_prime * bwd.phi
    assert abs(w) < 1e-8 * abs(fwd.phi) * abs(bwd.phi) * m


def test_fit_threshold_frozen_intercepts():
    op = gs.half_line(gs.sphere(1, 1.0))
    tr = gs.integrate(op, 0.25, gs.series_start(op, 0.25), 60.0, max_step=0.6)
    fit = gs.fit_threshold(tr)
    assert fit.fit_residual < 1e-10
    assert fit.a == pytest.approx(0.4319284, rel=1e-5)
    assert fit.b == pytest.approx(B_SPHERE_K1[1.0], rel=1e-5)


def test_fit_threshold_free_operator_slope():
    op = gs.half_line(gs.sphere(1, 0.0))
    tr = gs.integrate(op, 0.25, gs.series_start(op, 0.25), 60.0, max_step=0.6)
    assert gs.fit_threshold(tr).b > 0.0


def test_fit_threshold_window_guard():
    op = gs.half_line(gs.sphere(1, 1.0))
    tr = gs.integrate(op, 0.25, gs.series_start(op, 0.25), 60.0, max_step=0.6)
    with pytest.raises(FitUnreliable):
        gs.fit_threshold(tr, window=(59.9, 60.0))


def test_renormalized_identity_at_zero_energy():
    sol = gs.renormalized_f(gs.sphere(2, 10.0), 0.0, 10.0)
    assert np.all(sol.f == 1.0)
    assert np.all(sol.f_prime == 0.0)
    assert sol.shoot_residual < 1e-6


def test_renormalized_edge_claims_lambda40():
    lam = 40.0
    sol = gs.renormalized_f(gs.sphere(2, lam), 0.25, lam)
    rho0 = lam * math.atanh(1.0 / lam)
    head = sol.f[sol.grid <= rho0]
    assert np.all(head >= 0.5)
    zeta0 = np.interp(rho0, sol.grid, sol.zeta)
    fp0 = np.interp(rho0, sol.grid, sol.f_prime)
    assert abs(fp0) >= (4.0 / 6.0) * lam ** -5 / zeta0 ** 2
    # f decreases as long as it stays positive
    pos = sol.f > 0.0
    run = np.nonzero(~pos)[0]
    stop = run[0] if run.size else sol.f.size
    assert np.all(np.diff(sol.f[:stop]) <= 1e-12)
    assert sol.shoot_residual < 1e-6


@pytest.mark.parametrize("lam", [20.0, 40.0])
def test_renormalized_sign_change_before_lambda(lam):
    sol = gs.renormalized_f(gs.sphere(2, lam), 0.25, lam)
    neg = np.nonzero(sol.f < 0.0)[0]
    assert neg.size > 0
    assert sol.grid[neg[0]] < lam


def test_renormalized_divergence_guard():
    with pytest.raises(VolterraDiverged):
        gs.renormalized_f(gs.sphere(2, 2.0), 0.25, 200.0)


def test_cumquad_quadrature():
    x = np.geomspace(0.01, 3.0, 400)
    # exact on quadratics
    y = 3.0 * x * x - 2.0 * x + 1.0
    exact = x ** 3 - x ** 2 + x - (0.01 ** 3 - 0.01 ** 2 + 0.01)
    assert np.max(np.abs(_cumquad(x, y) - exact)) < 1e-13 * exact[-1]
    # adaptive-quadrature oracle at the production grid density
    xf = np.geomspace(0.01, 3.0, 6000)
    got = _cumquad(xf, np.sin(xf))[-1]
    want = quad(np.sin, 0.01, 3.0)[0]
    assert got == pytest.approx(want, rel=1e-8)


def test_endpoint_state_matches_trace_end():
    op = gs.half_line(gs.yang_mills(2.0))
    start = gs.series_start(op, 0.1)
    tr = gs.integrate(op, 0.1, start, 15.0)
    end = gs.endpoint_state(op, 0.1, start, 15.0)
    assert end.x == tr.end.x
    assert end.phi == pytest.approx(tr.end.phi, rel=1e-12)
    assert end.phi_prime == pytest.approx(tr.end.phi_prime, rel=1e-12)
    assert end.log_scale == pytest.approx(tr.end.log_scale, abs=1e-12)


def test_scale_ledger_reconstruction():
    # high-index operator: the regular branch spans ~270 decades, forcing a
    # mid-flight rescale; reconstruction across it must match an independent
    # high-precision integration over a window straddling the event
    k, mu2 = 40, 0.1
    op = gs.half_line(gs.sphere(k, 1.0))
    tr = gs.integrate(op, mu2, gs.series_start(op, mu2), 2.0)
    events = [i for i, _ in tr.scale_ledger if i > 0]
    assert events, "expected at least one mid-flight rescale"
    ia = int(np.searchsorted(tr.grid, tr.grid[events[0]] - 0.1))
    ib = int(np.searchsorted(tr.grid, tr.grid[events[0]] + 0.1))
    assert tr.log_scale[ia] != tr.log_scale[ib]

    mpmath.mp.dps = 35
    q = mpmath.mpf("0.25")

    def u_ref(r):
        sh = mpmath.sinh(r)
        x = mpmath.tanh(r / 2) ** k
        v = -8 * k * k * x * x / ((1 + x * x) ** 2 * sh * sh)
        return q + (k * k - q) / (sh * sh) + v

    lga = mpmath.mpf(tr.log_scale[ia])
    ya = [mpmath.mpf(tr.values[ia, 0]) * mpmath.e ** lga,
          mpmath.mpf(tr.values[ia, 1]) * mpmath.e ** lga]
    sol = mpmath.odefun(
        lambda r, y: [y[1], (u_ref(r) - mpmath.mpf(mu2)) * y[0]],
        mpmath.mpf(tr.grid[ia]), ya, tol=mpmath.mpf(10) ** -25)
    ref = [x * mpmath.e ** -lga for x in sol(mpmath.mpf(tr.grid[ib]))]
    lift = math.exp(tr.log_scale[ib] - tr.log_scale[ia])
    assert tr.values[ib, 0] * lift == pytest.approx(float(ref[0]), rel=1e-9)
    assert tr.values[ib, 1] * lift == pytest.approx(float(ref[1]), rel=1e-9)
