import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nilfield import flow
from nilfield.families import Y2Params, degree_one_params, make_fn2, make_ld_normal, make_y2, poly1
from nilfield.polycore import PolyMap, variables

Q = Fraction
ONE, ZERO, W = poly1([1]), poly1([0]), poly1([0, 1])


def _cy1(lam=-1) -> PolyMap:
    return make_ld_normal(degree_one_params(lam, ONE, W, ZERO, ZERO, ONE))


# -- integrator -----------------------------------------------------------------

def test_scaled_identity_converges():
    tr = flow.integrate(PolyMap.scaled_identity(3, -1), [1.0, -2.0, 3.0], flow.SimConfig(t_max=100))
    assert tr.verdict == flow.CONVERGES
    assert flow.classify_orbit(tr) == flow.CONVERGES
    assert np.max(np.abs(tr.final_state)) < 1e-9


def test_circle_flow_is_undecided():
    x, y = variables(2)
    tr = flow.integrate(PolyMap([-y, x]), [1.0, 0.0], flow.SimConfig(t_max=20))
    assert tr.verdict == flow.UNDECIDED
    assert flow.classify_orbit(tr) == flow.UNDECIDED
    assert tr.times[-1] == pytest.approx(20.0)
    # radius is conserved
    assert abs(np.hypot(*tr.final_state) - 1) < 1e-6


def test_finite_time_blowup_escapes():
    t = variables(1)[0]
    tr = flow.integrate(PolyMap([t * t]), [1.0], flow.SimConfig(t_max=5))
    assert tr.verdict == flow.ESCAPES
    assert tr.times[-1] < 1.0 + 1e-3


def test_stop_callback():
    tr = flow.integrate(lambda y: -y, [1.0], flow.SimConfig(t_max=10), stop=lambda t, y: t > 1)
    assert tr.stopped and tr.verdict == flow.UNDECIDED


def test_config_validation():
    with pytest.raises(ValueError):
        flow.SimConfig(rel_tol=0)
    with pytest.raises(ValueError):
        flow.SimConfig(converge_radius=10, escape_radius=1)


@pytest.mark.parametrize("lam", [-1.0, -0.5, 1.0])
def test_integrator_fifth_order(lam):
    # error ~ tol^(5/5): shrinking tol by 32 shrinks the error by a factor near 32
    errs = []
    for tol in (1e-6, 1e-6 / 32, 1e-6 / 32 ** 2):
        cfg = flow.SimConfig(rel_tol=tol, abs_tol=tol, t_max=1.0, converge_radius=1e-300)
        tr = flow.integrate(lambda y: lam * y, [1.0], cfg)
        errs.append(abs(tr.states[-1][0] - math.exp(lam)))
    for a, b in zip(errs, errs[1:]):
        assert 8 <= a / b <= 128


@settings(max_examples=10)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_cy1_third_coordinate_is_exponential(x0, y0, z0):
    cfg = flow.SimConfig(t_max=5.0)
    tr = flow.integrate(_cy1(), [x0, y0, z0], cfg)
    for t, s in zip(tr.times, tr.states):
        exact = z0 * math.exp(-t)
        assert abs(s[2] - exact) <= 10 * (cfg.abs_tol + cfg.rel_tol * abs(exact))


def test_cy1_attracts():
    cfg = flow.SimConfig(t_max=200)
    for x0 in ([5.0, -7.0, 3.0], [-9.0, 9.0, -9.0]):
        assert flow.integrate(_cy1(), x0, cfg).verdict == flow.CONVERGES


# -- closed-form orbits ---------------------------------------------------------------

def test_y2_escape_orbit_terms():
    orb = flow.y2_escape_orbit(-1, 1, 1)
    assert orb.exact
    assert orb.terms == (((Q(-18), Q(1)),), ((Q(12), Q(2)),), ((Q(1), Q(-1)),))


def test_y2_escape_orbit_residual():
    F = make_y2(Y2Params(-1, 1))
    orb = flow.y2_escape_orbit(-1, 1, 1)
    times = [5.0 * i / 100 for i in range(101)]
    assert flow.residual_expporbit(F, orb, times) < 1e-9
    assert flow.residual_expporbit(F, orb.scaled(0, 1 + Q(1, 1000)), times) > 1e-4


def test_zero_orbit_has_zero_residual():
    zero = flow.ExpPolyOrbit(((), (), ()))
    assert flow.residual_expporbit(make_y2(Y2Params(-1, 1)), zero, [0.0, 1.0, 2.0]) == 0.0


def test_y2_escape_orbit_validation():
    with pytest.raises(ValueError):
        flow.y2_escape_orbit(Q(1, 2), 1, 1)
    with pytest.raises(ValueError):
        flow.y2_escape_orbit(-1, 2, 1)
    assert not flow.y2_escape_orbit(-1, 3, 1).exact
    assert flow.y2_escape_orbit(Q(-36), 3, 1).exact


def test_y2_orbit_escapes_numerically():
    tr = flow.integrate(make_y2(Y2Params(-1, 1)), [-18.0, 12.0, 1.0])
    assert tr.verdict == flow.ESCAPES
    assert np.max(np.abs(tr.final_state)) >= 1e6


def test_rational_root():
    assert flow.rational_root(Q(-27, 8), 3) == Q(-3, 2)
    assert flow.rational_root(Q(2), 2) is None
    assert flow.rational_root(Q(-4), 2) is None


# -- charts ---------------------------------------------------------------------------

def test_identity_chart():
    F = make_fn2(3, Q(-1, 2))
    assert flow.chart_transform(F, flow.identity_chart(3)) == F


@pytest.mark.parametrize("lam", [Q(-1), Q(-1, 2), Q(-3)])
def test_liorsc_chart_gives_W(lam):
    assert flow.chart_transform(flow.liorsc_Y(lam), flow.liorsc_chart()) == flow.liorsc_W_expected(lam)


def test_chart_mismatch_rejected():
    bad = flow.ChartSpec(
        flow.liorsc_chart().forward, flow.identity_chart(3).inverse, flow.liorsc_chart().factor
    )
    with pytest.raises(ValueError):
        flow.chart_transform(flow.liorsc_Y(-1), bad)


@pytest.mark.parametrize("beta,A1,A2", [(1, 0, 1), (-1, 2, 1), (Q(1, 3), Q(-1, 2), 2)])
def test_teo1li_chain(beta, A1, A2):
    from nilfield.families import teo1li_field

    Z = flow.chart_transform(teo1li_field(-1, beta, A1, A2), flow.teo1li_projective_chart())
    assert Z == flow.teo1li_Z_expected(-1, beta, A1, A2)
    Z1 = flow.chart_transform(Z, flow.teo1li_blowup_chart())
    assert Z1 == flow.teo1li_Z1_expected(-1, beta, A1, A2)


@pytest.mark.parametrize("beta", [1, -1])
def test_teo1li_singularities_annihilate(beta):
    rep = flow.teo1li_singularities(beta, 0, 1)
    assert rep.residuals_zero
    # frozen from the exact Jacobian at the third point
    got = sorted(e.real for e in rep.eigen.eigenvalues)
    want = sorted([-beta / 5, -4 * beta / 5, -2 * beta])
    assert np.allclose(got, want, atol=1e-10)


# -- trapping region ------------------------------------------------------------------

def test_trapping_region_constants():
    R = flow.TrappingRegion.for_lambda(-1)
    assert (R.A, R.s0, R.p0, R.q0) == (Q(-2), Q(-1, 512), Q(1, 8), Q(11, 16))
    with pytest.raises(ValueError):
        flow.TrappingRegion.for_lambda(Q(1, 2))


@pytest.mark.parametrize("lam", [Q(-1), Q(-1, 2)])
def test_trapping_certified(lam):
    W = flow.chart_transform(flow.liorsc_Y(lam), flow.liorsc_chart())
    rep = flow.verify_trapping(W, flow.TrappingRegion.for_lambda(lam), 16)
    assert rep.ok
    assert rep.corner_identity == 0
    assert rep.corner_bound == rep.corner_bound_expected == -1 / (Q(8) ** 4 * lam ** 3)
    assert all(n > 0 for n in rep.points_checked.values())


def test_trapping_tamper_probe_fails_with_witness():
    R = flow.TrappingRegion.for_lambda(-1)
    bad = flow.TrappingRegion(R.lam, R.A, R.s0, R.p0 + Q(1, 100), R.q0)
    rep = flow.verify_trapping(flow.liorsc_W_expected(-1), bad, 16)
    assert not rep.ok
    assert all("point" in v and "condition" in v for v in rep.violations)


def test_backward_orbit_stays_in_region():
    # -W run forward is W run backward; from an interior point it never leaves P_A
    lam = -1
    W = flow.liorsc_W_expected(lam)
    R = flow.TrappingRegion.for_lambda(lam)
    start = [R.s0 / 4, R.q0 / 2, R.p0 / 2]
    assert R.contains(start)
    minus = PolyMap([-c for c in W.components])
    tr = flow.integrate(
        minus,
        [float(v) for v in start],
        flow.SimConfig(t_max=1e7, h_max=1e4),
        stop=lambda t, y: max(abs(y[0]), abs(y[2])) < 1e-3,
    )
    # p decays like (2t)^-1/2 near s = 0, hence the long horizon
    assert tr.stopped
    assert all(R.contains_float(s, slack=1e-9) for s in tr.states)


@pytest.mark.parametrize("beta,A1", [(1, 0), (-1, 3), (Q(2, 3), 0)])
def test_teo1li_third_point_charpoly_exact(beta, A1):
    from nilfield.iterate import _charpoly3

    b = Q(beta)
    cp = _charpoly3(flow.teo1li_singularities(beta, A1, 1).jacobian_at_third)
    # (x + b/5)(x + 4b/5)(x + 2b)
    assert cp == (8 * b ** 3 / 25, 54 * b ** 2 / 25, 3 * b, 1)
