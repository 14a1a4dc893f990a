from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nilfield import iterate as it
from nilfield.families import LinfParams, Y2Params, degree_one_params, make_fn2, make_ld_normal, make_linf, make_y2, poly1
from nilfield.numerics import fd_jacobian
from nilfield.polycore import PolyMap
from strategies import nonzero_rationals, small_rationals

Q = Fraction
HALF = Q(1, 2)
ONE, ZERO, W = poly1([1]), poly1([0]), poly1([0, 1])


@pytest.fixture(scope="module")
def witness():
    return it.period3_exact(HALF, 1, 1, 0, 1)


# -- iteration ------------------------------------------------------------------------

def test_scaled_identity_converges():
    tr = it.iterate_map(PolyMap.scaled_identity(3, HALF), [1.0, 2.0, 3.0], 200)
    assert tr.verdict == it.CONVERGES


def test_dy1_instance_converges():
    F = make_ld_normal(degree_one_params(HALF, ONE, W, ZERO, ZERO, ONE))
    for x0 in it.random_seeds(5, 3, 10.0, 7):
        tr = it.iterate_map(F, x0, 10_000)
        assert tr.verdict == it.CONVERGES
        assert tr.norms()[-1] < 1e-8


def test_exact_mode_degrades_to_float():
    F = make_ld_normal(degree_one_params(HALF, ONE, W, ZERO, ZERO, ONE))
    cfg = it.IterConfig(max_denominator_bits=64)
    tr = it.iterate_map(F, [Q(1, 3), Q(2, 7), Q(5)], 200, mode="exact", cfg=cfg)
    assert tr.degraded_to_float and tr.degraded_at is not None
    assert isinstance(tr.final_state[0], float)


def test_iterate_validation():
    with pytest.raises(ValueError):
        it.iterate_map(PolyMap.identity(2), [0, 0], 3, mode="interval")
    with pytest.raises(ValueError):
        it.IterConfig(converge_radius=2, escape_radius=1)


def test_y2_discrete_orbit_exact():
    orb = it.y2_discrete_orbit(HALF, 1, 1, 64)
    assert orb.verified and orb.u0 == Q(-21, 8)
    assert orb.points[0] == [Q(-147, 32), Q(63, 32), Q(1)]


def test_y2_discrete_orbit_escapes_under_iteration():
    F = make_y2(Y2Params(HALF, 1))
    tr = it.iterate_map(F, it.y2_discrete_orbit(HALF, 1, 1, 0).points[0], 200, mode="exact")
    assert tr.verdict == it.ESCAPES


def test_y2_discrete_irrational_root():
    with pytest.raises(ValueError):
        it.y2_discrete_orbit(HALF, 2, 1, 4)


# -- periodic points --------------------------------------------------------------------

def test_period3_witness_values(witness):
    assert witness.point == [Q(231, 8), Q(-52381, 64), Q(53851, 128)]
    assert witness.charpoly[0] == -HALF ** 9 == Q(-1, 512)
    assert witness.charpoly[3] == 1
    assert witness.p_at_1 == Q(-1029, 512) == it.p_at_1_identity(HALF)
    assert witness.D == (0, 0, 0)


def test_charpoly_matches_closed_form(witness):
    check = it.charpoly_df3(witness)
    assert check.matches and check.p_at_1_consistent


@pytest.mark.parametrize("A,beta", [(1, 1), (2, 3), (Q(-1, 2), 5)])
def test_period3_at_lambda_zero(A, beta):
    w = it.period3_exact(0, A, beta, 0, 1)
    assert w.x0 == 1 / (Q(A) * beta)


@settings(max_examples=25)
@given(
    st.sampled_from([Q(1, 2), Q(-1, 2), Q(1, 4), Q(-2, 3), Q(1, 5)]),
    nonzero_rationals,
    nonzero_rationals,
    small_rationals,
    nonzero_rationals,
)
def test_period3_family(lam, A, beta, b1, v1):
    w = it.period3_exact(lam, A, beta, b1, v1)
    F = w.field()
    assert F.evaluate(F.evaluate(F.evaluate(w.point))) == w.point
    assert F.evaluate(w.point) != w.point
    assert w.charpoly[0] == -lam ** 9
    assert w.p_at_1 == it.p_at_1_identity(lam)


def test_period3_validation():
    with pytest.raises(ValueError):
        it.period3_exact(1, 1, 1, 0, 1)
    with pytest.raises(ValueError):
        it.period3_exact(HALF, 0, 1, 0, 1)


def test_find_periodic_recovers_witness(witness):
    F = witness.field()
    seed = np.array([float(v) for v in witness.point]) * (1 + 1e-7)
    found = it.find_periodic(F, 3, [seed], evaluator=it.LinfEvaluator(witness.params))
    assert len(found) == 1
    orb = found[0]
    assert orb.minimal and orb.residual < 1e-10
    assert any(np.allclose(p, [float(v) for v in witness.point], rtol=1e-12) for p in orb.points)
    assert all(abs(m - 1) > 1e-6 for m in orb.multiplier_eigen.eigenvalues)


def test_witness_orbit_is_exact(witness):
    orb = it.witness_orbit(witness)
    assert orb.exact_zero and orb.residual == 0.0 and orb.minimal


def test_fixed_points_are_the_origin():
    F = make_linf(LinfParams(HALF, 1, 1, 0, poly1([0, 1])))
    found = it.find_periodic(F, 1, it.random_seeds(30, 3, 5.0, 3))
    assert len(found) == 1
    assert np.max(np.abs(found[0].points[0])) < 1e-10
    assert found[0].minimal


def test_period2_search_finds_only_origin():
    p = LinfParams(HALF, 1, 1, 0, poly1([0, 1]))
    found = it.find_periodic(make_linf(p), 2, it.random_seeds(60, 3, 20.0, 11), evaluator=it.LinfEvaluator(p))
    assert len(found) == 1
    assert np.max(np.abs(found[0].points[0])) < 1e-8
    assert not found[0].minimal


@settings(max_examples=8)
@given(
    st.sampled_from([Q(1, 2), Q(-1, 2), Q(1, 3)]),
    nonzero_rationals,
    nonzero_rationals,
    small_rationals,
)
def test_linf_fixed_point_lemma(lam, v1, alpha, b1):
    # any g with g(0) = 0: the origin is the only fixed point
    p = LinfParams(lam, v1, alpha, b1, poly1([0, 1, Q(1, 3)]))
    found = it.find_periodic(make_linf(p), 1, it.random_seeds(12, 3, 3.0, 5), evaluator=it.LinfEvaluator(p))
    for orb in found:
        assert np.max(np.abs(orb.points[0])) < 1e-8


def test_period2_conditions_vanish_at_origin():
    p = LinfParams(HALF, 1, 1, 0, poly1([0, 1]))
    assert it.period2_conditions(p, [0, 0, 0]) == (0, 0, 0)


@given(
    st.sampled_from([Q(1, 2), Q(-1, 2), Q(1, 3)]),
    nonzero_rationals,
    nonzero_rationals,
    small_rationals,
    nonzero_rationals,
)
def test_period2_reduced_identities(lam, v1, alpha, b1, x0):
    p = LinfParams(lam, v1, alpha, b1, poly1([0, 1]))
    pt = it.period2_reduced_point(p, x0)
    C1, C2, C3 = it.period2_conditions(p, pt)
    assert C1 == 0
    assert C2 == (lam - 1) ** 3 * (1 + lam) * x0 / v1
    assert C3 == (lam - 1) ** 3 * x0


# -- continuation -----------------------------------------------------------------------

def test_continuation_without_higher_terms_keeps_point(witness):
    res = it.continuation(witness, [])
    assert res.scale == 1
    assert np.allclose(res.orbit.points[0], [float(v) for v in witness.point], rtol=1e-12)


def test_continuation_quadratic(witness):
    res = it.continuation(witness, [Q(1, 100)])
    assert res.orbit.residual < 1e-10 and res.orbit.minimal
    assert res.path[-1] == 1.0


def test_continuation_autoscale_cubic(witness):
    res = it.continuation(witness, [0, 1])
    assert res.scale < 1
    assert res.orbit.residual < 1e-10 and res.orbit.minimal


def test_auto_scale_bound():
    a = it.auto_scale([5, 3])
    assert 5 * a <= Q(1, 10) and 3 * a ** 2 <= Q(1, 10)
    assert it.auto_scale([Q(1, 100)]) == 1


def test_ramp_exponent():
    assert it.ramp_exponent(0.01, 32) == 1
    assert it.ramp_exponent(100.0, 32) > 1


@pytest.mark.parametrize("a", [Q(1, 2), Q(1, 4)])
def test_scaling_conjugation_keeps_multipliers(a):
    # x -> x / a turns (alpha, g) into (alpha a, a^-1 g(a t)); the multipliers do not move
    w = it.period3_exact(HALF, 1, 1, 0, 1)
    ws = it.period3_exact(HALF, 1, a, 0, 1)
    e1 = np.array(it.witness_orbit(w).multiplier_eigen.eigenvalues)
    e2 = np.array(it.witness_orbit(ws).multiplier_eigen.eigenvalues)
    assert np.max(np.abs(e1 - e2) / (1 + np.abs(e1))) < 1e-9


# -- lift and chain rule ----------------------------------------------------------------

@pytest.mark.parametrize("n", [4, 5])
def test_fn2_lift_is_exact_cycle(n):
    pt = it.fn2_period3_point(n, HALF)
    F = make_fn2(n, HALF)
    assert F.evaluate(F.evaluate(F.evaluate(pt))) == pt


def test_chain_rule_exact_matches_float(witness):
    F = witness.field()
    exact = np.array(it.exact_chain_rule_jacobian(F, 3, witness.point), dtype=float)
    approx = it.chain_rule_jacobian(F, 3, [float(v) for v in witness.point])
    assert np.max(np.abs(exact - approx) / (1 + np.abs(exact))) < 1e-9


@settings(max_examples=20)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_chain_rule_matches_fd(pt):
    F = make_fn2(3, HALF)
    f = F.compiled()
    Jc = it.chain_rule_jacobian(F, 3, pt)
    Jfd = fd_jacobian(lambda y: f(f(f(y))), pt, 1e-6)
    assert np.max(np.abs(Jc - Jfd)) / (1 + np.max(np.abs(Jc))) < 1e-6


def test_polish_history_decays_quadratically(witness):
    import mpmath

    hist: list = []
    x = np.array([float(v) for v in witness.point]) * (1 + 1e-6)
    assert it.polish_cycle(witness.field(), 3, x, iters=10, history=hist) is not None
    consts = [hist[i + 1] / hist[i] ** 2 for i in range(len(hist) - 1) if hist[i] < 1e-4 and hist[i + 1] > mpmath.mpf(10) ** -40]
    assert consts and max(consts) <= 1e4


# -- cocycle ----------------------------------------------------------------------------

def test_cocycle_dy1_instance():
    rep = it.cocycle_contraction(HALF, ONE, W, ONE)
    assert rep.certifies
    assert rep.N == 5 and rep.N_inequality == 5
    assert rep.norm_at_zero < 1


def test_cocycle_without_nonlinearity():
    # B(0) = lam^N I has norm 2 lam^N, below 1 from N = 2 on
    rep = it.cocycle_contraction(HALF, ONE, W, ZERO)
    assert rep.N == 2 and rep.norm_at_zero == 0.5 and rep.certifies


def test_cocycle_validation():
    with pytest.raises(ValueError):
        it.cocycle_contraction(Q(-1, 2), ONE, W, ONE)
