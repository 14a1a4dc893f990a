from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from nilfield.families import HnrParams, Y2Params, make_fn2, make_hnr, make_y2, poly1
from nilfield.flow import liorsc_phi, liorsc_Y
from nilfield.numerics import fd_jacobian
from nilfield.polycore import (
    ChartPair,
    MultiPoly,
    PolyMap,
    PolyMatrix,
    compose_map,
    conjugate_linear,
    conjugate_polynomial,
    det_exact,
    jacobian,
    mat_inverse,
    mat_pow,
    nullspace,
    poly_arith,
    rank,
    rref,
    variables,
)
from strategies import maps, matrices, points, polys, small_rationals

Q = Fraction
x, y, z = variables(3)


# -- oracles ------------------------------------------------------------------------------

def test_cancellation():
    assert (x + y) + (x - y) == x * 2


def test_binomial_square():
    p = x + y * z
    assert p * p == x ** 2 + x * y * z * 2 + y ** 2 * z ** 2
    assert (p * p).evaluate([1, 1, 1]) == 4


def test_poly_arith_ops():
    assert poly_arith(x, y, "sub") == x - y
    with pytest.raises(ValueError):
        poly_arith(x, y, "div")


def test_derivatives():
    assert (x * x * y).differentiate(0) == x * y * 2
    assert MultiPoly.constant(3, 5).differentiate(2).is_zero()


def test_li_factor_derivative():
    a, b = Q(3, 2), Q(-2)
    f = y - x * a - x * x * b
    assert f.differentiate(0) == -(x * (2 * b) + a)


def test_x0_numerator_at_half():
    lam = MultiPoly.var(1, 0)
    num = (1 + lam + lam ** 2) * (1 + lam ** 2 * 4 + lam ** 4)
    assert num.evaluate([Q(1, 2)]) == Q(231, 64)


def test_evaluate_at_zero_is_constant_term():
    p = x * y + z * 3 + 7
    assert p.evaluate([0, 0, 0]) == 7 == p.constant_term()


def test_float_mode_matches_exact():
    p = x ** 3 * Q(1, 3) - y * z + Q(5, 7)
    pt = [Q(1, 2), Q(-3, 4), Q(2)]
    assert p.evaluate(pt, mode="float") == pytest.approx(float(p.evaluate(pt)), rel=1e-15)
    with pytest.raises(ValueError):
        p.evaluate(pt, mode="interval")


def test_substitution_examples():
    u, v = variables(2)
    assert (MultiPoly.var(2, 0) + MultiPoly.var(2, 1)).substitute([u, v]) == u + v
    t = MultiPoly.var(1, 0)
    assert (t * t).substitute([t + 1]) == t * t + t * 2 + 1


def test_identity_jacobian():
    assert jacobian(PolyMap.identity(3)) == PolyMatrix.identity(3, 3)
    assert mat_pow(PolyMatrix.identity(3, 3), 5) == PolyMatrix.identity(3, 3)


@pytest.mark.parametrize("n", [3, 4])
def test_li_jacobian_nilpotent(n):
    H = make_hnr(HnrParams(n, 2, poly1([0, 0, 1])))
    JH = jacobian(H)
    assert mat_pow(JH, n).is_zero()
    assert not mat_pow(JH, n - 2).is_zero()


def test_compose_examples():
    F = PolyMap([x * y, z, x + 1])
    assert compose_map(F, PolyMap.identity(3)) == F
    L = PolyMap.scaled_identity(3, Q(1, 3))
    assert compose_map(L, L) == PolyMap.scaled_identity(3, Q(1, 9))


def test_conjugate_by_identity():
    F = make_y2(Y2Params(-1, 1))
    I3 = [[Q(int(i == j)) for j in range(3)] for i in range(3)]
    assert conjugate_linear(F, I3) == F
    assert conjugate_polynomial(F, ChartPair.identity(3)) == F


def test_singular_conjugation_rejected():
    with pytest.raises(ValueError):
        conjugate_linear(PolyMap.identity(2), [[1, 2], [2, 4]])


def test_chart_must_round_trip():
    with pytest.raises(ValueError):
        ChartPair(PolyMap([x + y * y, y, z]), PolyMap([x, y, z]))


@pytest.mark.parametrize("lam", [Q(-1), Q(-1, 2), Q(1, 3)])
@pytest.mark.parametrize("a,b", [(0, 1), (2, 3), (Q(1, 2), -1)])
def test_liorsc_pushforward(lam, a, b):
    assert conjugate_polynomial(make_fn2(3, lam, a, b), liorsc_phi(lam, a, b)) == liorsc_Y(lam)


@pytest.mark.parametrize("lam,k", [(Q(-1), 1), (Q(-1, 2), 1), (Q(-1), 2), (Q(1, 3), 3)])
def test_camco_chart_identity(lam, k):
    # T(x,y,z) = (z(x+yz), lam y z^2, z): DT . F equals the planar-plus-linear field at T.
    F = make_y2(Y2Params(lam, k))
    T = PolyMap([z * (x + y * z), y * z * z * lam, z])
    u, v, w = T.components
    expected = [u * (2 * lam) + v, v * (3 * lam) + u ** (k + 1) * lam, w * lam]
    DT = jacobian(T)
    pushed = [sum((DT[i, j] * F[j] for j in range(3)), MultiPoly.zero(3)) for i in range(3)]
    assert pushed == expected


def test_camco_discrete_identity():
    lam, k = Q(1, 2), 1
    F = make_y2(Y2Params(lam, k))
    T = PolyMap([z * (x + y * z), y * z * z * lam, z])
    u, v, w = T.components
    lhs = compose_map(T, F)
    rhs = [
        (u * lam + (v + u ** (k + 1)) * (lam - 1)) * lam,
        (v + u ** (k + 1)) * lam ** 3,
        w * lam,
    ]
    assert list(lhs.components) == rhs


def test_exact_linear_algebra():
    R, piv = rref([[1, 2, 3], [2, 4, 6], [1, 0, 1]])
    assert piv == [0, 1] and rank([[1, 2, 3], [2, 4, 6], [1, 0, 1]]) == 2
    basis = nullspace([[1, 1, -1]], 3)
    assert len(basis) == 2 and all(k[0] + k[1] - k[2] == 0 for k in basis)
    assert det_exact([[2, 1], [7, 4]]) == 1
    assert mat_inverse([[2, 1], [7, 4]]) == [[4, -1], [-7, 2]]


def test_serialization_is_lexicographic():
    p = z + x * y + x ** 2
    assert [e for e, _ in p.sorted_terms()] == sorted(p.terms)


# -- properties -------------------------------------------------------------------------------

@given(polys(), polys(), polys())
def test_ring_axioms(p, q, r):
    assert (p + q) + r == p + (q + r)
    assert p * (q + r) == p * q + p * r
    assert p * q == q * p
    assert (p * q) * r == p * (q * r)
    assert p - p == MultiPoly.zero(3)


@given(polys(), polys(), st.integers(0, 2))
def test_leibniz(p, q, i):
    assert (p * q).differentiate(i) == p * q.differentiate(i) + q * p.differentiate(i)


@given(polys(), st.lists(polys(3, 3, 2), min_size=3, max_size=3), points())
def test_substitution_evaluation(p, sigma, pt):
    assert p.substitute(sigma).evaluate(pt) == p.evaluate([s.evaluate(pt) for s in sigma])


@given(maps(), matrices())
def test_linear_conjugation_round_trip(F, T):
    assume(det_exact(T) != 0)
    assert conjugate_linear(conjugate_linear(F, T), mat_inverse(T)) == F


@settings(max_examples=15)
@given(matrices(lo=-2, hi=2), st.booleans())
def test_nilpotency_preserved_by_conjugation(T, use_li):
    assume(det_exact(T) != 0)
    lam = Q(-1, 2)
    F = make_fn2(3, lam) if use_li else make_y2(Y2Params(lam, 1))
    G = conjugate_linear(F, T)
    H = G - PolyMap.scaled_identity(3, lam)
    assert mat_pow(jacobian(H), 3).is_zero()


@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_symbolic_jacobian_matches_fd(pt):
    H = make_hnr(HnrParams(3, 2, poly1([0, 1, 1])))
    exact = np.array(jacobian(H).evaluate(pt, mode="float"), dtype=float)
    approx = fd_jacobian(H.compiled(), pt, 1e-5)
    assert np.max(np.abs(exact - approx)) < 1e-6


@given(polys(), small_rationals)
def test_scalar_and_constant_coercion(p, c):
    assert p * c == p * MultiPoly.constant(3, c)
    assert (p + c).constant_term() == p.constant_term() + c
