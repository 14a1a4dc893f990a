from fractions import Fraction

import pytest
from hypothesis import assume, given, settings

from nilfield.classify import (
    classify_field,
    cla_condition,
    is_nilpotent,
    linear_dependence,
    litri_test,
    litri_triangularize,
    prop21_reduce,
    rank_certificate,
    rank_function_field,
    row_dependence,
)
from nilfield.families import (
    HnrParams,
    LdNormalParams,
    Y2Params,
    degree_one_params,
    make_fn2,
    make_hnr,
    make_ld_normal,
    make_y2,
    poly1,
)
from nilfield.polycore import (
    MultiPoly,
    PolyMap,
    PolyMatrix,
    all_minors,
    conjugate_linear,
    det_exact,
    jacobian,
    variables,
)
from strategies import matrices, small_rationals

Q = Fraction
x, y, z = variables(3)
ONE, ZERO, W = poly1([1]), poly1([0]), poly1([0, 1])


def test_nilpotent_examples():
    assert is_nilpotent(jacobian(make_hnr(HnrParams(3, 2, poly1([0, 1, 1])))))
    assert not is_nilpotent(PolyMatrix.identity(3, 3))
    H = make_y2(Y2Params(Q(-1), 2)) - PolyMap.scaled_identity(3, -1)
    assert is_nilpotent(jacobian(H))


def test_linear_dependence_examples():
    k = linear_dependence([x, y, x + y])
    assert k is not None and sum((p * c for p, c in zip([x, y, x + y], k)), MultiPoly.zero(3)).is_zero()
    assert [abs(v) for v in k] == [1, 1, 1]
    H = make_y2(Y2Params(-1, 1)) - PolyMap.scaled_identity(3, -1)
    assert linear_dependence(H.components) == [0, 0, 1]
    assert linear_dependence(make_hnr(HnrParams(3, 2, poly1([0, 0, 1]))).components) is None


def test_row_dependence_examples():
    H = make_y2(Y2Params(-1, 1)) - PolyMap.scaled_identity(3, -1)
    assert row_dependence(jacobian(H)) == [0, 0, 1]
    assert row_dependence(jacobian(make_hnr(HnrParams(3, 2, poly1([0, 0, 1]))))) is None
    assert row_dependence(PolyMatrix.zeros(3, 3, 3)) == [1, 0, 0]


def test_rank_examples():
    assert rank_function_field(jacobian(make_hnr(HnrParams(3, 2, poly1([0, 0, 1]))))) == 2
    assert rank_function_field(PolyMatrix.zeros(3, 3, 3)) == 0
    assert rank_function_field(jacobian(make_hnr(HnrParams(5, 3, poly1([0, 0, 0, 1]))))) == 3


@pytest.mark.parametrize("n,r", [(3, 2), (4, 3), (5, 3)])
def test_rank_certificate_both_halves(n, r):
    M = jacobian(make_hnr(HnrParams(n, r, poly1([0, 1] + [0] * (r - 2) + [1]))))
    cert = rank_certificate(M)
    assert cert.rank == r and cert.larger_minors_vanish
    assert all(d.is_zero() for _, _, d in all_minors(M, r + 1))
    rows, cols = cert.nonzero_minor
    assert not M.submatrix(rows, cols).det().is_zero()


def test_classify_examples():
    lam_I = classify_field(PolyMap.scaled_identity(3, Q(2)), 2)
    assert lam_I.verdict == "N_ld"
    li = classify_field(make_fn2(3, -1), -1)
    assert li.verdict == "N_li" and li.myc_hypothesis
    y2 = classify_field(make_y2(Y2Params(Q(1, 2), 1)), Q(1, 2))
    assert y2.verdict == "N_ld" and y2.dmyc_hypothesis and not y2.myc_hypothesis


def test_not_nilpotent():
    F = PolyMap([x * Q(-1) + y * y, y * Q(-1) + x, z * Q(-1)])
    assert classify_field(F, -1).verdict == "not_in_N"


def test_litri_examples():
    t = MultiPoly.var(2, 1)
    assert litri_test(ONE, W, ZERO, ZERO, t) is False
    assert litri_test(ONE, poly1([2]), ZERO, ZERO, t) is True
    zf = MultiPoly.var(2, 0) ** 2
    assert litri_test(ONE, W, ZERO, ZERO, zf) is True


@pytest.mark.parametrize(
    "a,b,f_in_t",
    [
        (ONE, poly1([2]), True),
        (ZERO, W, True),
        (ONE, W, False),
        (poly1([0, 1]), poly1([0, 3]), True),
    ],
)
def test_litri_triangularization(a, b, f_in_t):
    zz, t = variables(2)
    f = zz * t ** 2 if f_in_t else zz ** 3
    p = LdNormalParams(Q(1, 2), a, b, ZERO, ZERO, f)
    out = litri_triangularize(p)
    assert out is not None
    T, G = out
    assert G.is_triangular()
    assert G == conjugate_linear(make_ld_normal(p), T)


def test_litri_refuses_nontriangularizable():
    zz, t = variables(2)
    assert litri_triangularize(LdNormalParams(Q(1, 2), ONE, W, ZERO, ZERO, t * t)) is None


def test_cla_condition():
    H = make_hnr(HnrParams(3, 2, poly1([0, 0, 1])))
    rep = cla_condition(H[0], H[1])
    assert rep.deg_z_uA != rep.deg_z_vB or not rep.condition_holds
    flat = cla_condition(x + y, x * y)
    assert flat.A_poly.is_zero() and flat.B_poly.is_zero()
    assert flat.deg_z_uA == flat.deg_z_vB and not flat.condition_holds


def test_prop21_on_reduced_field():
    chart, G = prop21_reduce(make_y2(Y2Params(-1, 1)), -1)
    assert G == make_y2(Y2Params(-1, 1))


def test_prop21_kernel_example():
    # T maps the y2 field to one whose H-components satisfy H1 + H2 - H3 = 0.
    T = [[1, 0, 0], [0, 1, 0], [1, 1, 1]]
    F = conjugate_linear(make_y2(Y2Params(Q(-1), 1)), T)
    rep = classify_field(F, -1)
    assert rep.verdict == "N_ld"
    chart, G = prop21_reduce(F, -1)
    Hlast = G[2] - MultiPoly.var(3, 2) * -1
    assert Hlast.is_zero()


@settings(max_examples=20)
@given(matrices(lo=-2, hi=2))
def test_component_and_row_dependence_agree(T):
    assume(det_exact(T) != 0)
    for F in (make_y2(Y2Params(Q(-1, 2), 1)), make_fn2(3, Q(-1, 2))):
        G = conjugate_linear(F, T)
        H = G - PolyMap.scaled_identity(3, Q(-1, 2))
        assert (linear_dependence(H.components) is None) == (row_dependence(jacobian(H)) is None)
        assert is_nilpotent(jacobian(H))


@given(small_rationals, small_rationals, small_rationals)
def test_kernel_certifies_dependence(a, b, c):
    polys = [x * a + y, x * b + z, x * c + y * b + z]
    k = linear_dependence(polys)
    if k is not None:
        assert sum((p * v for p, v in zip(polys, k)), MultiPoly.zero(3)).is_zero()
