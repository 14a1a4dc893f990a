"""Membership tests for ``N(lambda, n)`` and its dependent/independent split.

Linear dependence over the reals is decided over the rationals: a rational
coefficient matrix has a real kernel vector iff it has a rational one, and
the returned kernel is a certificate (``sum(alpha_i p_i) == 0`` exactly).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .families import LdNormalParams, make_ld_normal
from .polycore import (
    ChartPair,
    MultiPoly,
    PolyMap,
    PolyMatrix,
    all_minors,
    as_fraction,
    conjugate_linear,
    jacobian,
    mat_pow,
    nullspace,
    primitive_vector,
    rank,
)

RANK_SAMPLES = 8
RANK_SEED = 20240611


def is_nilpotent(M: PolyMatrix) -> bool:
    """``M**n == 0`` identically, with ``n`` the size of ``M``."""
    if not M.is_square:
        raise ValueError("nilpotency of a non-square matrix")
    return mat_pow(M, M.rows).is_zero()


def linear_dependence(polys: Sequence[MultiPoly]) -> list[Fraction] | None:
    """A primitive integer vector ``alpha`` with ``sum(alpha_i p_i) == 0``, or ``None``."""
    polys = list(polys)
    if not polys:
        raise ValueError("empty list of polynomials")
    if len({p.nvars for p in polys}) != 1:
        raise ValueError("polynomials must share nvars")
    monos = sorted({e for p in polys for e in p.terms})
    rows = [[p.coefficient(e) for p in polys] for e in monos]
    basis = nullspace(rows, len(polys))
    if not basis:
        return None
    return primitive_vector(basis[0])


def row_dependence(M: PolyMatrix) -> list[Fraction] | None:
    """A primitive ``alpha`` with ``alpha^T M == 0``, or ``None``."""
    keys = sorted({(j, e) for row in M.entries for j, p in enumerate(row) for e in p.terms})
    rows = [[M.entries[i][j].coefficient(e) for i in range(M.rows)] for j, e in keys]
    basis = nullspace(rows, M.rows)
    if not basis:
        return None
    return primitive_vector(basis[0])


def _sample_points(nvars: int, count: int, seed: int) -> list[list[Fraction]]:
    rng = random.Random(seed)
    return [
        [Fraction(rng.randint(-97, 97), rng.randint(1, 13)) for _ in range(nvars)]
        for _ in range(count)
    ]


@dataclass(frozen=True)
class RankCertificate:
    rank: int
    nonzero_minor: tuple[tuple[int, ...], tuple[int, ...]] | None
    larger_minors_vanish: bool


def rank_certificate(M: PolyMatrix, samples: int = RANK_SAMPLES, seed: int = RANK_SEED) -> RankCertificate:
    """Rank over the rational-function field with an exact certificate.

    Random rational evaluations give a lower bound ``r``; then every
    ``(r+1)``-minor is expanded symbolically.  If one fails to vanish the
    bound is raised and the check repeats.
    """
    size = min(M.rows, M.cols)
    r = 0
    for pt in _sample_points(M.nvars, samples, seed):
        r = max(r, rank(M.evaluate(pt)))
    while True:
        if r >= size:
            vanish = True
            break
        witness = next(
            ((rows, cols) for rows, cols, d in all_minors(M, r + 1) if not d.is_zero()),
            None,
        )
        if witness is None:
            vanish = True
            break
        r += 1
    nonzero = None
    if r > 0:
        nonzero = next((rows, cols) for rows, cols, d in all_minors(M, r) if not d.is_zero())
    return RankCertificate(r, nonzero, vanish)


def rank_function_field(M: PolyMatrix) -> int:
    return rank_certificate(M).rank


@dataclass(frozen=True)
class ClassificationReport:
    lam: Fraction
    n: int
    is_nilpotent: bool
    in_N: bool
    fixes_origin: bool
    dependence_kernel_components: list[Fraction] | None
    dependence_kernel_rows: list[Fraction] | None
    rank_JH: int
    verdict: str  # "N_ld" | "N_li" | "not_in_N"
    myc_hypothesis: bool
    dmyc_hypothesis: bool

    def to_dict(self) -> dict:
        vec = lambda v: None if v is None else [str(x) for x in v]  # noqa: E731
        return {
            "lambda": str(self.lam),
            "n": self.n,
            "is_nilpotent": self.is_nilpotent,
            "in_N": self.in_N,
            "fixes_origin": self.fixes_origin,
            "dependence_kernel_components": vec(self.dependence_kernel_components),
            "dependence_kernel_rows": vec(self.dependence_kernel_rows),
            "rank_JH": self.rank_JH,
            "verdict": self.verdict,
            "myc_hypothesis": self.myc_hypothesis,
            "dmyc_hypothesis": self.dmyc_hypothesis,
        }


def classify_field(F: PolyMap, lam) -> ClassificationReport:
    lam = as_fraction(lam)
    if not F.is_square:
        raise ValueError("classification needs a square field")
    n = F.nvars
    H = F - PolyMap.scaled_identity(n, lam)
    JH = jacobian(H)
    nil = is_nilpotent(JH)
    fixes = not any(F.evaluate([0] * n))
    comp_kernel = linear_dependence(H.components)
    row_kernel = row_dependence(JH)
    if fixes and (comp_kernel is None) != (row_kernel is None):
        # Gradients are dependent iff the combination is constant, and H(0) = 0.
        raise ArithmeticError("component and row dependence disagree on a field fixing 0")
    if not nil:
        verdict = "not_in_N"
    elif comp_kernel is not None:
        verdict = "N_ld"
    else:
        verdict = "N_li"
    return ClassificationReport(
        lam=lam,
        n=n,
        is_nilpotent=nil,
        in_N=nil,
        fixes_origin=fixes,
        dependence_kernel_components=comp_kernel,
        dependence_kernel_rows=row_kernel,
        rank_JH=rank_function_field(JH),
        verdict=verdict,
        myc_hypothesis=lam < 0,
        dmyc_hypothesis=abs(lam) < 1,
    )


def litri_test(a: MultiPoly, b: MultiPoly, c: MultiPoly, d: MultiPoly, f: MultiPoly) -> bool:
    """Linear triangularizability of the dependent normal form.

    True iff ``f`` does not depend on ``t`` or ``{a, b}`` is linearly dependent.
    ``c`` and ``d`` do not enter the criterion.
    """
    if f.nvars != 2:
        raise ValueError("f must be a polynomial in (z, t)")
    if f.degree(1) <= 0:
        return True
    return linear_dependence([a, b]) is not None


def litri_triangularize(p: LdNormalParams) -> tuple[list[list[Fraction]], PolyMap] | None:
    """An explicit linear change making the normal form triangular, when the criterion holds.

    * ``f`` free of ``t``: ``(x, y, z) -> (z, x, y)``.
    * ``b = delta a``: ``(x, y, z) -> (z, x + delta y, y)``.
    * ``a = 0``: ``(x, y, z) -> (z, y, x)``.
    """
    if not litri_test(p.a, p.b, p.c, p.d, p.f):
        return None
    F = make_ld_normal(p)
    if p.f.degree(1) <= 0:
        T = [[0, 0, 1], [1, 0, 0], [0, 1, 0]]
    elif p.a.is_zero():
        T = [[0, 0, 1], [0, 1, 0], [1, 0, 0]]
    else:
        alpha = linear_dependence([p.a, p.b])
        # alpha_a a + alpha_b b = 0 with a != 0 forces alpha_b != 0.
        delta = -alpha[0] / alpha[1]
        T = [[0, 0, 1], [1, delta, 0], [0, 1, 0]]
    T = [[Fraction(v) for v in row] for row in T]
    G = conjugate_linear(F, T)
    if not G.is_triangular():
        raise ArithmeticError("constructed change did not triangularize the field")
    return T, G


@dataclass(frozen=True)
class ClaReport:
    A_poly: MultiPoly
    B_poly: MultiPoly
    deg_z_uA: float | int
    deg_z_vB: float | int
    condition_holds: bool
    h: MultiPoly | None = None


def cla_condition(u: MultiPoly, v: MultiPoly, h_of_uv: MultiPoly | None = None) -> ClaReport:
    """Degree test ``deg_z(u A) != deg_z(v B)`` for ``H = (u, v, h(u, v))``.

    ``A = v_x u_z - u_x v_z`` and ``B = v_y u_z - u_y v_z``; the zero
    polynomial has degree ``-inf``.
    """
    if u.nvars != 3 or v.nvars != 3:
        raise ValueError("u and v must be polynomials in (x, y, z)")
    ux, uy, uz = (u.differentiate(i) for i in range(3))
    vx, vy, vz = (v.differentiate(i) for i in range(3))
    A = vx * uz - ux * vz
    B = vy * uz - uy * vz
    du = (u * A).degree(2)
    dv = (v * B).degree(2)
    return ClaReport(A, B, du, dv, du != dv, h_of_uv)


def prop21_reduce(F: PolyMap, lam) -> tuple[ChartPair, PolyMap]:
    """Linear change killing one component of ``H`` for a dependent field.

    With kernel ``alpha`` (``sum alpha_i H_i == 0``) and a pivot ``j`` with
    ``alpha_j != 0``, the new coordinates are the remaining ``x_i`` in order
    followed by ``alpha . x``; the last component of the new ``H`` is zero.
    """
    report = classify_field(F, lam)
    if report.verdict != "N_ld":
        raise ValueError(f"field is {report.verdict}, not N_ld")
    alpha = report.dependence_kernel_components
    n = F.nvars
    j = max(i for i in range(n) if alpha[i])
    T = []
    for i in range(n):
        if i != j:
            T.append([Fraction(int(k == i)) for k in range(n)])
    T.append(list(alpha))
    chart = ChartPair.linear(T)
    G = conjugate_linear(F, T)
    last = G.components[-1] - MultiPoly.var(n, n - 1) * report.lam
    if not last.is_zero():
        raise ArithmeticError("reduced field has a nonzero last H-component")
    return chart, G

