"""Constructors for the vector-field families ``lambda*I + H``.

Field coordinates are ``(x, y, z)`` (indices 0, 1, 2) for the
three-dimensional families and ``(x_1, ..., x_n)`` for ``H_{n,r}``.
Coefficient polynomials ``a(z), b(z), ...`` are one-variable
:class:`MultiPoly` objects; ``f`` in the dependent normal form is a
two-variable polynomial in ``(z, t)`` with ``t`` last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .polycore import (
    ChartPair,
    MultiPoly,
    PolyMap,
    as_fraction,
    conjugate_polynomial,
    nullspace,
    variables,
)


def _in_z(p: MultiPoly, n: int = 3, z: int = 2) -> MultiPoly:
    """Embed a one-variable polynomial as a polynomial in coordinate ``z``."""
    if p.nvars != 1:
        raise ValueError("expected a polynomial in one variable")
    return p.extend(n, [z])


def poly1(coeffs: Sequence) -> MultiPoly:
    """One-variable polynomial from ascending coefficients."""
    return MultiPoly.univariate([as_fraction(c) for c in coeffs])


@dataclass(frozen=True)
class LdNormalParams:
    """Data of the dependent normal form ``lambda*I + (P, Q, 0)``."""

    lam: Fraction
    a: MultiPoly
    b: MultiPoly
    c: MultiPoly
    d: MultiPoly
    f: MultiPoly  # in (z, t)

    def __post_init__(self):
        object.__setattr__(self, "lam", as_fraction(self.lam))
        for name in "abcd":
            if getattr(self, name).nvars != 1:
                raise ValueError(f"{name} must be a polynomial in z only")
        if self.f.nvars != 2:
            raise ValueError("f must be a polynomial in (z, t)")


@dataclass(frozen=True)
class LdShift:
    """Amount moved from ``f(z, 0)`` into ``c`` and ``d``."""

    f0: MultiPoly
    dc: MultiPoly
    dd: MultiPoly

    @property
    def is_trivial(self) -> bool:
        return self.f0.is_zero()


def normalize_ld_params(p: LdNormalParams) -> tuple[LdNormalParams, LdShift]:
    """Push ``f(z, 0)`` into ``c, d`` so that the new ``f`` vanishes at ``t = 0``."""
    z = MultiPoly.var(1, 0)
    f0 = p.f.substitute({0: z, 1: MultiPoly.zero(1)})
    dc, dd = -p.b * f0, p.a * f0
    f_new = p.f - f0.extend(2, [0])
    new = LdNormalParams(p.lam, p.a, p.b, p.c + dc, p.d + dd, f_new)
    return new, LdShift(f0, dc, dd)


def make_ld_normal(p: LdNormalParams) -> PolyMap:
    """``lambda*I + (-b f(a x + b y) + c, a f(a x + b y) + d, 0)``.

    ``f(z, 0)`` is first moved into ``c, d``; the result must fix the origin.
    """
    p, _ = normalize_ld_params(p)
    x, y, z = variables(3)
    a, b, c, d = (_in_z(q) for q in (p.a, p.b, p.c, p.d))
    t = a * x + b * y
    ft = p.f.substitute({0: z, 1: t})
    H = (-b * ft + c, a * ft + d, MultiPoly.zero(3))
    F = PolyMap(v * p.lam + h for v, h in zip((x, y, z), H))
    if any(F.evaluate([0, 0, 0])):
        raise ValueError("field does not vanish at the origin (c(0), d(0) must be 0)")
    return F


def degree_one_params(lam, a, b, c, d, g) -> LdNormalParams:
    """Normal-form data with ``f(z, t) = g(z) t``."""
    f = g.extend(2, [0]) * MultiPoly.var(2, 1)
    return LdNormalParams(as_fraction(lam), a, b, c, d, f)


@dataclass(frozen=True)
class Y2Params:
    lam: Fraction
    k: int = 1
    # A_1(z), ..., A_m(z) for f(t) = z^(m-2) (A_1 t + ... + A_m t^m)
    coeffs: tuple[MultiPoly, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "lam", as_fraction(self.lam))
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.coeffs is not None:
            if len(self.coeffs) < 2:
                raise ValueError("the generalized family needs at least two coefficients")
            object.__setattr__(self, "coeffs", tuple(self.coeffs))


def y2_f(p: Y2Params) -> MultiPoly:
    """The ``f(z, t)`` of the escaping family in normal-form variables."""
    z, t = variables(2)
    if p.coeffs is None:
        return z ** (p.k - 1) * t ** (p.k + 1)
    m = len(p.coeffs)
    acc = MultiPoly.zero(2)
    for j, A in enumerate(p.coeffs, start=1):
        acc = acc + A.extend(2, [0]) * t ** j
    return z ** (m - 2) * acc


def make_y2(p: Y2Params) -> PolyMap:
    """``lambda*I + z^(k-1) (x + y z)^(k+1) (-z, 1, 0)`` (or its generalization)."""
    one, zvar, zero = poly1([1]), poly1([0, 1]), poly1([0])
    return make_ld_normal(LdNormalParams(p.lam, one, zvar, zero, zero, y2_f(p)))


@dataclass(frozen=True)
class HnrParams:
    n: int
    r: int
    a: MultiPoly  # in x_1

    def __post_init__(self):
        if self.r < 2:
            raise ValueError("r must be at least 2")
        if self.n < self.r + 1:
            raise ValueError("n must be at least r + 1")
        if self.a.nvars != 1:
            raise ValueError("a must be a polynomial in x_1 only")
        if self.a.degree() != self.r:
            raise ValueError(f"deg a = {self.a.degree()} but r = {self.r}")


def make_hnr(p: HnrParams) -> PolyMap:
    """The map ``H_{n,r}`` (H only): nilpotent Jacobian of rank ``r`` with independent rows."""
    n, r = p.n, p.r
    xs = variables(n)
    a_x1 = lambda q: q.extend(n, [0])  # noqa: E731
    f = xs[1] - a_x1(p.a)
    derivs = [p.a]
    for _ in range(r):
        derivs.append(derivs[-1].differentiate(0))
    comps = [f]
    for i in range(2, r + 1):
        coeff = Fraction((-1) ** i, math.factorial(i - 1))
        comps.append(xs[i] + a_x1(derivs[i - 1]) * f ** (i - 1) * coeff)
    comps.append(a_x1(derivs[r]) * f ** r * Fraction((-1) ** (r + 1), math.factorial(r)))
    for j in range(r + 2, n + 1):
        comps.append(f ** (j - 1))
    return PolyMap(comps)


def make_fn2(n: int, lam, a=0, b=1) -> PolyMap:
    """``F_{n,2} = lambda*I + H_{n,2}`` with ``a(x_1) = a x_1 + b x_1^2``."""
    H = make_hnr(HnrParams(n, 2, poly1([0, a, b])))
    return PolyMap.scaled_identity(n, as_fraction(lam)) + H


@dataclass(frozen=True)
class LinfParams:
    lam: Fraction
    v1: Fraction
    alpha: Fraction
    b1: Fraction
    g: MultiPoly  # in t
    beta: Fraction = field(init=False)

    def __post_init__(self):
        for name in ("lam", "v1", "alpha", "b1"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        object.__setattr__(self, "beta", self.v1 * self.alpha)
        if self.beta == 0:
            raise ValueError("v1 * alpha must be nonzero")
        if self.g.nvars != 1:
            raise ValueError("g must be a polynomial in t only")
        if self.g.constant_term() != 0:
            raise ValueError("g(0) must be 0")
        if self.g.degree() < 1:
            raise ValueError("deg g must be at least 1")

    def replace(self, **kw) -> "LinfParams":
        vals = dict(lam=self.lam, v1=self.v1, alpha=self.alpha, b1=self.b1, g=self.g)
        vals.update(kw)
        return LinfParams(**vals)


def linf_t(p: LinfParams) -> MultiPoly:
    x, y, _ = variables(3)
    return y + x * p.b1 + x * x * p.beta


def make_linf(p: LinfParams) -> PolyMap:
    """``lambda*(x,y,z) + (0, v1 z, 0) + g(t) (1, -(b1 + 2 v1 alpha x), alpha g(t))``."""
    x, y, z = variables(3)
    gt = p.g.substitute([linf_t(p)])
    return PolyMap(
        (
            x * p.lam + gt,
            y * p.lam + z * p.v1 - (x * (2 * p.beta) + p.b1) * gt,
            z * p.lam + gt * gt * p.alpha,
        )
    )


def linf_reduced_field(p: LinfParams) -> PolyMap:
    """``lambda*(u,v,w) + (g'(v)(lambda v + w), w, v1 alpha u^2)``."""
    u, v, w = variables(3)
    gp = p.g.differentiate(0).substitute([v])
    return PolyMap(
        (
            u * p.lam + gp * (v * p.lam + w),
            v * p.lam + w,
            w * p.lam + u * u * p.beta,
        )
    )


def linf_reduction(p: LinfParams) -> tuple[ChartPair, PolyMap]:
    """Chart ``(lambda x + g(t), t, v1 z + lambda v1 alpha x^2)`` and the transported field.

    The transported field is checked against :func:`linf_reduced_field`.
    """
    if p.lam == 0:
        raise ValueError("the inverse chart divides by lambda")
    x, _, z = variables(3)
    t = linf_t(p)
    gt = p.g.substitute([t])
    forward = PolyMap((x * p.lam + gt, t, z * p.v1 + x * x * (p.lam * p.beta)))
    u, v, w = variables(3)
    xi = (u - p.g.substitute([v])) / p.lam
    inverse = PolyMap(
        (
            xi,
            v - xi * p.b1 - xi * xi * p.beta,
            (w - xi * xi * (p.lam * p.beta)) / p.v1,
        )
    )
    chart = ChartPair(forward, inverse, "continuous")
    Y = conjugate_polynomial(make_linf(p), chart)
    expected = linf_reduced_field(p)
    if Y != expected:
        raise ArithmeticError("transported field differs from the reduced form")
    return chart, Y


def teo1li_field(lam, beta, A1, A2) -> PolyMap:
    """``lambda*(x,y,z) + (g'(y)(lambda y + z), z, beta x^2)`` with ``g = A1 t + A2 t^2/2``."""
    lam, beta, A1, A2 = map(as_fraction, (lam, beta, A1, A2))
    x, y, z = variables(3)
    gp = y * A2 + A1
    return PolyMap((x * lam + gp * (y * lam + z), y * lam + z, z * lam + x * x * beta))


# -- affine elimination for the degree-one dependent family -----------------------

@dataclass(frozen=True)
class AffineElimination:
    chart: ChartPair
    params: LdNormalParams
    m: MultiPoly
    n: MultiPoly
    method: str

    @property
    def eliminated(self) -> bool:
        return self.params.c.is_zero() and self.params.d.is_zero()


def _affine_residual(lam, a, b, g, c, d, m, n):
    """Affine part left after ``T(x,y,z) = (x + m(z), y + n(z), z)``.

    With ``A(w) = lambda*I + g(w) M(w)`` the conjugate ``T o F o T^-1``
    keeps ``A(w)`` and gets the affine part
    ``c_d(w) - A(w) (m, n)(w) + (m, n)(lambda w)``.
    """
    w = poly1([0, 1])
    m_l = m.substitute([w * lam])
    n_l = n.substitute([w * lam])
    M11, M12, M21, M22 = -a * b * g, -b * b * g, a * a * g, a * b * g
    Am = m * lam + M11 * m + M12 * n
    An = n * lam + M21 * m + M22 * n
    return c - Am + m_l, d - An + n_l


def _shift_chart(m: MultiPoly, n: MultiPoly) -> ChartPair:
    x, y, z = variables(3)
    mz, nz = _in_z(m), _in_z(n)
    return ChartPair(PolyMap((x + mz, y + nz, z)), PolyMap((x - mz, y - nz, z)), "discrete")


def _solve_affine_shift(lam, a, b, g, c, d, max_extra: int = 8):
    """Polynomial ``(m, n)`` removing the affine part exactly, or ``None``."""
    base = max(0, int(max(c.degree(), d.degree(), 0)))
    for D in range(base, base + max_extra + 1):
        nunk = 2 * (D + 1)
        # unknown vector: m_0..m_D, n_0..n_D; residual is linear in it.
        zero = poly1([0])
        cols = []
        for j in range(nunk):
            basis = poly1([0] * (j % (D + 1)) + [1])
            m_j, n_j = (basis, zero) if j <= D else (zero, basis)
            rm, rn = _affine_residual(lam, a, b, g, zero, zero, m_j, n_j)
            cols.append((rm, rn))
        r0m, r0n = c, d
        keys = set(r0m.terms) | set(r0n.terms)
        for rm, rn in cols:
            keys |= set(rm.terms) | set(rn.terms)
        keys = sorted(keys)
        rows = []
        for which in (0, 1):
            for k in keys:
                row = [(cm if which == 0 else cn).coefficient(k) for cm, cn in cols]
                rhs = (r0m if which == 0 else r0n).coefficient(k)
                rows.append(row + [rhs])
        # [cols | r0] @ (v, 1) = 0
        ns = nullspace(rows, nunk + 1)
        sol = next((v for v in ns if v[-1]), None)
        if sol is None:
            continue
        sol = [s / sol[-1] for s in sol[:-1]]
        m = poly1(sol[: D + 1])
        n = poly1(sol[D + 1:])
        return m, n
    return None


def eliminate_affine_part(lam, a, b, c, d, g, method: str = "formula") -> AffineElimination:
    """Remove ``c, d`` from the degree-one dependent map by ``(x + m(z), y + n(z), z)``.

    ``method="formula"`` uses the closed form
    ``(m, n) = -(1-lambda)^-2 [(1-lambda) I + g M] (c, d)``, which solves the
    pointwise fixed-point equation; whatever affine part survives the exact
    conjugation is returned in the new parameters.  ``method="exact"`` solves
    the functional equation ``(m,n)(lambda w) = A(w)(m,n)(w) - (c,d)(w)`` over
    polynomials and raises ``ValueError`` when no polynomial solution exists
    (resonant terms).
    """
    lam = as_fraction(lam)
    if lam == 1:
        raise ValueError("lambda = 1 is excluded")
    if method == "formula":
        s = 1 - lam
        M11, M12, M21, M22 = -a * b * g, -b * b * g, a * a * g, a * b * g
        k = -1 / (s * s)
        m = (c * s + M11 * c + M12 * d) * k
        n = (d * s + M21 * c + M22 * d) * k
    elif method == "exact":
        found = _solve_affine_shift(lam, a, b, g, c, d)
        if found is None:
            raise ValueError("no polynomial change removes the affine part (resonance)")
        m, n = found
    else:
        raise ValueError(f"unknown method {method!r}")
    rc, rd = _affine_residual(lam, a, b, g, c, d, m, n)
    chart = _shift_chart(m, n)
    params = degree_one_params(lam, a, b, rc, rd, g)
    F = make_ld_normal(degree_one_params(lam, a, b, c, d, g))
    conj = conjugate_polynomial(F, chart)
    if conj != make_ld_normal(params):
        raise ArithmeticError("conjugated map is not in normal form with the residual affine part")
    return AffineElimination(chart, params, m, n, method)
