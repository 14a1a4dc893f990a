"""Continuous dynamics of polynomial fields.

* :func:`integrate` -- Dormand-Prince 5(4) with orbit verdicts
  (converges to the origin / escapes / undecided / step failure).
* :class:`ExpPolyOrbit` and :func:`residual_expporbit` -- closed-form
  orbits that are sums of exponentials, checked against a field.
* :class:`ChartSpec` and :func:`chart_transform` -- pushforward through
  monomial rational charts followed by a clearing factor.
* :class:`TrappingRegion` and :func:`verify_trapping` -- exact rational
  grid certification of the outward-pointing conditions on the faces of
  the box-like region used for escaping orbits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np

from .numerics import EigenReport, eigenvalues
from .polycore import ChartPair, MultiPoly, PolyMap, as_fraction, jacobian, variables

CONVERGES = "ConvergesToOrigin"
ESCAPES = "Escapes"
UNDECIDED = "Undecided"
STEP_FAILURE = "StepFailure"


@dataclass(frozen=True)
class SimConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    t_max: float = 200.0
    escape_radius: float = 1e6
    converge_radius: float = 1e-9
    converge_dwell: int = 50
    h_max: float = 1.0
    max_steps: int = 1_000_000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "t_max", "escape_radius", "converge_radius", "h_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.converge_dwell < 1:
            raise ValueError("converge_dwell must be at least 1")
        if self.converge_radius >= self.escape_radius:
            raise ValueError("converge_radius must be below escape_radius")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class OrbitTrace:
    times: list[float]
    states: list[np.ndarray]
    verdict: str
    steps_accepted: int
    steps_rejected: int
    config: SimConfig
    blowup: bool = False
    stopped: bool = False

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def norms(self) -> np.ndarray:
        return np.array([np.max(np.abs(s)) for s in self.states])


# Dormand-Prince 5(4) tableau.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = np.array(_A[6] + (0.0,))
_B4 = np.array((5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40))
_E = _B5 - _B4


def _vector_field(F) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(F, PolyMap):
        if not F.is_square:
            raise ValueError("the field must be square")
        f = F.compiled()
        return lambda y: np.array(f(y), dtype=float)
    return lambda y: np.asarray(F(y), dtype=float)


def _sup(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if v.size else 0.0


def integrate(
    F,
    x0: Sequence[float],
    cfg: SimConfig | None = None,
    stop: Callable[[float, np.ndarray], bool] | None = None,
) -> OrbitTrace:
    """Integrate ``x' = F(x)`` until a verdict is reached or ``t_max`` passes.

    A step is accepted when ``||err||_inf <= abs_tol + rel_tol * ||x||_inf``.
    ``stop(t, x)`` may end the run early; the verdict is then ``Undecided``
    with ``stopped=True``.
    """
    cfg = cfg or SimConfig()
    f = _vector_field(F)
    y = np.array(x0, dtype=float)
    t = 0.0
    times, states = [t], [y.copy()]
    acc = rej = 0
    dwell = 0
    k1 = f(y)

    def tol_of(*vs):
        return cfg.abs_tol + cfg.rel_tol * max(_sup(v) for v in vs)

    # Initial step from the usual first-derivative heuristic.
    d0, d1 = _sup(y), _sup(k1)
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h = min(h, cfg.h_max, cfg.t_max)

    verdict = UNDECIDED
    blowup = stopped = False
    if _sup(y) >= cfg.escape_radius:
        verdict = ESCAPES
    while verdict == UNDECIDED and t < cfg.t_max and acc < cfg.max_steps:
        h = min(h, cfg.t_max - t)
        h_min = 16 * np.finfo(float).eps * max(1.0, abs(t))
        if h < h_min:
            growing = len(states) > 5 and _sup(states[-1]) > 10 * _sup(states[-6])
            verdict = ESCAPES if growing or _sup(y) > 1.0 else STEP_FAILURE
            blowup = verdict == ESCAPES
            break
        ks = [k1]
        ok = True
        for i in range(1, 7):
            yi = y + h * sum(a * k for a, k in zip(_A[i], ks))
            ki = f(yi)
            if not np.all(np.isfinite(ki)):
                ok = False
                break
            ks.append(ki)
        if not ok:
            rej += 1
            h *= 0.1
            continue
        y_new = y + h * sum(b * k for b, k in zip(_B5, ks) if b)
        err_vec = h * sum(e * k for e, k in zip(_E, ks) if e)
        err = _sup(err_vec) / tol_of(y, y_new)
        if err <= 1.0 and np.all(np.isfinite(y_new)):
            t += h
            y = y_new
            k1 = ks[6]
            acc += 1
            times.append(t)
            states.append(y.copy())
            ny = _sup(y)
            if ny >= cfg.escape_radius:
                verdict = ESCAPES
            elif ny < cfg.converge_radius:
                dwell += 1
                if dwell >= cfg.converge_dwell:
                    verdict = CONVERGES
            else:
                dwell = 0
            if stop is not None and verdict == UNDECIDED and stop(t, y):
                stopped = True
                break
            factor = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = min(h * factor, cfg.h_max)
        else:
            rej += 1
            h *= max(0.1, 0.9 * err ** -0.2) if np.isfinite(err) else 0.1
    return OrbitTrace(times, states, verdict, acc, rej, cfg, blowup, stopped)


def classify_orbit(trace: OrbitTrace) -> str:
    """Recompute the verdict of a trace from its states and config."""
    cfg = trace.config
    norms = trace.norms()
    if norms[-1] >= cfg.escape_radius or trace.blowup:
        return ESCAPES
    tail = norms[-cfg.converge_dwell:]
    if len(norms) > cfg.converge_dwell and np.all(tail < cfg.converge_radius):
        return CONVERGES
    if trace.verdict == STEP_FAILURE:
        return STEP_FAILURE
    return UNDECIDED


# -- closed-form orbits ----------------------------------------------------------------

@dataclass(frozen=True)
class ExpPolyOrbit:
    """Coordinate ``i`` is ``sum(c * exp(mu * t))`` over ``terms[i]``."""

    terms: tuple[tuple[tuple[Fraction, Fraction], ...], ...]
    exact: bool = True

    @property
    def dim(self) -> int:
        return len(self.terms)

    def value(self, t, exp=math.exp, convert=float) -> list:
        return [sum((convert(c) * exp(convert(mu) * t) for c, mu in comp), convert(0)) for comp in self.terms]

    def derivative(self, t, exp=math.exp, convert=float) -> list:
        return [
            sum((convert(c * mu) * exp(convert(mu) * t) for c, mu in comp), convert(0))
            for comp in self.terms
        ]

    def scaled(self, i: int, factor) -> "ExpPolyOrbit":
        """Copy with the coefficients of coordinate ``i`` multiplied by ``factor``."""
        factor = as_fraction(factor)
        terms = list(self.terms)
        terms[i] = tuple((c * factor, mu) for c, mu in terms[i])
        return ExpPolyOrbit(tuple(terms), self.exact)


def residual_expporbit(F: PolyMap, orbit: ExpPolyOrbit, times: Sequence[float], dps: int = 40) -> float:
    """``max_t ||gamma'(t) - F(gamma(t))||_inf`` evaluated in ``dps``-digit arithmetic."""
    if orbit.dim != len(F):
        raise ValueError("orbit and field dimensions differ")

    def mpf(q: Fraction):
        return mpmath.mpf(q.numerator) / q.denominator

    worst = mpmath.mpf(0)
    with mpmath.workdps(dps):
        for t in times:
            tt = mpmath.mpf(t)
            g = orbit.value(tt, exp=mpmath.exp, convert=mpf)
            dg = orbit.derivative(tt, exp=mpmath.exp, convert=mpf)
            Fg = [p.evaluate_with(g, mpf) for p in F.components]
            worst = max(worst, max(abs(a - b) for a, b in zip(dg, Fg)))
    return float(worst)


def _int_root(n: int, k: int) -> int | None:
    if n < 0:
        return None
    if n < 2:
        return n
    r = int(round(n ** (1.0 / k))) if n.bit_length() < 1000 else 1 << (n.bit_length() // k)
    # Newton refinement on integers
    while True:
        nr = ((k - 1) * r + n // r ** (k - 1)) // k
        if nr >= r:
            break
        r = nr
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** k == n:
            return cand
    return None


def rational_root(q: Fraction, k: int) -> Fraction | None:
    """Exact real ``k``-th root of ``q`` when it is rational."""
    q = as_fraction(q)
    if q < 0:
        if k % 2 == 0:
            return None
        r = rational_root(-q, k)
        return None if r is None else -r
    num, den = _int_root(q.numerator, k), _int_root(q.denominator, k)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def y2_escape_orbit(lam, k: int, z0) -> ExpPolyOrbit:
    """Escaping orbit of the dependent family built on the saddle of its planar reduction.

    ``gamma(t) = (3 r / z0 e^{-lam t}, -2 r / z0^2 e^{-2 lam t}, z0 e^{lam t})`` with
    ``r = (6 lam)^(1/k)``.  When ``r`` is irrational the coefficients are
    rounded from floats and ``exact`` is False.
    """
    lam, z0 = as_fraction(lam), as_fraction(z0)
    if not (lam < 0 and k % 2 == 1):
        raise ValueError("needs lambda < 0 and k odd")
    if z0 == 0:
        raise ValueError("z0 must be nonzero")
    r = rational_root(6 * lam, k)
    exact = r is not None
    if r is None:
        r = Fraction(-((-6 * float(lam)) ** (1.0 / k)))
    terms = (
        ((3 * r / z0, -lam),),
        ((-2 * r / (z0 * z0), -2 * lam),),
        ((z0, lam),),
    )
    return ExpPolyOrbit(terms, exact)


# -- rational charts -----------------------------------------------------------------

Rational = tuple[MultiPoly, MultiPoly]


def _laurent(expr: Rational) -> MultiPoly:
    num, den = expr
    if not den.is_monomial():
        raise ValueError("chart denominators must be monomials")
    return num * den ** -1


@dataclass(frozen=True)
class ChartSpec:
    """Monomial rational chart ``new = forward(old)`` with inverse and clearing factor.

    The transported field is multiplied by ``factor`` (a polynomial or a
    Laurent monomial in the new variables).  Where ``factor > 0`` orbits keep
    their orientation; where it is negative they are reversed.
    """

    forward: tuple[Rational, ...]
    inverse: tuple[Rational, ...]
    factor: MultiPoly
    orientation: str = ""
    name: str = ""

    def forward_laurent(self) -> list[MultiPoly]:
        return [_laurent(e) for e in self.forward]

    def inverse_laurent(self) -> list[MultiPoly]:
        return [_laurent(e) for e in self.inverse]


def _rat(num: MultiPoly, den: MultiPoly | None = None) -> Rational:
    return (num, den if den is not None else MultiPoly.constant(num.nvars, 1))


def identity_chart(n: int) -> ChartSpec:
    xs = variables(n)
    return ChartSpec(tuple(_rat(x) for x in xs), tuple(_rat(x) for x in xs), MultiPoly.constant(n, 1), "", "identity")


def chart_transform(F: PolyMap, chart: ChartSpec) -> PolyMap:
    """Pushforward of ``F`` through ``chart`` times the clearing factor, exactly.

    Raises ``ValueError`` if the chart does not round-trip or the cleared
    field still has negative exponents.
    """
    fwd = chart.forward_laurent()
    inv = chart.inverse_laurent()
    n = F.nvars
    if len(fwd) != n or len(inv) != n:
        raise ValueError("chart dimension does not match the field")
    ident = variables(n)
    if [p.substitute(inv) for p in fwd] != ident:
        raise ValueError("chart forward o inverse is not the identity")
    comps = []
    Fy = [p.substitute(inv) for p in F.components]
    for p in fwd:
        acc = MultiPoly.zero(n)
        for j in range(n):
            dp = p.differentiate(j)
            if dp.is_zero() or Fy[j].is_zero():
                continue
            acc = acc + dp.substitute(inv) * Fy[j]
        comps.append(acc * chart.factor)
    if not all(c.is_polynomial for c in comps):
        raise ValueError("cleared field is not polynomial (chart and factor do not match)")
    return PolyMap(comps)


def liorsc_chart() -> ChartSpec:
    """``(s, q, p) = (1, u, w) / v`` with clearing factor ``s``."""
    u, v, w = variables(3)
    s, q, p = variables(3)
    return ChartSpec(
        (_rat(MultiPoly.constant(3, 1), v), _rat(u, v), _rat(w, v)),
        (_rat(q, s), _rat(MultiPoly.constant(3, 1), s), _rat(p, s)),
        s,
        "orbits kept for s > 0, reversed for s < 0",
        "projective v-chart",
    )


def teo1li_projective_chart() -> ChartSpec:
    """``(u, v, w) = (x, y, 1) / z`` with clearing factor ``w``."""
    x, y, z = variables(3)
    u, v, w = variables(3)
    one = MultiPoly.constant(3, 1)
    return ChartSpec(
        (_rat(x, z), _rat(y, z), _rat(one, z)),
        (_rat(u, w), _rat(v, w), _rat(one, w)),
        w,
        "orbits kept for w > 0, reversed for w < 0",
        "projective z-chart",
    )


def teo1li_blowup_chart() -> ChartSpec:
    """``(s, q, p) = (u, v / u^3, w / u^5)``; the field is divided by ``s^2``."""
    u, v, w = variables(3)
    s, q, p = variables(3)
    return ChartSpec(
        (_rat(u), _rat(v, u ** 3), _rat(w, u ** 5)),
        (_rat(s), _rat(q * s ** 3), _rat(p * s ** 5)),
        s ** -2,
        "division by s^2 keeps orientation",
        "weighted blow-up",
    )


def liorsc_Y(lam) -> PolyMap:
    """``(w, lam v - w^2, 2 lam w + v - lam^2 u)``."""
    lam = as_fraction(lam)
    u, v, w = variables(3)
    return PolyMap((w, v * lam - w * w, w * (2 * lam) + v - u * lam * lam))


def liorsc_phi(lam, a=0, b=1) -> ChartPair:
    """``phi(x) = b (x1, x3 - lam b x1^2, lam x1 + x2 - a x1 - b x1^2)``; carries ``F_{3,2}`` to :func:`liorsc_Y`."""
    lam, a, b = map(as_fraction, (lam, a, b))
    if b == 0:
        raise ValueError("b must be nonzero")
    x1, x2, x3 = variables(3)
    fwd = PolyMap((x1 * b, (x3 - x1 * x1 * (lam * b)) * b, (x1 * (lam - a) + x2 - x1 * x1 * b) * b))
    u, v, w = variables(3)
    y1 = u * (1 / b)
    inv = PolyMap((y1, w * (1 / b) - y1 * (lam - a) + y1 * y1 * b, v * (1 / b) + y1 * y1 * (lam * b)))
    return ChartPair(fwd, inv)


def liorsc_W_expected(lam) -> PolyMap:
    lam = as_fraction(lam)
    s, q, p = variables(3)
    return PolyMap(
        (
            -s * (s * lam - p * p),
            s * (p - q * lam) + q * p * p,
            s * (p * lam + 1 - q * lam * lam) + p ** 3,
        )
    )


def teo1li_Z_expected(lam, beta, A1, A2) -> PolyMap:
    lam, beta, A1, A2 = map(as_fraction, (lam, beta, A1, A2))
    u, v, w = variables(3)
    return PolyMap(
        (
            -u ** 3 * beta + (w * A1 + v * A2) * (v * lam + 1),
            -u * u * v * beta + w,
            -w * (w * lam + u * u * beta),
        )
    )


def teo1li_A(lam, beta, A1, A2) -> MultiPoly:
    """``A(s,q,p) = -beta + (A1 p s^2 + A2 q)(lam q s^3 + 1)``."""
    lam, beta, A1, A2 = map(as_fraction, (lam, beta, A1, A2))
    s, q, p = variables(3)
    return (p * s * s * A1 + q * A2) * (q * s ** 3 * lam + 1) - beta


def teo1li_Z1_expected(lam, beta, A1, A2) -> PolyMap:
    lam, beta = as_fraction(lam), as_fraction(beta)
    s, q, p = variables(3)
    A = teo1li_A(lam, beta, A1, A2)
    return PolyMap(
        (
            A * s,
            A * q * -3 + p - q * beta,
            A * p * -5 - p * (p * s ** 3 * lam + beta),
        )
    )


@dataclass
class SingularityReport:
    field: PolyMap
    points: list[list[Fraction]]
    residuals_zero: bool
    jacobian_at_third: list[list[Fraction]]
    eigen: EigenReport


def teo1li_singularities(beta, A1, A2, lam=-1) -> SingularityReport:
    """Singular points of the blown-up field on ``s = 0`` and the spectrum at the third."""
    from .families import teo1li_field

    beta, A1, A2 = map(as_fraction, (beta, A1, A2))
    if A2 == 0:
        raise ValueError("A2 must be nonzero")
    X = teo1li_field(lam, beta, A1, A2)
    Z = chart_transform(X, teo1li_projective_chart())
    Z1 = chart_transform(Z, teo1li_blowup_chart())
    zero = Fraction(0)
    pts = [
        [zero, zero, zero],
        [zero, 2 * beta / (3 * A2), zero],
        [zero, 4 * beta / (5 * A2), 8 * beta * beta / (25 * A2)],
    ]
    ok = all(v == 0 for pt in pts for v in Z1.evaluate(pt))
    J = jacobian(Z1).evaluate(pts[2])
    return SingularityReport(Z1, pts, ok, J, eigenvalues([[float(v) for v in row] for row in J]))


# -- trapping region --------------------------------------------------------------------

@dataclass(frozen=True)
class TrappingRegion:
    """``{A s - p^2 <= 0, s0 <= s <= 0, 0 <= q <= q0, 0 <= p <= p0}``."""

    lam: Fraction
    A: Fraction
    s0: Fraction
    p0: Fraction
    q0: Fraction

    @classmethod
    def for_lambda(cls, lam) -> "TrappingRegion":
        lam = as_fraction(lam)
        if lam >= 0:
            raise ValueError("the region is defined for lambda < 0")
        return cls(lam, 2 * lam, 1 / (512 * lam ** 3), -1 / (8 * lam), Fraction(11) / (16 * lam ** 2))

    def contains(self, point: Sequence) -> bool:
        s, q, p = (as_fraction(v) for v in point)
        return (
            self.A * s - p * p <= 0
            and self.s0 <= s <= 0
            and 0 <= q <= self.q0
            and 0 <= p <= self.p0
        )

    def contains_float(self, point: Sequence[float], slack: float = 0.0) -> bool:
        s, q, p = (float(v) for v in point)
        A, s0, q0, p0 = float(self.A), float(self.s0), float(self.q0), float(self.p0)
        return (
            A * s - p * p <= slack
            and s0 - slack <= s <= slack
            and -slack <= q <= q0 + slack
            and -slack <= p <= p0 + slack
        )


@dataclass
class TrappingReport:
    violations: list[dict]
    points_checked: dict[str, int]
    corner_identity: Fraction
    corner_bound: Fraction
    corner_bound_expected: Fraction

    @property
    def ok(self) -> bool:
        return not self.violations


def _grid(lo: Fraction, hi: Fraction, n: int, include_hi: bool = True) -> list[Fraction]:
    if n == 1:
        return [lo]
    steps = n - 1 if include_hi else n
    return [lo + (hi - lo) * Fraction(i, steps) for i in range(n)]


def _sqrt_floor(q: Fraction) -> Fraction:
    r = rational_root(q, 2)
    if r is not None:
        return r
    # rational lower bound, good to ~1e-30
    scale = 10 ** 30
    return Fraction(math.isqrt(q.numerator * scale * scale // q.denominator), scale)


def verify_trapping(W: PolyMap, region: TrappingRegion, grid_per_face: int = 64) -> TrappingReport:
    """Exact check of the four outward-pointing conditions on a rational grid.

    ``grid_per_face`` points are taken along each of the two free directions
    of every face.  Conditions: (1) ``A W1 - 2 p W3 >= 0`` on ``A s = p^2``;
    (2) ``W3 > 0`` on ``p = p0, s < 0``; (3) ``W2 <= 0`` on ``q = 0``;
    (4) ``W2 >= 0`` on ``q = q0``.  Also reports the two corner quantities
    ``p0 (A + 3 lam) + 2 (1 - lam^2 q0)`` (must be 0) and
    ``s0 (lam p0 + 1) + p0^3`` (must equal ``-1 / (8^4 lam^3) > 0``).
    """
    R = region
    lam, A, s0, p0, q0 = R.lam, R.A, R.s0, R.p0, R.q0
    N = grid_per_face
    W1, W2, W3 = W.components
    violations: list[dict] = []
    counts = {"1": 0, "2": 0, "3": 0, "4": 0}

    def flag(cond: str, pt, value, why: str):
        violations.append({"condition": cond, "point": [str(v) for v in pt], "value": str(value), "reason": why})

    # face 1: s = p^2 / A
    p_hi = min(p0, _sqrt_floor(A * s0))
    for p in _grid(Fraction(0), p_hi, N):
        s = p * p / A
        for q in _grid(Fraction(0), q0, N):
            pt = (s, q, p)
            if not R.contains(pt):
                continue
            counts["1"] += 1
            val = A * W1.evaluate(pt) - 2 * p * W3.evaluate(pt)
            if val < 0:
                flag("1", pt, val, "A*W1 - 2p*W3 < 0")
    # face 2: p = p0, s in [s0, 0)
    for s in _grid(s0, Fraction(0), N, include_hi=False):
        for q in _grid(Fraction(0), q0, N):
            pt = (s, q, p0)
            if not R.contains(pt):
                continue
            counts["2"] += 1
            val = W3.evaluate(pt)
            if val <= 0:
                flag("2", pt, val, "W3 <= 0")
    # faces 3 and 4: q = 0 and q = q0
    for cond, qv in (("3", Fraction(0)), ("4", q0)):
        for s in _grid(s0, Fraction(0), N):
            for p in _grid(Fraction(0), p0, N):
                pt = (s, qv, p)
                if not R.contains(pt):
                    continue
                counts[cond] += 1
                val = W2.evaluate(pt)
                if cond == "3" and val > 0:
                    flag(cond, pt, val, "W2 > 0 on q = 0")
                if cond == "4" and val < 0:
                    flag(cond, pt, val, "W2 < 0 on q = q0")
    corner = p0 * (A + 3 * lam) + 2 * (1 - lam * lam * q0)
    bound = s0 * (lam * p0 + 1) + p0 ** 3
    expected = -1 / (Fraction(8) ** 4 * lam ** 3)
    if corner != 0:
        flag("1", (s0, q0, p0), corner, "corner combination p0(A+3lam) + 2(1 - lam^2 q0) != 0")
    if bound != expected or bound <= 0:
        flag("2", (s0, Fraction(0), p0), bound, "corner bound s0(lam p0 + 1) + p0^3 != -1/(8^4 lam^3)")
    return TrappingReport(violations, counts, corner, bound, expected)
