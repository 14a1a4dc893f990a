"""Discrete dynamics of polynomial maps.

Iteration with verdicts, exact formula orbits, Newton search for periodic
cycles, the exact period-3 witness of the ``linf`` family together with its
period-2 conditions, parameter continuation of period-3 cycles and the
matrix-cocycle contraction behind attraction in the degree-one dependent
family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .families import LinfParams, Y2Params, make_fn2, make_linf, make_y2, poly1
from .numerics import EigenReport, eigenvalues, newton_solve, newton_solve_batch
from .polycore import MultiPoly, PolyMap, as_fraction, jacobian, mat_mul

CONVERGES = "ConvergesToOrigin"
ESCAPES = "Escapes"
UNDECIDED = "Undecided"


@dataclass(frozen=True)
class IterConfig:
    escape_radius: float = 1e12
    converge_radius: float = 1e-9
    converge_dwell: int = 50
    max_denominator_bits: int = 2 ** 20

    def __post_init__(self):
        if not (0 < self.converge_radius < self.escape_radius):
            raise ValueError("need 0 < converge_radius < escape_radius")
        if self.converge_dwell < 1 or self.max_denominator_bits < 1:
            raise ValueError("converge_dwell and max_denominator_bits must be positive")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class DiscreteTrace:
    states: list
    verdict: str
    mode: str
    config: IterConfig
    degraded_to_float: bool = False
    degraded_at: int | None = None

    @property
    def final_state(self):
        return self.states[-1]

    def norms(self) -> list[float]:
        return [float(max(abs(v) for v in s)) for s in self.states]


def _sup(v) -> float:
    return float(max(abs(c) for c in v)) if len(v) else 0.0


def iterate_map(
    F: PolyMap,
    x0: Sequence,
    nmax: int,
    mode: str = "float",
    cfg: IterConfig | None = None,
) -> DiscreteTrace:
    """Iterate ``x -> F(x)`` at most ``nmax`` times.

    Exact mode keeps rationals until a denominator exceeds
    ``cfg.max_denominator_bits`` bits, then continues in floats and sets
    ``degraded_to_float``.
    """
    if not F.is_square:
        raise ValueError("F must be square")
    if mode not in ("exact", "float"):
        raise ValueError("mode must be 'exact' or 'float'")
    cfg = cfg or IterConfig()
    f = F.compiled()
    if mode == "exact":
        x = [as_fraction(v) for v in x0]
    else:
        x = [float(v) for v in x0]
    states = [list(x)]
    exact = mode == "exact"
    degraded_at = None
    dwell = 0
    verdict = UNDECIDED
    if _sup(x) >= cfg.escape_radius:
        verdict = ESCAPES
    for n in range(1, nmax + 1):
        if verdict != UNDECIDED:
            break
        if exact:
            x = F.evaluate(x)
            if any(v.denominator.bit_length() > cfg.max_denominator_bits for v in x):
                exact = False
                degraded_at = n
                x = [float(v) for v in x]
        else:
            x = f(x)
            if not all(math.isfinite(v) for v in x):
                verdict = ESCAPES
                states.append(list(x))
                break
        states.append(list(x))
        nx = _sup(x)
        if nx >= cfg.escape_radius:
            verdict = ESCAPES
        elif nx < cfg.converge_radius:
            dwell += 1
            if dwell >= cfg.converge_dwell:
                verdict = CONVERGES
        else:
            dwell = 0
    return DiscreteTrace(states, verdict, mode, cfg, degraded_at is not None, degraded_at)


# -- exact escaping orbit of the dependent family ------------------------------------

@dataclass
class Y2DiscreteOrbit:
    lam: Fraction
    k: int
    z0: Fraction
    u0: Fraction
    points: list[list[Fraction]]
    verified: bool
    first_failure: int | None = None


def y2_discrete_orbit(lam, k: int, z0, nmax: int) -> Y2DiscreteOrbit:
    """``(x_n, y_n, z_n) = ((1+l+l^2) u0 / (l^n z0), -(1+l) u0 / (l^(2n-1) z0^2), l^n z0)``.

    ``u0 = ((1+l)(l^3-1)/l)^(1/k)`` must be rational.  Each step is checked
    exactly against the map.
    """
    from .flow import rational_root

    lam, z0 = as_fraction(lam), as_fraction(z0)
    if lam == 0 or z0 == 0:
        raise ValueError("lambda and z0 must be nonzero")
    u0 = rational_root((1 + lam) * (lam ** 3 - 1) / lam, k)
    if u0 is None:
        raise ValueError("u0 is irrational for these parameters")
    F = make_y2(Y2Params(lam, k))

    def point(n: int) -> list[Fraction]:
        ln = lam ** n
        return [
            (1 + lam + lam * lam) * u0 / (ln * z0),
            -(1 + lam) * u0 / (lam ** (2 * n - 1) * z0 * z0),
            ln * z0,
        ]

    pts = [point(n) for n in range(nmax + 1)]
    failure = next((n for n in range(nmax) if F.evaluate(pts[n]) != pts[n + 1]), None)
    return Y2DiscreteOrbit(lam, k, z0, u0, pts, failure is None, failure)


# -- periodic orbits ------------------------------------------------------------------

DEDUP_TOL = 1e-6


@dataclass
class PeriodicOrbit:
    period: int
    points: list[np.ndarray]
    multiplier_eigen: EigenReport
    residual: float
    minimal: bool
    exact_zero: bool = False

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "points": [[float(v) for v in p] for p in self.points],
            "multipliers": [[m.real, m.imag] for m in self.multiplier_eigen.eigenvalues],
            "residual": self.residual,
            "minimal": self.minimal,
        }


def _divisors(k: int) -> list[int]:
    return [d for d in range(1, k) if k % d == 0]


def _stack(values, m: int) -> np.ndarray:
    return np.array([np.broadcast_to(np.asarray(v, dtype=float), (m,)) for v in values])


class LinfEvaluator:
    """Float evaluation of the linf map through ``t`` and ``g(t)``, without expanding.

    The expanded polynomial loses precision to cancellation when ``t`` is
    small compared with ``x^2`` and ``y``; this form does not.
    """

    def __init__(self, p: LinfParams):
        self.lam, self.v1, self.b1 = float(p.lam), float(p.v1), float(p.b1)
        self.beta, self.alpha = float(p.beta), float(p.alpha)
        self.g = [float(c) for c in _coefficients(p.g)]
        self.nvars = 3

    def _g(self, t):
        acc = 0.0 * t
        dacc = 0.0 * t
        for c in reversed(self.g):
            dacc = dacc * t + acc
            acc = acc * t + c
        return acc, dacc

    def __call__(self, x):
        X, Y, Z = x[0], x[1], x[2]
        t = Y + self.b1 * X + self.beta * X * X
        g, _ = self._g(t)
        return [
            self.lam * X + g,
            self.lam * Y + self.v1 * Z - (self.b1 + 2 * self.beta * X) * g,
            self.lam * Z + self.alpha * g * g,
        ]

    def jacobian(self, x):
        X, Y = x[0], x[1]
        c = self.b1 + 2 * self.beta * X
        t = Y + self.b1 * X + self.beta * X * X
        g, gp = self._g(t)
        lam = self.lam
        zero = 0.0 * X
        return [
            [lam + gp * c, gp, zero],
            [-2 * self.beta * g - c * gp * c, lam - c * gp, zero + self.v1],
            [2 * self.alpha * g * gp * c, 2 * self.alpha * g * gp, zero + lam],
        ]


def _coefficients(g: MultiPoly) -> list[Fraction]:
    deg = g.degree()
    return [g.coefficient((j,)) for j in range(deg + 1)]


class _Iterated:
    """``F^k`` and its chain-rule Jacobian in floats, for one point or a batch of columns."""

    def __init__(self, F: PolyMap | None, k: int, evaluator=None):
        if evaluator is not None:
            self.f, self.jac = evaluator, evaluator.jacobian
            self.n = evaluator.nvars
        else:
            self.f = F.compiled()
            self.jac = F.compiled_jacobian()
            self.n = F.nvars
        self.k = k

    def orbit(self, x) -> list[np.ndarray]:
        pts = [np.asarray(x, dtype=float)]
        for _ in range(self.k):
            pts.append(np.asarray(self.f(pts[-1]), dtype=float))
        return pts

    def power(self, x) -> np.ndarray:
        return self.orbit(x)[-1]

    def dpower(self, x) -> np.ndarray:
        pts = self.orbit(x)
        M = np.eye(self.n)
        for p in pts[:-1]:
            M = np.asarray(self.jac(p), dtype=float) @ M
        return M

    def residual(self, x) -> np.ndarray:
        return self.power(x) - np.asarray(x, dtype=float)

    def dresidual(self, x) -> np.ndarray:
        return self.dpower(x) - np.eye(self.n)

    # batched versions: X has shape (n, m)
    def residual_batch(self, X: np.ndarray) -> np.ndarray:
        m = X.shape[1]
        Y = X
        for _ in range(self.k):
            Y = _stack(self.f(Y), m)
        return Y - X

    def dresidual_batch(self, X: np.ndarray) -> np.ndarray:
        m = X.shape[1]
        M = np.broadcast_to(np.eye(self.n), (m, self.n, self.n)).copy()
        Y = X
        for _ in range(self.k):
            J = np.array([_stack(row, m) for row in self.jac(Y)]).transpose(2, 0, 1)
            M = J @ M
            Y = _stack(self.f(Y), m)
        return M - np.eye(self.n)


def chain_rule_jacobian(F: PolyMap, k: int, x) -> np.ndarray:
    """``D(F^k)(x) = JF(x_{k-1}) ... JF(x_0)`` in floats."""
    return _Iterated(F, k).dpower(x)


def exact_chain_rule_jacobian(F: PolyMap, k: int, x: Sequence) -> list[list[Fraction]]:
    J = jacobian(F)
    pt = [as_fraction(v) for v in x]
    M = [[Fraction(int(i == j)) for j in range(F.nvars)] for i in range(F.nvars)]
    for _ in range(k):
        M = mat_mul(J.evaluate(pt), M)
        pt = F.evaluate(pt)
    return M


def _same_cycle(a: list[np.ndarray], b: list[np.ndarray], tol: float) -> bool:
    k = len(a)
    for shift in range(k):
        if all(np.max(np.abs(a[i] - b[(i + shift) % k])) < tol for i in range(k)):
            return True
    return False


def _mpf(q: Fraction):
    return mpmath.mpf(q.numerator) / q.denominator


def _mp_map(F: PolyMap, x) -> list:
    return [p.evaluate_with(x, _mpf) for p in F.components]


def polish_cycle(F: PolyMap, k: int, x, dps: int = 50, iters: int = 8, history: list | None = None) -> list | None:
    """Newton on ``F^k - id`` in ``dps``-digit arithmetic; returns the cycle or ``None``.

    ``history`` (if given) receives the residual sup-norm before each step.
    """
    J = jacobian(F)
    n = F.nvars
    with mpmath.workdps(dps):
        pt = [mpmath.mpf(float(v)) for v in x]
        for _ in range(iters):
            M = mpmath.eye(n)
            y = pt
            for _ in range(k):
                Jy = mpmath.matrix([[e.evaluate_with(y, _mpf) for e in row] for row in J.entries])
                M = Jy * M
                y = _mp_map(F, y)
            G = mpmath.matrix([a - b for a, b in zip(y, pt)])
            if history is not None:
                history.append(max(abs(v) for v in G))
            try:
                step = mpmath.lu_solve(M - mpmath.eye(n), -G)
            except ZeroDivisionError:
                return None
            pt = [a + step[i] for i, a in enumerate(pt)]
        cycle = [pt]
        for _ in range(k - 1):
            cycle.append(_mp_map(F, cycle[-1]))
        closing = max(abs(a - b) for a, b in zip(_mp_map(F, cycle[-1]), cycle[0]))
        scale = 1 + max(abs(v) for v in pt)
        if not closing <= mpmath.mpf(10) ** (-dps // 2) * scale:
            return None
        return cycle


def cycle_residual(F: PolyMap, points: Sequence[np.ndarray], dps: int = 50) -> float:
    """``max_i ||F(p_i) - p_(i+1)||_inf`` evaluated without rounding error at the stored floats."""
    k = len(points)
    worst = mpmath.mpf(0)
    with mpmath.workdps(dps):
        for i in range(k):
            img = _mp_map(F, [mpmath.mpf(float(v)) for v in points[i]])
            nxt = points[(i + 1) % k]
            worst = max(worst, max(abs(a - mpmath.mpf(float(b))) for a, b in zip(img, nxt)))
    return float(worst)


def orbit_from_point(F: PolyMap, k: int, x, polish: bool = True, evaluator=None) -> PeriodicOrbit:
    """Package the cycle through ``x`` with residual, multipliers and minimality.

    With ``polish`` the cycle is first refined in 50-digit arithmetic and
    each point is rounded to the nearest double separately.
    """
    it = _Iterated(F, k, evaluator)
    cycle = None
    if polish:
        mp_cycle = polish_cycle(F, k, x)
        if mp_cycle is not None:
            cycle = [np.array([float(v) for v in p]) for p in mp_cycle]
    if cycle is None:
        cycle = it.orbit(x)[:k]
    pts = it.orbit(cycle[0])
    scale = 1.0 + float(np.max(np.abs(pts[0])))
    minimal = all(
        float(np.max(np.abs(pts[d] - pts[0]))) > DEDUP_TOL * scale for d in _divisors(k)
    )
    eig = eigenvalues(it.dpower(cycle[0]))
    return PeriodicOrbit(k, cycle, eig, cycle_residual(F, cycle), minimal)


def find_periodic(
    F: PolyMap,
    k: int,
    seeds: Sequence[Sequence[float]],
    tol: float = 1e-10,
    maxit: int = 100,
    evaluator=None,
) -> list[PeriodicOrbit]:
    """Newton on ``F^k - id`` from each seed; returns distinct cycles.

    Float Newton stops when ``||F^k(x) - x||_inf <= tol * (1 + ||x||_inf)``;
    converged points are then polished in 50-digit arithmetic.  Cycles closer
    than 1e-6 (sup norm, after the best rotation) are merged.  ``evaluator``
    optionally replaces the expanded float evaluation of ``F`` (for example
    :class:`LinfEvaluator`).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    found: list[PeriodicOrbit] = []
    seeds = [np.asarray(s, dtype=float) for s in seeds]
    if not seeds:
        return found
    it = _Iterated(F, k, evaluator)
    batch = newton_solve_batch(it.residual_batch, it.dresidual_batch, np.array(seeds), tol=tol, maxit=maxit, rtol=tol)
    candidates: list[np.ndarray] = []
    for x, ok in zip(batch.points, batch.converged):
        if not ok:
            continue
        if any(_same_cycle(it.orbit(x)[:k], it.orbit(c)[:k], DEDUP_TOL) for c in candidates):
            continue
        candidates.append(x)
    for x in candidates:
        orb = orbit_from_point(F, k, x, evaluator=evaluator)
        if any(_same_cycle(orb.points, o.points, DEDUP_TOL) for o in found):
            continue
        found.append(orb)
    return found


def random_seeds(n: int, dim: int, radius: float, seed: int) -> list[np.ndarray]:
    """``n`` points uniform in the sup-norm ball of the given radius."""
    rng = np.random.default_rng(seed)
    return [rng.uniform(-radius, radius, dim) for _ in range(n)]


# -- exact period-3 witness of the linf family -----------------------------------------

@dataclass
class Period3Witness:
    lam: Fraction
    A: Fraction
    beta: Fraction
    b1: Fraction
    v1: Fraction
    x0: Fraction
    y0: Fraction
    z0: Fraction
    t0: Fraction
    t1: Fraction
    t2: Fraction
    charpoly: tuple[Fraction, Fraction, Fraction, Fraction]  # c0 + c1 x + c2 x^2 + c3 x^3
    p_at_1: Fraction
    D: tuple[Fraction, Fraction, Fraction]
    dF3: list[list[Fraction]] = field(repr=False, default_factory=list)

    @property
    def point(self) -> list[Fraction]:
        return [self.x0, self.y0, self.z0]

    @property
    def params(self) -> LinfParams:
        return LinfParams(self.lam, self.v1, self.beta / self.v1, self.b1, poly1([0, self.A]))

    def field(self) -> PolyMap:
        return make_linf(self.params)


def linear_g(A) -> MultiPoly:
    return poly1([0, as_fraction(A)])


def _t_values(p: LinfParams, x0, y0, z0):
    """``t0, t1, t2`` and ``g(t0), g(t1), g(t2)`` for a point of the linf family."""
    lam, b1, v1, beta = p.lam, p.b1, p.v1, p.beta
    g = lambda t: p.g.evaluate([t])  # noqa: E731
    t0 = y0 + b1 * x0 + beta * x0 * x0
    g0 = g(t0)
    t1 = lam * b1 * x0 + lam * y0 + v1 * z0 - 2 * beta * x0 * g0 + beta * (lam * x0 + g0) ** 2
    g1 = g(t1)
    t2 = (
        b1 * lam * lam * x0 + lam * lam * y0 + 2 * lam * v1 * z0 - 2 * beta * lam * x0 * g0 + beta * g0 * g0
        - 2 * beta * (lam * x0 + g0) * g1 + beta * (lam * lam * x0 + lam * g0 + g1) ** 2
    )
    return (t0, t1, t2), (g0, g1, g(t2))


def period3_conditions(p: LinfParams, point: Sequence) -> tuple[Fraction, Fraction, Fraction]:
    """``D1, D2, D3`` at ``point`` (the ``b`` in the last term of ``D3`` read as ``b1``)."""
    x0, y0, z0 = (as_fraction(v) for v in point)
    lam, b1, v1, beta, alpha = p.lam, p.b1, p.v1, p.beta, p.alpha
    _, (g0, g1, g2) = _t_values(p, x0, y0, z0)
    l2, l3 = lam * lam, lam ** 3
    D1 = (l3 - 1) * x0 + l2 * g0 + lam * g1 + g2
    D2 = (l3 - 1) * z0 + l2 * alpha * g0 ** 2 + lam * alpha * g1 ** 2 + alpha * g2 ** 2
    D3 = (
        (l3 - 1) * y0 + 3 * l2 * v1 * z0 - l2 * (b1 + 2 * beta * x0) * g0 + 2 * lam * beta * g0 ** 2
        - lam * (b1 + 2 * beta * (lam * x0 + g0)) * g1 + beta * g1 ** 2
        - (b1 + 2 * beta * (l2 * x0 + lam * g0 + g1)) * g2
    )
    return D1, D2, D3


def _charpoly3(M: list[list[Fraction]]) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """Coefficients ``(c0, c1, c2, c3)`` of ``det(x I - M)`` for a 3x3 matrix."""
    tr = M[0][0] + M[1][1] + M[2][2]
    m2 = sum(M[i][i] * M[j][j] - M[i][j] * M[j][i] for i, j in ((0, 1), (0, 2), (1, 2)))
    det = (
        M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1])
        - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0])
        + M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0])
    )
    return (-det, m2, -tr, Fraction(1))


def p_at_1_identity(lam) -> Fraction:
    lam = as_fraction(lam)
    return 3 * (lam - 1) ** 3 * (1 + lam + lam * lam) ** 3


def period3_exact(lam, A, beta, b1, v1) -> Period3Witness:
    """Exact period-3 point of the linf family with ``g(t) = A t``, verified by composition.

    Raises ``ArithmeticError`` if ``F^3`` does not fix the point or the
    identity ``p(1) = 3 (l-1)^3 (1+l+l^2)^3`` fails.
    """
    lam, A, beta, b1, v1 = map(as_fraction, (lam, A, beta, b1, v1))
    if not -1 < lam < 1:
        raise ValueError("needs |lambda| < 1")
    if A == 0 or beta == 0 or v1 == 0:
        raise ValueError("A, beta and v1 must be nonzero")
    l = lam
    s = 1 + l + l * l
    om = 1 - l
    x0 = s * (1 + 4 * l ** 2 + l ** 4) / (A * beta * om ** 3)
    y0 = -s / (A * A * beta * om ** 6) * (
        l * s * (4 + l + 8 * l ** 2 + 11 * l ** 3 + 4 * l ** 4 + 7 * l ** 5 + l ** 7)
        + A * b1 * om ** 3 * (1 + 4 * l ** 2 + l ** 4)
    )
    z0 = s ** 3 * (1 + 3 * l ** 2 + 4 * l ** 3 + 3 * l ** 4 + l ** 6) / (v1 * A * A * beta * om ** 5)
    p = LinfParams(lam, v1, beta / v1, b1, linear_g(A))
    F = make_linf(p)
    pt = [x0, y0, z0]
    image = F.evaluate(F.evaluate(F.evaluate(pt)))
    if image != pt:
        raise ArithmeticError("F^3 does not fix the period-3 point")
    (t0, t1, t2), _ = _t_values(p, x0, y0, z0)
    M = exact_chain_rule_jacobian(F, 3, pt)
    cp = _charpoly3(M)
    p1 = sum(cp)
    if p1 != p_at_1_identity(lam):
        raise ArithmeticError(f"p(1) = {p1} differs from 3(l-1)^3(1+l+l^2)^3")
    return Period3Witness(
        lam, A, beta, b1, v1, x0, y0, z0, t0, t1, t2, cp, p1, period3_conditions(p, pt), M
    )


def charpoly_displayed(lam) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """The closed-form coefficients ``(c0, c1, c2, c3)`` of ``p(x)`` as functions of lambda."""
    l = as_fraction(lam)
    c1 = -l * (8 + 44 * l + 104 * l ** 2 + 164 * l ** 3 + 164 * l ** 4 + 113 * l ** 5 + 44 * l ** 6 + 8 * l ** 7 - 4 * l ** 8)
    c2 = -4 + 8 * l + 44 * l ** 2 + 113 * l ** 3 + 164 * l ** 4 + 164 * l ** 5 + 104 * l ** 6 + 44 * l ** 7 + 8 * l ** 8
    return (-(l ** 9), c1, c2, Fraction(1))


@dataclass
class CharpolyCheck:
    computed: tuple[Fraction, ...]
    displayed: tuple[Fraction, ...]
    mismatched: list[int]
    p_at_1_consistent: bool

    @property
    def matches(self) -> bool:
        return not self.mismatched


def charpoly_df3(w: Period3Witness) -> CharpolyCheck:
    """Compare the exact ``det(xI - DF^3)`` with the closed-form coefficients, degree by degree."""
    shown = charpoly_displayed(w.lam)
    bad = [i for i in range(4) if w.charpoly[i] != shown[i]]
    return CharpolyCheck(w.charpoly, shown, bad, sum(w.charpoly) == w.p_at_1)


def witness_orbit(w: Period3Witness) -> PeriodicOrbit:
    """Float :class:`PeriodicOrbit` of an exact witness; its residual is exactly zero."""
    F = w.field()
    pts = [w.point]
    for _ in range(2):
        pts.append(F.evaluate(pts[-1]))
    eig = eigenvalues([[float(v) for v in row] for row in w.dF3])
    minimal = F.evaluate(pts[0]) != pts[0]
    return PeriodicOrbit(3, [np.array([float(v) for v in q]) for q in pts], eig, 0.0, minimal, True)


# -- period two ---------------------------------------------------------------------

def period2_conditions(p: LinfParams, point: Sequence) -> tuple[Fraction, Fraction, Fraction]:
    """Exact ``C1, C2, C3`` of the period-2 system at ``point``."""
    x0, y0, z0 = (as_fraction(v) for v in point)
    lam, b1, v1, beta, alpha = p.lam, p.b1, p.v1, p.beta, p.alpha
    _, (g0, g1, _) = _t_values(p, x0, y0, z0)
    l2 = lam * lam
    C1 = (l2 - 1) * x0 + lam * g0 + g1
    C2 = (l2 - 1) * z0 + lam * alpha * g0 ** 2 + alpha * g1 ** 2
    C3 = (
        (l2 - 1) * y0 + 2 * lam * v1 * z0 - lam * (b1 + 2 * beta * x0) * g0 + beta * g0 ** 2
        - (b1 + 2 * beta * (lam * x0 + g0)) * g1
    )
    return C1, C2, C3


def period2_reduced_point(p: LinfParams, x0) -> list[Fraction]:
    """For linear ``g``: ``y0 = (1 - l - b1) x0 - beta x0^2`` and the ``z0`` solving ``C1 = 0``."""
    if p.g.degree() != 1:
        raise ValueError("the reduction assumes g linear")
    x0 = as_fraction(x0)
    y0 = (1 - p.lam - p.b1) * x0 - p.beta * x0 * x0
    # C1 is affine in z0 when g is linear
    c_at0 = period2_conditions(p, [x0, y0, 0])[0]
    c_at1 = period2_conditions(p, [x0, y0, 1])[0]
    z0 = -c_at0 / (c_at1 - c_at0)
    return [x0, y0, z0]


# -- continuation ---------------------------------------------------------------------

class ContinuationError(RuntimeError):
    def __init__(self, message: str, last_good: float, point: np.ndarray):
        super().__init__(message)
        self.last_good = last_good
        self.point = point


@dataclass
class ContinuationResult:
    orbit: PeriodicOrbit
    scale: Fraction
    params: LinfParams
    steps_taken: int
    halvings: int
    path: list[float] = field(default_factory=list)
    ramp_power: int = 1


def auto_scale(higher: Sequence, bound: float = 0.1) -> Fraction:
    """Largest ``a = 2^-m`` with ``|A_j| a^(j-1) <= bound`` for every higher coefficient."""
    a = Fraction(1)
    coeffs = [abs(as_fraction(c)) for c in higher]
    while any(c * a ** (j + 1) > bound for j, c in enumerate(coeffs)):
        a /= 2
    return a


def _linf_with(base: LinfParams, A, higher: Sequence, s: Fraction) -> LinfParams:
    g = poly1([0, A] + [as_fraction(c) * s for c in higher])
    return base.replace(g=g)


def perturbation_size(base: Period3Witness, higher: Sequence) -> float:
    """``max_j |A_j| |t|^(j-1)`` over the ``t`` values of the base cycle.

    This is the relative size of the higher-order part of ``g`` on the
    cycle; it is unchanged by the rescaling ``x -> x / a``.
    """
    ts = [abs(float(t)) for t in (base.t0, base.t1, base.t2)]
    return max(
        (abs(float(c)) * t ** (j + 1) for j, c in enumerate(higher) for t in ts),
        default=0.0,
    )


def ramp_exponent(size: float, steps: int, first_step_bound: float = 0.05) -> int:
    """Smallest ``p >= 1`` with ``size * steps^-p <= first_step_bound``."""
    p = 1
    while size * float(steps) ** -p > first_step_bound and p < 64:
        p += 1
    return p


CORRECTOR_MAXIT = 10


def continuation(
    base: Period3Witness,
    higher_coeffs: Sequence,
    steps: int = 32,
    floor: float = 1e-4,
    tol: float = 1e-10,
    autoscale: bool = True,
) -> ContinuationResult:
    """Follow the period-3 cycle from ``g = A t`` to ``g = A t + A2 t^2 + ... + Ak t^k``.

    The higher coefficients are switched on as ``s^p A_j`` for ``s`` from 0
    to 1, starting with step ``1/steps``, doubling after a success and
    halving after a Newton failure; a step below ``floor`` aborts with
    :class:`ContinuationError`.  ``p`` is 1 unless the first step would
    perturb ``g`` on the base cycle by more than 5%, see :func:`ramp_exponent`.

    When some ``|A_j| > 0.1`` the map is first conjugated by ``x -> x / a``,
    turning ``g`` into ``a^-1 g(a t)`` and ``alpha`` into ``alpha a``, with
    ``a = 2^-m`` chosen so that every scaled higher coefficient is at most
    0.1.  The result is mapped back and checked on the original map.
    """
    if steps < 1:
        raise ValueError("steps must be positive")
    higher = [as_fraction(c) for c in higher_coeffs]
    a = auto_scale(higher) if autoscale else Fraction(1)
    scaled_higher = [c * a ** (j + 1) for j, c in enumerate(higher)]
    if a != 1:
        base = period3_exact(base.lam, base.A, base.beta * a, base.b1, base.v1)
    power = ramp_exponent(perturbation_size(base, scaled_higher), steps)
    p0 = base.params
    x = np.array([float(v) for v in base.point])
    x_prev, s_prev = None, None
    s, ds = 0.0, 1.0 / steps
    path = [0.0]
    taken = halvings = 0
    while s < 1.0:
        trial = min(1.0, s + ds)
        params = _linf_with(p0, base.A, scaled_higher, Fraction(trial) ** power)
        it = _Iterated(None, 3, LinfEvaluator(params))
        guess = x if x_prev is None else x + (x - x_prev) * ((trial - s) / (s - s_prev))
        with np.errstate(all="ignore"):
            res = newton_solve((it.residual, it.dresidual), guess, tol=tol, rtol=tol, maxit=CORRECTOR_MAXIT)
        if res.converged and np.max(np.abs(res.point - x)) < 0.5 * (1 + np.max(np.abs(x))):
            x_prev, s_prev = x, s
            s, x = trial, res.point
            path.append(s)
            taken += 1
            ds = min(2 * ds, 1.0 / steps)
        else:
            ds /= 2
            halvings += 1
            if ds < floor:
                raise ContinuationError(f"Newton failed beyond parameter {s}", s, x)
    final_scaled = _linf_with(p0, base.A, scaled_higher, Fraction(1))
    original = final_scaled.replace(alpha=final_scaled.alpha / a, g=poly1([0, base.A] + higher))
    orbit = orbit_from_point(make_linf(original), 3, x * float(a), evaluator=LinfEvaluator(original))
    return ContinuationResult(orbit, a, original, taken, halvings, path, power)


# -- lift of the period-3 cycle to F_{n,2} ---------------------------------------------

def fn2_as_linf(lam, a=0, b=1) -> LinfParams:
    """``F_{3,2}`` is the linf map with ``v1 = 1, alpha = -b, b1 = -a, g(t) = t``."""
    return LinfParams(lam, 1, -as_fraction(b), -as_fraction(a), poly1([0, 1]))


def fn2_period3_point(n: int, lam, a=0, b=1) -> list[Fraction]:
    """Exact period-3 point of ``F_{n,2}``: the 3-d witness extended by ``x_j = g_j / (1 - l^3)``."""
    lam = as_fraction(lam)
    p = fn2_as_linf(lam, a, b)
    w = period3_exact(lam, 1, p.beta, p.b1, p.v1)
    F = make_fn2(n, lam, a, b)
    base = w.point + [Fraction(0)] * (n - 3)
    img = F.evaluate(F.evaluate(F.evaluate(base)))
    tail = [img[j] / (1 - lam ** 3) for j in range(3, n)]
    return w.point + tail


# -- cocycle contraction ----------------------------------------------------------

@dataclass
class CocycleReport:
    N: int
    N_inequality: int
    K: float
    z0_bound: float
    matrix_norm_trace: list[float]
    norm_at_zero: float

    @property
    def certifies(self) -> bool:
        return self.K < 1 and self.z0_bound > 0


def _norm2(M: np.ndarray) -> float:
    """``||M|| = 2 max |m_ij|``."""
    return 2.0 * float(np.max(np.abs(M)))


def _block_matrix(lam: float, a: MultiPoly, b: MultiPoly, g: MultiPoly):
    fa, fb, fg = (q.evaluate for q in (a, b, g))

    def A(z: float) -> np.ndarray:
        av, bv, gv = (float(f([z], mode="float")) for f in (fa, fb, fg))
        return np.array([[lam - av * bv * gv, -bv * bv * gv], [av * av * gv, lam + av * bv * gv]])

    return A


def _product(A, lam: float, N: int, z: float, trace: list | None = None) -> np.ndarray:
    B = np.eye(2)
    for j in range(N):
        B = A(lam ** j * z) @ B
        if trace is not None:
            trace.append(_norm2(B))
    return B


def chebyshev_samples(radius: float, count: int = 257) -> np.ndarray:
    k = np.arange(count)
    return radius * np.cos((2 * k + 1) * np.pi / (2 * count))


def cocycle_contraction(lam, a: MultiPoly, b: MultiPoly, g: MultiPoly, n_probe: int = 257, zmax: float = 64.0) -> CocycleReport:
    """Block size ``N`` and radius ``z0`` with sampled ``||B(z)|| <= K < 1`` for ``|z| <= z0``.

    ``B(z) = A(l^(N-1) z) ... A(z)``.  ``N`` starts at the smallest integer
    with ``2 N l^(N-1) max{a0^2 g0, b0^2 g0, |a0 b0 g0|} < 1`` and is raised
    until ``||B(0)|| < 1``.  The radius is the bisection limit where the
    largest norm over ``n_probe`` Chebyshev samples stays below
    ``K = (1 + ||B(0)||) / 2``; ``matrix_norm_trace`` lists the norms of the
    partial products at ``z0``.
    """
    lam = as_fraction(lam)
    if not 0 < lam < 1:
        raise ValueError("needs 0 < lambda < 1")
    a0, b0, g0 = (q.evaluate([0]) for q in (a, b, g))
    m = max(a0 * a0 * g0, b0 * b0 * g0, abs(a0 * b0 * g0))
    N = 1
    while 2 * N * lam ** (N - 1) * m >= 1:
        N += 1
    N_ineq = N
    lf = float(lam)
    A = _block_matrix(lf, a, b, g)
    while _norm2(_product(A, lf, N, 0.0)) >= 1:
        N += 1
        if N > 100_000:
            raise ArithmeticError("no block size contracts at z = 0")
    at_zero = _norm2(_product(A, lf, N, 0.0))

    def K_of(r: float) -> float:
        return max(_norm2(_product(A, lf, N, float(z))) for z in chebyshev_samples(r, n_probe))

    target = 0.5 * (1.0 + at_zero)
    lo, hi = 0.0, zmax
    if K_of(hi) <= target:
        lo = hi
    else:
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if K_of(mid) <= target:
                lo = mid
            else:
                hi = mid
    K = K_of(lo) if lo > 0 else at_zero
    trace: list[float] = []
    _product(A, lf, N, lo, trace)
    return CocycleReport(N, N_ineq, K, lo, trace, at_zero)
