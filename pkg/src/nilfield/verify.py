"""Deterministic reproduction battery behind ``nilfield verify``.

Every claim is a function returning ``(status, details)``; the runner adds
timing and compares it against the claim's budget.  Seeds are fixed, so two
runs produce identical reports apart from the timings.
"""

from __future__ import annotations

import json
import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np

from . import flow, iterate
from .classify import classify_field, linear_dependence, litri_test, rank_function_field
from .families import (
    HnrParams,
    LinfParams,
    Y2Params,
    degree_one_params,
    make_fn2,
    make_hnr,
    make_ld_normal,
    make_linf,
    make_y2,
    poly1,
    teo1li_field,
)
from .numerics import fd_jacobian
from .polycore import (
    MultiPoly,
    PolyMap,
    as_fraction,
    conjugate_linear,
    conjugate_polynomial,
    jacobian,
    mat_inverse,
    mat_pow,
)

PASS, FAIL, EVIDENCE = "pass", "fail", "evidence"
DEFAULT_SEED = 20240611


@dataclass
class ClaimResult:
    claim_id: str
    anchor: str
    status: str
    details: dict
    seconds: float
    budget_seconds: float

    def to_dict(self) -> dict:
        return {
            "id": self.claim_id,
            "anchor": self.anchor,
            "status": self.status,
            "seconds": round(self.seconds, 4),
            "budget_seconds": self.budget_seconds,
            "details": self.details,
        }


@dataclass
class VerifyReport:
    claims: list[ClaimResult]
    seed: int
    tamper: dict = field(default_factory=dict)

    @property
    def overall(self) -> str:
        return FAIL if any(c.status == FAIL for c in self.claims) else PASS

    def to_dict(self) -> dict:
        return {
            "overall": self.overall,
            "seed": self.seed,
            "tamper": {k: str(v) for k, v in self.tamper.items()},
            "claims": [c.to_dict() for c in self.claims],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=str)


@dataclass(frozen=True)
class _Claim:
    claim_id: str
    anchor: str
    budget: float
    run: Callable[["_Context"], tuple[str, dict]]


@dataclass
class _Context:
    seed: int
    tamper: dict


def _ok(flag: bool, success: str = PASS) -> str:
    return success if flag else FAIL


def _q(v) -> str:
    return str(as_fraction(v))


# -- individual claims -------------------------------------------------------------------

def _nilpotency_family(ctx: _Context):
    rows = []
    good = True
    for n, r in ((3, 2), (4, 2), (5, 2), (4, 3)):
        a = poly1([0, 1] + [0] * (r - 2) + [1])  # x + x^r
        H = make_hnr(HnrParams(n, r, a))
        JH = jacobian(H)
        nil = mat_pow(JH, n).is_zero()
        rk = rank_function_field(JH)
        kernel = linear_dependence(H.components) if r == 2 else None
        ok = nil and rk == r and kernel is None
        good &= ok
        rows.append({"n": n, "r": r, "JH^n_zero": nil, "rank": rk, "components_independent": kernel is None})
    return _ok(good), {"cases": rows}


def _classification(ctx: _Context):
    y2 = classify_field(make_y2(Y2Params(-1, 1)), -1)
    f32 = classify_field(make_fn2(3, Fraction(1, 2)), Fraction(1, 2))
    z, t = MultiPoly.var(1, 0), MultiPoly.var(2, 1)
    one, zero = MultiPoly.constant(1, 1), MultiPoly.zero(1)
    lt_dep = litri_test(one, z, zero, zero, t)
    lt_ind = litri_test(one, one * 2, zero, zero, t)
    kernel = [str(v) for v in y2.dependence_kernel_components or []]
    ok = (
        y2.verdict == "N_ld"
        and kernel == ["0", "0", "1"]
        and f32.verdict == "N_li"
        and lt_dep is False
        and lt_ind is True
    )
    return _ok(ok), {
        "y2_verdict": y2.verdict,
        "y2_kernel": kernel,
        "f32_verdict": f32.verdict,
        "litri(a=1,b=z,f=t)": lt_dep,
        "litri(a=1,b=2,f=t)": lt_ind,
    }


def _degree_one_field(lam) -> PolyMap:
    z = poly1([0, 1])
    one, zero = poly1([1]), poly1([0])
    return make_ld_normal(degree_one_params(lam, one, z, zero, zero, one))


def _cy1_attraction(ctx: _Context):
    F = _degree_one_field(-1)
    seeds = iterate.random_seeds(20, 3, 10.0, ctx.seed)
    cfg = flow.SimConfig(t_max=200.0)
    verdicts, t_final = [], []
    for x0 in seeds:
        tr = flow.integrate(F, x0, cfg)
        verdicts.append(tr.verdict)
        t_final.append(tr.times[-1])
    ok = all(v == flow.CONVERGES for v in verdicts)
    return _ok(ok), {
        "seeds": len(seeds),
        "converged": sum(v == flow.CONVERGES for v in verdicts),
        "verdicts": sorted(set(verdicts)),
        "max_time": max(t_final),
    }


def _dy1_attraction(ctx: _Context):
    lam = Fraction(1, 2)
    F = _degree_one_field(lam)
    seeds = iterate.random_seeds(20, 3, 10.0, ctx.seed)
    finals, steps, verdicts = [], [], []
    for x0 in seeds:
        tr = iterate.iterate_map(F, x0, 10 ** 4, mode="float")
        verdicts.append(tr.verdict)
        finals.append(max(abs(float(v)) for v in tr.final_state))
        steps.append(len(tr.states) - 1)
    z = poly1([0, 1])
    one = poly1([1])
    rep = iterate.cocycle_contraction(lam, one, z, one)
    ok = all(v == iterate.CONVERGES for v in verdicts) and max(finals) < 1e-8 and rep.certifies
    return _ok(ok), {
        "converged": sum(v == iterate.CONVERGES for v in verdicts),
        "max_final_norm": max(finals),
        "max_iterations": max(steps),
        "cocycle": {"N": rep.N, "K": rep.K, "z0_bound": rep.z0_bound, "certifies": rep.certifies},
    }


def _y2_continuous_escape(ctx: _Context):
    F = make_y2(Y2Params(-1, 1))
    orbit = flow.y2_escape_orbit(-1, 1, 1)
    times = [5.0 * i / 100 for i in range(101)]
    res = flow.residual_expporbit(F, orbit, times)
    x0 = orbit.value(0.0)
    tr = flow.integrate(F, x0)
    ok = res < 1e-9 and tr.verdict == flow.ESCAPES
    return _ok(ok), {
        "initial_point": x0,
        "orbit_residual": res,
        "verdict": tr.verdict,
        "escape_time": tr.times[-1],
    }


def _y2_discrete_escape(ctx: _Context):
    orb = iterate.y2_discrete_orbit(Fraction(1, 2), 1, 1, 64)
    ok = orb.verified and orb.u0 == Fraction(-21, 8)
    return _ok(ok), {"u0": _q(orb.u0), "steps_checked": 64, "first_failure": orb.first_failure}


def _liorsc_trap(ctx: _Context):
    lam = Fraction(-1)
    region = flow.TrappingRegion.for_lambda(lam)
    constants_ok = (region.A, region.s0, region.p0, region.q0) == (
        Fraction(-2), Fraction(-1, 512), Fraction(1, 8), Fraction(11, 16)
    )
    offset = as_fraction(ctx.tamper.get("liorsc-trap.p0_offset", 0))
    if offset:
        region = flow.TrappingRegion(region.lam, region.A, region.s0, region.p0 + offset, region.q0)
    W = flow.chart_transform(flow.liorsc_Y(lam), flow.liorsc_chart())
    rep = flow.verify_trapping(W, region, 64)
    ok = constants_ok and rep.ok and rep.corner_identity == 0 and rep.corner_bound == Fraction(1, 4096)
    return _ok(ok), {
        "region": {"A": _q(region.A), "s0": _q(region.s0), "p0": _q(region.p0), "q0": _q(region.q0)},
        "points_checked": rep.points_checked,
        "violations": len(rep.violations),
        "witnesses": rep.violations[:3],
        "corner_identity": _q(rep.corner_identity),
        "corner_bound": _q(rep.corner_bound),
    }


def _liorsc_conjugation(ctx: _Context):
    cases = []
    for lam in (Fraction(-1), Fraction(-1, 2)):
        for a, b in ((0, 1), (2, 3), (Fraction(1, 2), -1)):
            Y = conjugate_polynomial(make_fn2(3, lam, a, b), flow.liorsc_phi(lam, a, b))
            W = flow.chart_transform(Y, flow.liorsc_chart())
            cases.append(
                {
                    "lambda": _q(lam),
                    "a": _q(a),
                    "b": _q(b),
                    "pushforward_matches": Y == flow.liorsc_Y(lam),
                    "chart_matches": W == flow.liorsc_W_expected(lam),
                }
            )
    ok = all(c["pushforward_matches"] and c["chart_matches"] for c in cases)
    return _ok(ok), {"cases": cases}


def _teo1li_blowup(ctx: _Context):
    chain = []
    for lam, beta, A1, A2 in (
        (-1, 1, 0, 1),
        (-1, -1, Fraction(1, 2), 1),
        (Fraction(-1, 2), Fraction(2, 3), 3, -3),
        (-2, Fraction(-5, 7), Fraction(-1, 3), Fraction(2, 5)),
    ):
        X = teo1li_field(lam, beta, A1, A2)
        Z = flow.chart_transform(X, flow.teo1li_projective_chart())
        Z1 = flow.chart_transform(Z, flow.teo1li_blowup_chart())
        s = MultiPoly.var(3, 0)
        chain.append(
            {
                "params": [_q(lam), _q(beta), _q(A1), _q(A2)],
                "Z_matches": Z == flow.teo1li_Z_expected(lam, beta, A1, A2),
                "Z1_matches": Z1 == flow.teo1li_Z1_expected(lam, beta, A1, A2),
                "A_matches": Z1.components[0] == flow.teo1li_A(lam, beta, A1, A2) * s,
            }
        )
    chain_ok = all(c["Z_matches"] and c["Z1_matches"] and c["A_matches"] for c in chain)
    spectra = []
    sing_ok = True
    eig_ok = True
    for beta in (Fraction(1), Fraction(-1)):
        rep = flow.teo1li_singularities(beta, 0, 1)
        sing_ok &= rep.residuals_zero
        got = sorted(e.real for e in rep.eigen.eigenvalues)
        stated = sorted(float(v) for v in (-beta / 5, -2 * beta / 5, -2 * beta))
        match = all(abs(g - s) <= 1e-10 for g, s in zip(got, stated)) and all(
            abs(e.imag) <= 1e-10 for e in rep.eigen.eigenvalues
        )
        eig_ok &= match
        spectra.append(
            {
                "beta": _q(beta),
                "computed": got,
                "stated": stated,
                "exact_spectrum": [_q(-beta / 5), _q(-4 * beta / 5), _q(-2 * beta)],
                "matches_stated": match,
            }
        )
    details = {"chain": chain, "singularities_annihilate": sing_ok, "spectra": spectra}
    if not eig_ok:
        details["note"] = (
            "the Jacobian of the displayed blown-up field at the third singularity has "
            "spectrum {-beta/5, -4beta/5, -2beta}; the stated -2beta/5 is not attained"
        )
    return _ok(chain_ok and sing_ok and eig_ok), details


def _period3_exact(ctx: _Context):
    cases = []
    good = True
    for lam in (Fraction(1, 2), Fraction(-1, 2), Fraction(1, 4)):
        w = iterate.period3_exact(lam, 1, 1, 0, 1)
        F = w.field()
        img = F.evaluate(F.evaluate(F.evaluate(w.point)))
        dist = min(abs(complex(m) - 1) for m in iterate.witness_orbit(w).multiplier_eigen.eigenvalues)
        ok = (
            img == w.point
            and w.charpoly[0] == -lam ** 9
            and w.p_at_1 == iterate.p_at_1_identity(lam)
            and dist > 1e-6
        )
        good &= ok
        cases.append(
            {
                "lambda": _q(lam),
                "point": [_q(v) for v in w.point],
                "fixed_by_F3": img == w.point,
                "charpoly_constant": _q(w.charpoly[0]),
                "p_at_1": _q(w.p_at_1),
                "min_abs_mu_minus_1": dist,
            }
        )
    good &= cases[0]["p_at_1"] == "-1029/512"
    return _ok(good), {"cases": cases}


def _period2_absence(ctx: _Context):
    p = LinfParams(Fraction(1, 2), 1, 1, 0, poly1([0, 1]))
    F = make_linf(p)
    seeds = iterate.random_seeds(500, 3, 50.0, ctx.seed)
    found = iterate.find_periodic(F, 2, seeds, evaluator=iterate.LinfEvaluator(p))
    pts = [[float(v) for v in o.points[0]] for o in found]
    only_origin = len(found) == 1 and max(abs(v) for v in pts[0]) < 1e-8
    return _ok(only_origin, EVIDENCE), {"seeds": len(seeds), "cycles_found": len(found), "points": pts}


def _teo39_continuation(ctx: _Context):
    w = iterate.period3_exact(Fraction(1, 2), 1, 1, 0, 1)
    try:
        res = iterate.continuation(w, [Fraction(1, 100)])
    except iterate.ContinuationError as exc:
        return FAIL, {"error": str(exc), "last_good": exc.last_good}
    ok = res.orbit.residual < 1e-10 and res.orbit.minimal
    return _ok(ok), {
        "residual": res.orbit.residual,
        "minimal_period_3": res.orbit.minimal,
        "steps": res.steps_taken,
        "halvings": res.halvings,
        "point": [float(v) for v in res.orbit.points[0]],
    }


def _liorsc_lift(ctx: _Context):
    lam = Fraction(1, 2)
    start = iterate.fn2_period3_point(4, lam)
    F = make_fn2(4, lam)
    found = iterate.find_periodic(F, 3, [[float(v) for v in start]])
    ok = len(found) == 1 and found[0].residual < 1e-10 and found[0].minimal
    return _ok(ok), {
        "start": [_q(v) for v in start],
        "residual": found[0].residual if found else None,
        "minimal": found[0].minimal if found else None,
    }


# -- property battery ----------------------------------------------------------------------

def _random_poly(rng: random.Random, nvars: int = 3, terms: int = 4, degree: int = 3) -> MultiPoly:
    out: dict[tuple, Fraction] = {}
    for _ in range(terms):
        e = tuple(rng.randint(0, degree) for _ in range(nvars))
        out[e] = Fraction(rng.randint(-9, 9), rng.randint(1, 5))
    return MultiPoly(nvars, out)


def _property_battery(ctx: _Context):
    rng = random.Random(ctx.seed)
    results = {}

    ring = leib = subst = 0
    for _ in range(40):
        p, q, r = (_random_poly(rng) for _ in range(3))
        ring += (p + q) + r == p + (q + r) and p * (q + r) == p * q + p * r and p * q == q * p
        i = rng.randrange(3)
        leib += (p * q).differentiate(i) == p * q.differentiate(i) + q * p.differentiate(i)
        subs = [_random_poly(rng, terms=2, degree=2) for _ in range(3)]
        pt = [Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for _ in range(3)]
        subst += p.substitute(subs).evaluate(pt) == p.evaluate([s.evaluate(pt) for s in subs])
    results["ring_axioms"] = ring == 40
    results["leibniz"] = leib == 40
    results["substitution_evaluation"] = subst == 40

    trips = 0
    for _ in range(10):
        while True:
            T = [[Fraction(rng.randint(-3, 3)) for _ in range(3)] for _ in range(3)]
            try:
                Tinv = mat_inverse(T)
                break
            except (ValueError, ZeroDivisionError, ArithmeticError):
                continue
        F = PolyMap([_random_poly(rng) for _ in range(3)])
        trips += conjugate_linear(conjugate_linear(F, T), Tinv) == F
    results["conjugation_round_trip"] = trips == 10

    ratios = []
    for lam in (-1.0, -0.5, 1.0):
        errs = []
        for tol in (1e-6, 1e-6 / 32, 1e-6 / 32 ** 2):
            cfg = flow.SimConfig(rel_tol=tol, abs_tol=tol, t_max=1.0, converge_radius=1e-300)
            tr = flow.integrate(lambda y, lam=lam: lam * y, [1.0], cfg)
            errs.append(abs(float(tr.states[-1][0]) - math.exp(lam)))
        ratios += [errs[0] / errs[1], errs[1] / errs[2]]
    results["integrator_order"] = all(8.0 <= r <= 128.0 for r in ratios)
    results["integrator_error_ratios"] = ratios

    w = iterate.period3_exact(Fraction(1, 2), 1, 1, 0, 1)
    hist: list = []
    x = np.array([float(v) for v in w.point]) + 1e-5 * np.random.default_rng(ctx.seed).standard_normal(3)
    iterate.polish_cycle(w.field(), 3, x, iters=10, history=hist)
    quad = [
        float(hist[i + 1] / hist[i] ** 2)
        for i in range(len(hist) - 1)
        if hist[i] < 1e-4 and hist[i + 1] > mpmath.mpf(10) ** -40
    ]
    results["newton_quadratic"] = bool(quad) and max(quad) <= 1e4
    results["newton_quadratic_constants"] = quad

    H = make_hnr(HnrParams(3, 2, poly1([0, 0, 1])))
    F = make_fn2(3, Fraction(1, 2))
    nrng = np.random.default_rng(ctx.seed)
    jd = cd = 0.0
    for _ in range(10):
        pt = nrng.uniform(-1, 1, 3)
        Jx = np.array(jacobian(H).evaluate(list(pt), mode="float"), dtype=float)
        jd = max(jd, float(np.max(np.abs(Jx - fd_jacobian(H.compiled(), pt)))))
        f = F.compiled()
        F3 = lambda y: f(f(f(y)))  # noqa: E731
        Jc = iterate.chain_rule_jacobian(F, 3, pt)
        Jfd = fd_jacobian(F3, pt, 1e-6)
        cd = max(cd, float(np.max(np.abs(Jc - Jfd)) / (1 + np.max(np.abs(Jc)))))
    results["jacobian_vs_fd"] = jd < 1e-6
    results["chain_rule_vs_fd"] = cd < 1e-6
    results["jacobian_fd_error"] = jd
    results["chain_rule_fd_error"] = cd

    ok = all(v for v in results.values() if isinstance(v, bool))
    return _ok(ok, EVIDENCE), results


CLAIMS: tuple[_Claim, ...] = (
    _Claim("nilpotency-family", "H_{n,r}: JH^n = 0, rank r, independent components", 5, _nilpotency_family),
    _Claim("classification", "dependent/independent split and the triangularizability test", 1, _classification),
    _Claim("cy1-attraction", "degree-one dependent field attracts every orbit (flow, lambda < 0)", 10, _cy1_attraction),
    _Claim("dy1-attraction", "degree-one dependent map attracts every orbit (|lambda| < 1)", 5, _dy1_attraction),
    _Claim("y2-continuous-escape", "exponential orbit of the y2 field escapes to infinity", 5, _y2_continuous_escape),
    _Claim("y2-discrete-escape", "geometric orbit of the y2 map escapes to infinity", 2, _y2_discrete_escape),
    _Claim("liorsc-trap", "outward-pointing boundary of the trapping set P_A", 10, _liorsc_trap),
    _Claim("liorsc-conjugation", "F_{3,2} is conjugate to (w, lv - w^2, 2lw + v - l^2 u)", 1, _liorsc_conjugation),
    _Claim("teo1li-blowup", "blown-up field at infinity, its singularities and spectrum", 5, _teo1li_blowup),
    _Claim("period3-exact", "explicit period-3 point, its multipliers and p(1)", 10, _period3_exact),
    _Claim("period2-absence", "the origin is the only period-2 point for g(t) = t", 30, _period2_absence),
    _Claim("teo39-continuation", "period-3 cycle persists under a small higher-order g", 10, _teo39_continuation),
    _Claim("liorsc-lift", "period-3 cycle of F_{3,2} lifts to F_{4,2}", 10, _liorsc_lift),
    _Claim("property-suites", "algebraic and numerical invariants of the toolkit", 60, _property_battery),
)
CLAIM_IDS = tuple(c.claim_id for c in CLAIMS)


def run_verify_suite(
    scope: str | Sequence[str] = "all",
    seed: int = DEFAULT_SEED,
    tamper: dict | None = None,
) -> VerifyReport:
    """Run the selected claims in order.

    ``tamper`` is a debug hook for mutation probes; the only key understood
    is ``"liorsc-trap.p0_offset"`` (a rational added to ``p0``).  A claim that
    raises is reported as failed with the exception text.
    """
    if scope == "all":
        ids = list(CLAIM_IDS)
    else:
        ids = [scope] if isinstance(scope, str) else list(scope)
        unknown = [i for i in ids if i not in CLAIM_IDS]
        if unknown:
            raise ValueError(f"unknown claim id(s): {', '.join(unknown)}")
    ctx = _Context(seed, dict(tamper or {}))
    out = []
    for claim in CLAIMS:
        if claim.claim_id not in ids:
            continue
        t0 = time.perf_counter()
        try:
            status, details = claim.run(ctx)
        except Exception as exc:  # a crashing claim is a failed claim
            status, details = FAIL, {"error": f"{type(exc).__name__}: {exc}"}
        dt = time.perf_counter() - t0
        if dt > claim.budget and status != FAIL:
            status = FAIL
            details["over_budget"] = True
        out.append(ClaimResult(claim.claim_id, claim.anchor, status, details, dt, claim.budget))
    return VerifyReport(out, seed, ctx.tamper)
