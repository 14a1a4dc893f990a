"""Floating-point kernels: damped Newton, small dense eigenproblems, FD Jacobians."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .polycore import PolyMap

DEFAULT_TOL = 1e-12
DEFAULT_MAXIT = 100
MAX_HALVINGS = 30


@dataclass
class NewtonResult:
    point: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    history: list[float] = field(default_factory=list)
    message: str = ""


def _as_system(G):
    """Accept a PolyMap or a ``(residual, jacobian)`` pair of callables."""
    if isinstance(G, PolyMap):
        f, jac = G.compiled(), G.compiled_jacobian()
        return (lambda x: np.asarray(f(x), dtype=float)), (lambda x: np.asarray(jac(x), dtype=float))
    f, jac = G
    return (lambda x: np.asarray(f(x), dtype=float)), (lambda x: np.asarray(jac(x), dtype=float))


def newton_solve(
    G,
    seed: Sequence[float],
    tol: float = DEFAULT_TOL,
    maxit: int = DEFAULT_MAXIT,
    rtol: float = 0.0,
) -> NewtonResult:
    """Damped Newton on a square system.

    Stops when ``||G(x)||_inf <= tol + rtol * ||x||_inf``.  The full step is
    halved (up to 30 times) until the sup-norm of the residual decreases; if
    it never does, the search stops unconverged.  A singular Jacobian also
    ends the search with ``converged=False``.
    """
    if tol <= 0 or rtol < 0:
        raise ValueError("tol must be positive and rtol non-negative")
    f, jac = _as_system(G)
    x = np.array(seed, dtype=float)
    r = f(x)
    res = float(np.max(np.abs(r)))
    history = [res]
    it = 0

    def done(x, res):
        return res <= tol + rtol * float(np.max(np.abs(x)))

    while not done(x, res) and it < maxit:
        it += 1
        J = jac(x)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return NewtonResult(x, res, it, False, history, "singular Jacobian")
        if not np.all(np.isfinite(step)):
            return NewtonResult(x, res, it, False, history, "non-finite step")
        lam = 1.0
        for _ in range(MAX_HALVINGS + 1):
            x_new = x + lam * step
            r_new = f(x_new)
            res_new = float(np.max(np.abs(r_new)))
            if np.isfinite(res_new) and res_new < res:
                break
            lam *= 0.5
        else:
            return NewtonResult(x, res, it, False, history, "line search failed")
        x, r, res = x_new, r_new, res_new
        history.append(res)
    ok = done(x, res)
    return NewtonResult(x, res, it, ok, history, "" if ok else "maxit reached")


@dataclass
class EigenReport:
    matrix: np.ndarray
    eigenvalues: list[complex]
    max_backward_error: float

    def real_parts(self) -> list[float]:
        return [e.real for e in self.eigenvalues]


def eigenvalues(M) -> EigenReport:
    """All eigenvalues of a small dense real matrix (LAPACK Hessenberg-QR).

    Ordered by real part, then imaginary part.  The backward error is
    ``max ||(M - mu I) v|| / (||M|| ||v||)`` over the computed pairs.
    """
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("eigenvalues of a non-square matrix")
    try:
        w, V = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"eigenvalue iteration did not converge: {exc}") from exc
    scale = max(np.linalg.norm(A, 2), np.finfo(float).tiny)
    errs = [
        np.linalg.norm(A @ V[:, i] - w[i] * V[:, i]) / (scale * np.linalg.norm(V[:, i]))
        for i in range(len(w))
    ]
    order = sorted(range(len(w)), key=lambda i: (round(w[i].real, 12), round(w[i].imag, 12)))
    vals = [complex(w[i]) for i in order]
    return EigenReport(A, vals, float(max(errs)) if errs else 0.0)


def fd_jacobian(F: Callable[[np.ndarray], Sequence[float]], point: Sequence[float], h: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian, entrywise."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.array(point, dtype=float)
    f0 = np.asarray(F(x), dtype=float)
    J = np.empty((f0.size, x.size))
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        J[:, j] = (np.asarray(F(x + e), dtype=float) - np.asarray(F(x - e), dtype=float)) / (2 * h)
    return J


@dataclass
class BatchNewtonResult:
    points: np.ndarray  # (m, n)
    residual_norms: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray


def newton_solve_batch(
    f: Callable[[np.ndarray], np.ndarray],
    jac: Callable[[np.ndarray], np.ndarray],
    seeds: np.ndarray,
    tol: float = DEFAULT_TOL,
    maxit: int = DEFAULT_MAXIT,
    rtol: float = 0.0,
) -> BatchNewtonResult:
    """:func:`newton_solve` run on many seeds at once.

    ``f`` maps an ``(n, m)`` array of column points to ``(n, m)`` residuals;
    ``jac`` returns the ``(m, n, n)`` stack of Jacobians.  Each seed has its
    own damping and stops independently, with the same rules as the scalar
    solver.
    """
    X = np.array(seeds, dtype=float).T.copy()
    n, m = X.shape
    with np.errstate(all="ignore"):
        R = f(X)
        res = np.max(np.abs(R), axis=0)
    res[~np.isfinite(res)] = np.inf
    iters = np.zeros(m, dtype=int)
    failed = np.zeros(m, dtype=bool)

    def done(X, res):
        return res <= tol + rtol * np.max(np.abs(X), axis=0)

    for _ in range(maxit):
        active = ~failed & ~done(X, res)
        if not active.any():
            break
        idx = np.flatnonzero(active)
        iters[idx] += 1
        with np.errstate(all="ignore"):
            J = jac(X[:, idx])
        ok = np.all(np.isfinite(J), axis=(1, 2))
        steps = np.zeros((len(idx), n))
        for j in np.flatnonzero(ok):
            try:
                steps[j] = np.linalg.solve(J[j], -R[:, idx[j]])
            except np.linalg.LinAlgError:
                ok[j] = False
        ok &= np.all(np.isfinite(steps), axis=1)
        failed[idx[~ok]] = True
        idx, steps = idx[ok], steps[ok]
        lam = np.ones(len(idx))
        pending = np.ones(len(idx), dtype=bool)
        for _ in range(MAX_HALVINGS + 1):
            if not pending.any():
                break
            sel = np.flatnonzero(pending)
            trial = X[:, idx[sel]] + lam[sel] * steps[sel].T
            with np.errstate(all="ignore"):
                Rt = f(trial)
                rt = np.max(np.abs(Rt), axis=0)
            good = np.isfinite(rt) & (rt < res[idx[sel]])
            g = sel[good]
            X[:, idx[g]] = trial[:, good]
            R[:, idx[g]] = Rt[:, good]
            res[idx[g]] = rt[good]
            pending[g] = False
            lam[sel[~good]] *= 0.5
        failed[idx[pending]] = True
    conv = done(X, res) & np.all(np.isfinite(X), axis=0)
    return BatchNewtonResult(X.T.copy(), res, iters, conv)
