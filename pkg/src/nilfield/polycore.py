"""Exact sparse multivariate polynomials over the rationals.

Everything else in the package is built on three immutable types:

* :class:`MultiPoly` -- a sparse polynomial with :class:`fractions.Fraction`
  coefficients keyed by exponent tuples.  Negative exponents are tolerated so
  that monomial charts (``1/v``, ``v/u**3``) can be pushed through exactly;
  :attr:`MultiPoly.is_polynomial` tells the two apart.
* :class:`PolyMap` -- a tuple of polynomials sharing the same ring, used for
  vector fields, maps and coordinate changes.
* :class:`PolyMatrix` -- a grid of polynomials (Jacobians and their powers).

A few exact dense linear-algebra helpers over ``Fraction`` live at the bottom
of the module; they back the dependence and rank computations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, Sequence

NEG_INF = float("-inf")

Scalar = int | Fraction


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to ``Fraction``."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(value, (int, str, float)):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a rational number")


def _pairwise_sum(values: Sequence):
    n = len(values)
    if n == 0:
        return 0.0
    if n == 1:
        return values[0]
    if n == 2:
        return values[0] + values[1]
    mid = n // 2
    return _pairwise_sum(values[:mid]) + _pairwise_sum(values[mid:])


class MultiPoly:
    """Sparse polynomial in ``nvars`` variables with rational coefficients."""

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[tuple, Scalar] | None = None):
        if nvars < 0:
            raise ValueError("nvars must be non-negative")
        clean: dict[tuple, Fraction] = {}
        for exps, coeff in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars:
                raise ValueError(f"exponent {exps} does not have length {nvars}")
            c = as_fraction(coeff)
            if c:
                clean[exps] = clean.get(exps, Fraction(0)) + c
                if not clean[exps]:
                    del clean[exps]
        self.nvars = nvars
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, nvars: int, terms: dict) -> "MultiPoly":
        obj = cls.__new__(cls)
        obj.nvars = nvars
        obj._terms = terms
        obj._hash = None
        return obj

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "MultiPoly":
        return cls._raw(nvars, {})

    @classmethod
    def constant(cls, nvars: int, c: Scalar) -> "MultiPoly":
        c = as_fraction(c)
        return cls._raw(nvars, {(0,) * nvars: c} if c else {})

    @classmethod
    def var(cls, nvars: int, index: int) -> "MultiPoly":
        if not 0 <= index < nvars:
            raise IndexError(f"variable {index} out of range for {nvars} variables")
        exps = [0] * nvars
        exps[index] = 1
        return cls._raw(nvars, {tuple(exps): Fraction(1)})

    @classmethod
    def monomial(cls, nvars: int, exps: Sequence[int], c: Scalar = 1) -> "MultiPoly":
        return cls(nvars, {tuple(exps): c})

    @classmethod
    def univariate(cls, coeffs: Sequence[Scalar], nvars: int = 1, index: int = 0) -> "MultiPoly":
        """Polynomial ``sum(coeffs[k] * x_index**k)``."""
        terms = {}
        for k, c in enumerate(coeffs):
            exps = [0] * nvars
            exps[index] = k
            terms[tuple(exps)] = c
        return cls(nvars, terms)

    # -- inspection ---------------------------------------------------------
    @property
    def terms(self) -> Mapping[tuple, Fraction]:
        return MappingProxyType(self._terms)

    def sorted_terms(self) -> list[tuple[tuple, Fraction]]:
        """Terms in lexicographic exponent order (the serialization order)."""
        return sorted(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self.nvars, Fraction(0))

    @property
    def is_polynomial(self) -> bool:
        return all(e >= 0 for exps in self._terms for e in exps)

    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    def degree(self, var: int | None = None):
        """Degree in ``var`` (total degree if ``None``); ``-inf`` for zero."""
        if not self._terms:
            return NEG_INF
        if var is None:
            return max(sum(e) for e in self._terms)
        return max(e[var] for e in self._terms)

    def depends_on(self, var: int) -> bool:
        return any(e[var] for e in self._terms)

    def coefficient(self, exps: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(exps), Fraction(0))

    # -- arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise ValueError(f"nvars mismatch: {self.nvars} vs {other.nvars}")
            return other
        return MultiPoly.constant(self.nvars, as_fraction(other))

    def __add__(self, other) -> "MultiPoly":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self._terms)
        for e, c in other._terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return MultiPoly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly._raw(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> "MultiPoly":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "MultiPoly":
        return (-self) + other

    def __mul__(self, other) -> "MultiPoly":
        if not isinstance(other, MultiPoly):
            try:
                c = as_fraction(other)
            except TypeError:
                return NotImplemented
            if not c:
                return MultiPoly.zero(self.nvars)
            return MultiPoly._raw(self.nvars, {e: v * c for e, v in self._terms.items()})
        other = self._coerce(other)
        out: dict[tuple, Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return MultiPoly._raw(self.nvars, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, other) -> "MultiPoly":
        c = as_fraction(other)
        if not c:
            raise ZeroDivisionError("division of a polynomial by zero")
        return self * (1 / c)

    def __pow__(self, k: int) -> "MultiPoly":
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            if not self.is_monomial():
                raise ValueError("negative powers are only defined for monomials")
            (e, c), = self._terms.items()
            return MultiPoly._raw(self.nvars, {tuple(k * a for a in e): c ** k})
        result = MultiPoly.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, MultiPoly):
            return self.nvars == other.nvars and self._terms == other._terms
        try:
            return self == MultiPoly.constant(self.nvars, as_fraction(other))
        except TypeError:
            return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    # -- calculus and evaluation -------------------------------------------
    def differentiate(self, var: int) -> "MultiPoly":
        if not 0 <= var < self.nvars:
            raise IndexError(f"variable {var} out of range")
        out = {}
        for e, c in self._terms.items():
            k = e[var]
            if k:
                ne = list(e)
                ne[var] = k - 1
                out[tuple(ne)] = c * k
        return MultiPoly._raw(self.nvars, out)

    def evaluate(self, point: Sequence, mode: str = "exact"):
        if len(point) != self.nvars:
            raise ValueError(f"point has length {len(point)}, expected {self.nvars}")
        if mode == "exact":
            pt = [as_fraction(v) for v in point]
            total = Fraction(0)
            for e, c in self._terms.items():
                term = c
                for v, k in zip(pt, e):
                    if k:
                        term *= v ** k
                total += term
            return total
        if mode == "float":
            pt = [float(v) for v in point]
            parts = []
            for e, c in self._terms.items():
                term = float(c)
                for v, k in zip(pt, e):
                    if k:
                        term *= v ** k
                parts.append(term)
            return float(_pairwise_sum(parts))
        raise ValueError(f"unknown evaluation mode {mode!r}")

    def evaluate_with(self, point: Sequence, convert: Callable[[Fraction], object]):
        """Evaluate in any numeric type; ``convert`` maps coefficients into it."""
        if len(point) != self.nvars:
            raise ValueError(f"point has length {len(point)}, expected {self.nvars}")
        parts = []
        for e, c in self._terms.items():
            term = convert(c)
            for v, k in zip(point, e):
                if k:
                    term = term * v ** k
            parts.append(term)
        if not parts:
            return convert(Fraction(0))
        return _pairwise_sum(parts)

    def substitute(self, assignment: Mapping[int, "MultiPoly"] | Sequence["MultiPoly"]) -> "MultiPoly":
        """Replace variables by polynomials; unassigned variables stay put.

        All replacements must share one ring.  Keeping a variable is only
        possible when that ring has the same number of variables.
        """
        if not isinstance(assignment, Mapping):
            assignment = dict(enumerate(assignment))
        rings = {p.nvars for p in assignment.values()}
        if len(rings) > 1:
            raise ValueError("replacement polynomials must share nvars")
        target = rings.pop() if rings else self.nvars
        images = []
        for i in range(self.nvars):
            if i in assignment:
                images.append(assignment[i])
            elif target == self.nvars:
                images.append(MultiPoly.var(target, i))
            else:
                raise ValueError(f"variable {i} has no image in a {target}-variable ring")
        cache: dict[tuple[int, int], MultiPoly] = {}

        def power(i: int, k: int) -> MultiPoly:
            key = (i, k)
            if key not in cache:
                cache[key] = images[i] ** k
            return cache[key]

        result: dict[tuple, Fraction] = {}
        for e, c in self._terms.items():
            term = MultiPoly.constant(target, c)
            for i, k in enumerate(e):
                if k:
                    term = term * power(i, k)
            for te, tc in term._terms.items():
                s = result.get(te, 0) + tc
                if s:
                    result[te] = s
                else:
                    result.pop(te, None)
        return MultiPoly._raw(target, result)

    def extend(self, nvars: int, positions: Sequence[int] | None = None) -> "MultiPoly":
        """Embed into a larger ring, placing variable ``i`` at ``positions[i]``."""
        positions = list(range(self.nvars)) if positions is None else list(positions)
        out = {}
        for e, c in self._terms.items():
            ne = [0] * nvars
            for i, k in enumerate(e):
                ne[positions[i]] = k
            out[tuple(ne)] = c
        return MultiPoly._raw(nvars, out)

    # -- display ------------------------------------------------------------
    def to_string(self, names: Sequence[str] | None = None) -> str:
        if not self._terms:
            return "0"
        names = names or [f"x{i + 1}" for i in range(self.nvars)]
        pieces = []
        for e, c in sorted(self._terms.items(), reverse=True):
            mono = "*".join(
                n if k == 1 else f"{n}^{k}" for n, k in zip(names, e) if k
            )
            if not mono:
                pieces.append(str(c))
            elif c == 1:
                pieces.append(mono)
            elif c == -1:
                pieces.append("-" + mono)
            else:
                pieces.append(f"{c}*{mono}" if c.denominator == 1 else f"({c})*{mono}")
        return " + ".join(pieces).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"MultiPoly({self.nvars}, {self.to_string()})"


# -- module-level operations ---------------------------------------------------

def poly_arith(p: MultiPoly, q: MultiPoly, op: str) -> MultiPoly:
    if p.nvars != q.nvars:
        raise ValueError(f"nvars mismatch: {p.nvars} vs {q.nvars}")
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    raise ValueError(f"unknown op {op!r}")


def differentiate(p: MultiPoly, var: int) -> MultiPoly:
    return p.differentiate(var)


def evaluate(p: MultiPoly, point: Sequence, mode: str = "exact"):
    return p.evaluate(point, mode)


def substitute(p: MultiPoly, assignment) -> MultiPoly:
    return p.substitute(assignment)


# -- code generation for fast float evaluation ----------------------------------

def _term_source(exps: tuple, coeff: float) -> str:
    factors = [repr(coeff)]
    for i, k in enumerate(exps):
        if k == 1:
            factors.append(f"x[{i}]")
        elif k:
            factors.append(f"x[{i}]**{k}")
    return "*".join(factors)


def _sum_source(parts: list[str]) -> str:
    if not parts:
        return "0.0"
    if len(parts) == 1:
        return parts[0]
    mid = len(parts) // 2
    return f"({_sum_source(parts[:mid])} + {_sum_source(parts[mid:])})"


def _poly_source(p: MultiPoly) -> str:
    return _sum_source([_term_source(e, float(c)) for e, c in p.sorted_terms()])


class PolyMap:
    """Ordered tuple of polynomials in a common ring."""

    __slots__ = ("nvars", "components", "_compiled", "_compiled_jac")

    def __init__(self, components: Iterable[MultiPoly], nvars: int | None = None):
        comps = tuple(components)
        if not comps:
            raise ValueError("a PolyMap needs at least one component")
        ring = {c.nvars for c in comps}
        if len(ring) != 1:
            raise ValueError("all components must share nvars")
        n = ring.pop()
        if nvars is not None and nvars != n:
            raise ValueError(f"components live in {n} variables, expected {nvars}")
        self.nvars = n
        self.components = comps
        self._compiled = None
        self._compiled_jac = None

    @classmethod
    def identity(cls, n: int) -> "PolyMap":
        return cls(MultiPoly.var(n, i) for i in range(n))

    @classmethod
    def scaled_identity(cls, n: int, lam: Scalar) -> "PolyMap":
        return cls(MultiPoly.var(n, i) * lam for i in range(n))

    @classmethod
    def linear(cls, matrix: Sequence[Sequence[Scalar]]) -> "PolyMap":
        n = len(matrix[0])
        xs = [MultiPoly.var(n, j) for j in range(n)]
        comps = []
        for row in matrix:
            p = MultiPoly.zero(n)
            for c, x in zip(row, xs):
                p = p + x * as_fraction(c)
            comps.append(p)
        return cls(comps, nvars=n)

    def __len__(self) -> int:
        return len(self.components)

    def __getitem__(self, i: int) -> MultiPoly:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    @property
    def is_square(self) -> bool:
        return len(self.components) == self.nvars

    def __eq__(self, other) -> bool:
        return isinstance(other, PolyMap) and self.components == other.components

    def __hash__(self) -> int:
        return hash(self.components)

    def __add__(self, other: "PolyMap") -> "PolyMap":
        return PolyMap(a + b for a, b in zip(self.components, other.components, strict=True))

    def __sub__(self, other: "PolyMap") -> "PolyMap":
        return PolyMap(a - b for a, b in zip(self.components, other.components, strict=True))

    def scale(self, c: Scalar) -> "PolyMap":
        return PolyMap(p * c for p in self.components)

    def evaluate(self, point: Sequence, mode: str = "exact") -> list:
        return [p.evaluate(point, mode) for p in self.components]

    def substitute(self, assignment) -> "PolyMap":
        return PolyMap(p.substitute(assignment) for p in self.components)

    def compose(self, inner: "PolyMap") -> "PolyMap":
        """Return ``self o inner``."""
        return compose_map(self, inner)

    def jacobian(self) -> "PolyMatrix":
        return jacobian(self)

    def is_triangular(self) -> bool:
        """Component ``i`` depends only on variables ``0..i``."""
        return all(
            not p.depends_on(j)
            for i, p in enumerate(self.components)
            for j in range(i + 1, self.nvars)
        )

    def degree(self) -> int:
        return max(p.degree() for p in self.components)

    def compiled(self) -> Callable[[Sequence[float]], list[float]]:
        """Fast float evaluator (generated source, pairwise term sums)."""
        if self._compiled is None:
            body = ", ".join(_poly_source(p) for p in self.components)
            self._compiled = eval(f"lambda x: [{body}]", {})  # noqa: S307 - generated from our own terms
        return self._compiled

    def compiled_jacobian(self) -> Callable[[Sequence[float]], list[list[float]]]:
        if self._compiled_jac is None:
            J = jacobian(self)
            rows = ", ".join(
                "[" + ", ".join(_poly_source(e) for e in row) + "]" for row in J.entries
            )
            self._compiled_jac = eval(f"lambda x: [{rows}]", {})  # noqa: S307
        return self._compiled_jac

    def to_strings(self, names: Sequence[str] | None = None) -> list[str]:
        return [p.to_string(names) for p in self.components]

    def __repr__(self) -> str:
        return f"PolyMap({', '.join(self.to_strings())})"


class PolyMatrix:
    """Dense matrix of polynomials in a common ring."""

    __slots__ = ("rows", "cols", "nvars", "entries")

    def __init__(self, entries: Sequence[Sequence[MultiPoly]]):
        grid = tuple(tuple(row) for row in entries)
        if not grid or not grid[0]:
            raise ValueError("empty matrix")
        cols = len(grid[0])
        if any(len(r) != cols for r in grid):
            raise ValueError("ragged matrix")
        ring = {e.nvars for r in grid for e in r}
        if len(ring) != 1:
            raise ValueError("all entries must share nvars")
        self.rows = len(grid)
        self.cols = cols
        self.nvars = ring.pop()
        self.entries = grid

    @classmethod
    def identity(cls, n: int, nvars: int) -> "PolyMatrix":
        one, zero = MultiPoly.constant(nvars, 1), MultiPoly.zero(nvars)
        return cls([[one if i == j else zero for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, rows: int, cols: int, nvars: int) -> "PolyMatrix":
        zero = MultiPoly.zero(nvars)
        return cls([[zero] * cols for _ in range(rows)])

    def __getitem__(self, ij: tuple[int, int]) -> MultiPoly:
        i, j = ij
        return self.entries[i][j]

    def __eq__(self, other) -> bool:
        return isinstance(other, PolyMatrix) and self.entries == other.entries

    def __hash__(self) -> int:
        return hash(self.entries)

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def is_zero(self) -> bool:
        return all(e.is_zero() for r in self.entries for e in r)

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        return PolyMatrix(
            [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)]
        )

    def __sub__(self, other: "PolyMatrix") -> "PolyMatrix":
        return PolyMatrix(
            [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)]
        )

    def scale(self, c) -> "PolyMatrix":
        return PolyMatrix([[e * c for e in r] for r in self.entries])

    def __matmul__(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.cols != other.rows:
            raise ValueError("inner dimensions do not match")
        zero = MultiPoly.zero(self.nvars)
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = zero
                for k in range(self.cols):
                    a = self.entries[i][k]
                    b = other.entries[k][j]
                    if a._terms and b._terms:
                        acc = acc + a * b
                row.append(acc)
            out.append(row)
        return PolyMatrix(out)

    def transpose(self) -> "PolyMatrix":
        return PolyMatrix([list(col) for col in zip(*self.entries)])

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "PolyMatrix":
        return PolyMatrix([[self.entries[i][j] for j in cols] for i in rows])

    def det(self) -> MultiPoly:
        """Exact determinant by cofactor expansion (fine for the small sizes used here)."""
        if not self.is_square:
            raise ValueError("determinant of a non-square matrix")
        return _det_poly(self.entries, tuple(range(self.rows)), tuple(range(self.cols)), {})

    def evaluate(self, point: Sequence, mode: str = "exact") -> list[list]:
        return [[e.evaluate(point, mode) for e in r] for r in self.entries]

    def substitute(self, assignment) -> "PolyMatrix":
        return PolyMatrix([[e.substitute(assignment) for e in r] for r in self.entries])

    def __repr__(self) -> str:
        return "PolyMatrix([" + "; ".join(
            ", ".join(e.to_string() for e in r) for r in self.entries
        ) + "])"


def _det_poly(entries, rows: tuple, cols: tuple, memo: dict) -> MultiPoly:
    key = (rows, cols)
    if key in memo:
        return memo[key]
    if len(rows) == 1:
        return entries[rows[0]][cols[0]]
    nvars = entries[0][0].nvars
    total = MultiPoly.zero(nvars)
    r0, rest = rows[0], rows[1:]
    for idx, c in enumerate(cols):
        e = entries[r0][c]
        if e.is_zero():
            continue
        minor = _det_poly(entries, rest, cols[:idx] + cols[idx + 1:], memo)
        if minor.is_zero():
            continue
        term = e * minor
        total = total - term if idx % 2 else total + term
    memo[key] = total
    return total


def jacobian(F: PolyMap) -> PolyMatrix:
    return PolyMatrix([[p.differentiate(j) for j in range(F.nvars)] for p in F.components])


def mat_pow(M: PolyMatrix, k: int) -> PolyMatrix:
    """Exact ``M**k`` by repeated squaring; ``k = 0`` gives the identity."""
    if not M.is_square:
        raise ValueError("matrix power of a non-square matrix")
    if k < 0:
        raise ValueError("negative matrix power")
    result = PolyMatrix.identity(M.rows, M.nvars)
    base = M
    while k:
        if k & 1:
            result = result @ base
        k >>= 1
        if k:
            base = base @ base
    return result


def compose_map(F: PolyMap, G: PolyMap) -> PolyMap:
    """Exact ``F o G``."""
    if len(G) != F.nvars:
        raise ValueError(f"G has {len(G)} outputs but F takes {F.nvars} inputs")
    return F.substitute(list(G.components))


# -- exact dense linear algebra over Fraction -------------------------------------

def rref(matrix: Sequence[Sequence[Scalar]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form and pivot columns."""
    A = [[as_fraction(v) for v in row] for row in matrix]
    if not A:
        return [], []
    nrows, ncols = len(A), len(A[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, nrows) if A[i][c]), None)
        if pivot is None:
            continue
        A[r], A[pivot] = A[pivot], A[r]
        inv = 1 / A[r][c]
        A[r] = [v * inv for v in A[r]]
        for i in range(nrows):
            if i != r and A[i][c]:
                f = A[i][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return A, pivots


def nullspace(matrix: Sequence[Sequence[Scalar]], ncols: int | None = None) -> list[list[Fraction]]:
    """Basis of ``{v : matrix @ v = 0}``, one vector per free column."""
    if ncols is None:
        ncols = len(matrix[0]) if matrix else 0
    if not matrix:
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    R, pivots = rref(matrix)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, p in zip(R, pivots):
            v[p] = -row[f]
        basis.append(v)
    return basis


def rank(matrix: Sequence[Sequence[Scalar]]) -> int:
    return len(rref(matrix)[1]) if matrix else 0


def mat_inverse(matrix: Sequence[Sequence[Scalar]]) -> list[list[Fraction]]:
    n = len(matrix)
    if any(len(row) != n for row in matrix):
        raise ValueError("inverse of a non-square matrix")
    aug = [list(row) + [int(i == j) for j in range(n)] for i, row in enumerate(matrix)]
    R, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise ValueError("matrix is singular")
    return [row[n:] for row in R]


def mat_mul(A: Sequence[Sequence], B: Sequence[Sequence]) -> list[list]:
    return [[sum((a * b for a, b in zip(row, col)), start=0 * row[0]) for col in zip(*B)] for row in A]


def det_exact(matrix: Sequence[Sequence[Scalar]]) -> Fraction:
    A = [[as_fraction(v) for v in row] for row in matrix]
    n = len(A)
    det = Fraction(1)
    for c in range(n):
        pivot = next((i for i in range(c, n) if A[i][c]), None)
        if pivot is None:
            return Fraction(0)
        if pivot != c:
            A[c], A[pivot] = A[pivot], A[c]
            det = -det
        det *= A[c][c]
        for i in range(c + 1, n):
            if A[i][c]:
                f = A[i][c] / A[c][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[c])]
    return det


def primitive_vector(v: Sequence[Fraction]) -> list[Fraction]:
    """Scale to coprime integers with the first nonzero entry positive."""
    from math import gcd, lcm

    den = 1
    for x in v:
        den = lcm(den, x.denominator)
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    if g == 0:
        return [Fraction(0)] * len(v)
    lead = next(x for x in ints if x)
    sign = 1 if lead > 0 else -1
    return [Fraction(sign * x // g) for x in ints]


# -- conjugation --------------------------------------------------------------------

def conjugate_linear(F: PolyMap, T: Sequence[Sequence[Scalar]], mode: str = "continuous") -> PolyMap:
    """``T o F o T^-1`` for an invertible rational matrix ``T``.

    For a linear change the continuous pushforward ``DT . F o T^-1`` and the
    discrete conjugate coincide, so ``mode`` only gets validated.
    """
    if mode not in ("continuous", "discrete"):
        raise ValueError(f"unknown mode {mode!r}")
    Tinv = mat_inverse(T)
    return compose_map(compose_map(PolyMap.linear(T), F), PolyMap.linear(Tinv))


@dataclass(frozen=True)
class ChartPair:
    """A polynomial change of coordinates with a polynomial inverse.

    ``forward`` maps old coordinates to new ones.  Both round trips are
    checked symbolically on construction.
    """

    forward: PolyMap
    inverse: PolyMap
    mode: str = "continuous"

    def __post_init__(self):
        if self.mode not in ("continuous", "discrete"):
            raise ValueError(f"unknown mode {self.mode!r}")
        n = self.forward.nvars
        if not (self.forward.is_square and self.inverse.is_square and self.inverse.nvars == n):
            raise ValueError("chart maps must be square and of equal dimension")
        ident = PolyMap.identity(n)
        if compose_map(self.forward, self.inverse) != ident:
            raise ValueError("forward o inverse is not the identity")
        if compose_map(self.inverse, self.forward) != ident:
            raise ValueError("inverse o forward is not the identity")

    @classmethod
    def linear(cls, T: Sequence[Sequence[Scalar]], mode: str = "continuous") -> "ChartPair":
        return cls(PolyMap.linear(T), PolyMap.linear(mat_inverse(T)), mode)

    @classmethod
    def identity(cls, n: int, mode: str = "continuous") -> "ChartPair":
        return cls(PolyMap.identity(n), PolyMap.identity(n), mode)

    def with_mode(self, mode: str) -> "ChartPair":
        return ChartPair(self.forward, self.inverse, mode)


def conjugate_polynomial(F: PolyMap, chart: ChartPair) -> PolyMap:
    """Transport ``F`` through ``chart``.

    Continuous mode returns the pushforward ``J_fwd(inv(y)) . F(inv(y))``;
    discrete mode returns ``fwd o F o inv``.
    """
    if not isinstance(chart, ChartPair):
        raise TypeError("conjugate_polynomial needs a verified ChartPair")
    inv = list(chart.inverse.components)
    if chart.mode == "discrete":
        return compose_map(compose_map(chart.forward, F), chart.inverse)
    J = jacobian(chart.forward).substitute(inv)
    Fy = F.substitute(inv)
    comps = []
    for row in J.entries:
        acc = MultiPoly.zero(F.nvars)
        for a, b in zip(row, Fy.components):
            if not a.is_zero() and not b.is_zero():
                acc = acc + a * b
        comps.append(acc)
    return PolyMap(comps)


def variables(n: int) -> list[MultiPoly]:
    """The coordinate functions ``x_0..x_{n-1}`` of an ``n``-variable ring."""
    return [MultiPoly.var(n, i) for i in range(n)]


def all_minors(M: PolyMatrix, size: int):
    """Yield ``(rows, cols, det)`` for every ``size x size`` minor."""
    for rows in itertools.combinations(range(M.rows), size):
        for cols in itertools.combinations(range(M.cols), size):
            yield rows, cols, M.submatrix(rows, cols).det()
