"""JSON field specifications.

Two shapes are accepted::

    {"family": "linf", "params": {"lambda": "1/2", "v1": "1", "alpha": "1",
                                   "b1": "0", "g": [["1", 1]]}}

    {"nvars": 3, "lambda": "1/2",
     "components": [[{"coeff": "1/2", "exps": [1, 0, 0]}], ...]}

Rationals are strings (``"11/16"``) or integers, never floats.  A
one-variable polynomial is a list of ``[coeff, exponent]`` pairs; the
two-variable ``f(z, t)`` of ``ld_normal`` uses ``[coeff, [ez, et]]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

from .families import (
    HnrParams,
    LdNormalParams,
    LinfParams,
    Y2Params,
    degree_one_params,
    make_fn2,
    make_hnr,
    make_ld_normal,
    make_linf,
    make_y2,
    teo1li_field,
)
from .polycore import MultiPoly, PolyMap


class SpecError(ValueError):
    """Invalid field specification, with the offending location."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None, column: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}" + (f", column {column}" if column is not None else ""))
        if field:
            where.append(f"field {field!r}")
        super().__init__(message + (f" ({'; '.join(where)})" if where else ""))
        self.field = field
        self.line = line
        self.column = column


def rational(value: Any, where: str) -> Fraction:
    if isinstance(value, bool) or isinstance(value, float):
        raise SpecError("rationals must be strings like \"3/4\" or integers, not floats or booleans", where)
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise SpecError(f"not a rational: {value!r}", where) from exc
    raise SpecError(f"expected a rational string, got {type(value).__name__}", where)


def integer(value: Any, where: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecError("expected an integer", where)
    if minimum is not None and value < minimum:
        raise SpecError(f"must be at least {minimum}", where)
    return value


def _fmt(q: Fraction) -> str:
    return str(q)


def univariate(value: Any, where: str) -> MultiPoly:
    if not isinstance(value, list):
        raise SpecError("expected a list of [coeff, exponent] pairs", where)
    terms: dict[tuple, Fraction] = {}
    for i, item in enumerate(value):
        if not (isinstance(item, list) and len(item) == 2):
            raise SpecError("each term must be [coeff, exponent]", f"{where}[{i}]")
        e = integer(item[1], f"{where}[{i}][1]", 0)
        terms[(e,)] = terms.get((e,), Fraction(0)) + rational(item[0], f"{where}[{i}][0]")
    return MultiPoly(1, terms)


def univariate_json(p: MultiPoly) -> list:
    return [[_fmt(c), e[0]] for e, c in p.sorted_terms()]


def bivariate(value: Any, where: str) -> MultiPoly:
    if not isinstance(value, list):
        raise SpecError("expected a list of [coeff, [ez, et]] pairs", where)
    terms: dict[tuple, Fraction] = {}
    for i, item in enumerate(value):
        if not (isinstance(item, list) and len(item) == 2 and isinstance(item[1], list) and len(item[1]) == 2):
            raise SpecError("each term must be [coeff, [ez, et]]", f"{where}[{i}]")
        e = tuple(integer(v, f"{where}[{i}][1]", 0) for v in item[1])
        terms[e] = terms.get(e, Fraction(0)) + rational(item[0], f"{where}[{i}][0]")
    return MultiPoly(2, terms)


def bivariate_json(p: MultiPoly) -> list:
    return [[_fmt(c), list(e)] for e, c in p.sorted_terms()]


# name -> (kind, required) ; kind in rational | int | uni | bi
_SCHEMAS: dict[str, dict[str, tuple[str, bool]]] = {
    "y2": {"lambda": ("rational", True), "k": ("int", False)},
    "ld_normal": {
        "lambda": ("rational", True),
        "a": ("uni", True),
        "b": ("uni", True),
        "c": ("uni", False),
        "d": ("uni", False),
        "f": ("bi", True),
    },
    "degree_one": {
        "lambda": ("rational", True),
        "a": ("uni", True),
        "b": ("uni", True),
        "c": ("uni", False),
        "d": ("uni", False),
        "g": ("uni", True),
    },
    "hnr": {"n": ("int", True), "r": ("int", True), "a": ("uni", True), "lambda": ("rational", False)},
    "fn2": {"n": ("int", True), "lambda": ("rational", True), "a": ("rational", False), "b": ("rational", False)},
    "linf": {
        "lambda": ("rational", True),
        "v1": ("rational", True),
        "alpha": ("rational", True),
        "b1": ("rational", False),
        "g": ("uni", True),
    },
    "teo1li": {
        "lambda": ("rational", True),
        "beta": ("rational", True),
        "A1": ("rational", True),
        "A2": ("rational", True),
    },
}
# aliases for the attracting degree-one instances
_ALIASES = {"cy1": "degree_one", "dy1": "degree_one"}
FAMILIES = sorted(set(_SCHEMAS) | set(_ALIASES))

_ZERO = MultiPoly.zero(1)


def _decode_params(family: str, raw: Any) -> dict:
    schema = _SCHEMAS[_ALIASES.get(family, family)]
    if not isinstance(raw, dict):
        raise SpecError("params must be an object", "params")
    unknown = set(raw) - set(schema)
    if unknown:
        raise SpecError(f"unknown parameter(s) {sorted(unknown)} for family {family!r}", "params")
    out = {}
    for name, (kind, required) in schema.items():
        where = f"params.{name}"
        if name not in raw:
            if required:
                raise SpecError("missing required parameter", where)
            continue
        v = raw[name]
        if kind == "rational":
            out[name] = rational(v, where)
        elif kind == "int":
            out[name] = integer(v, where, 1)
        elif kind == "uni":
            out[name] = univariate(v, where)
        else:
            out[name] = bivariate(v, where)
    return out


def _encode_params(params: dict) -> dict:
    out = {}
    for k, v in sorted(params.items()):
        if isinstance(v, Fraction):
            out[k] = _fmt(v)
        elif isinstance(v, MultiPoly):
            out[k] = univariate_json(v) if v.nvars == 1 else bivariate_json(v)
        else:
            out[k] = v
    return out


def _build_family(family: str, p: dict) -> tuple[PolyMap, Fraction]:
    fam = _ALIASES.get(family, family)
    lam = p.get("lambda", Fraction(0))
    if fam == "y2":
        return make_y2(Y2Params(lam, p.get("k", 1))), lam
    if fam == "ld_normal":
        params = LdNormalParams(lam, p["a"], p["b"], p.get("c", _ZERO), p.get("d", _ZERO), p["f"])
        return make_ld_normal(params), lam
    if fam == "degree_one":
        params = degree_one_params(lam, p["a"], p["b"], p.get("c", _ZERO), p.get("d", _ZERO), p["g"])
        return make_ld_normal(params), lam
    if fam == "hnr":
        H = make_hnr(HnrParams(p["n"], p["r"], p["a"]))
        return PolyMap.scaled_identity(p["n"], lam) + H, lam
    if fam == "fn2":
        return make_fn2(p["n"], lam, p.get("a", Fraction(0)), p.get("b", Fraction(1))), lam
    if fam == "linf":
        return make_linf(linf_params(p)), lam
    if fam == "teo1li":
        return teo1li_field(lam, p["beta"], p["A1"], p["A2"]), lam
    raise SpecError(f"unknown family {family!r}", "family")


def linf_params(p: dict) -> LinfParams:
    return LinfParams(p["lambda"], p["v1"], p["alpha"], p.get("b1", Fraction(0)), p["g"])


@dataclass
class FieldSpec:
    family: str | None = None
    params: dict = field(default_factory=dict)
    nvars: int | None = None
    components: list[MultiPoly] | None = None
    lam: Fraction | None = None

    def build(self) -> tuple[PolyMap, Fraction]:
        """The field and its ``lambda``; invariant violations raise :class:`SpecError`."""
        try:
            if self.family is not None:
                return _build_family(self.family, self.params)
            return PolyMap(self.components), self.lam
        except SpecError:
            raise
        except (ValueError, ArithmeticError) as exc:
            raise SpecError(str(exc), "params" if self.family else "components") from exc

    def to_dict(self) -> dict:
        if self.family is not None:
            return {"family": self.family, "params": _encode_params(self.params)}
        return {
            "nvars": self.nvars,
            "lambda": _fmt(self.lam),
            "components": [
                [{"coeff": _fmt(c), "exps": list(e)} for e, c in p.sorted_terms()] for p in self.components
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def __eq__(self, other) -> bool:
        return isinstance(other, FieldSpec) and self.to_dict() == other.to_dict()


def field_spec_from_obj(obj: Any) -> FieldSpec:
    if not isinstance(obj, dict):
        raise SpecError("a field specification must be a JSON object")
    if "family" in obj:
        extra = set(obj) - {"family", "params"}
        if extra:
            raise SpecError(f"unexpected keys {sorted(extra)}", "family")
        family = obj["family"]
        if family not in FAMILIES:
            raise SpecError(f"unknown family {family!r}; known: {', '.join(FAMILIES)}", "family")
        spec = FieldSpec(family=family, params=_decode_params(family, obj.get("params", {})))
    elif "components" in obj:
        nvars = integer(obj.get("nvars"), "nvars", 1)
        lam = rational(obj.get("lambda", "0"), "lambda")
        comps_raw = obj["components"]
        if not isinstance(comps_raw, list) or not comps_raw:
            raise SpecError("components must be a nonempty list", "components")
        comps = []
        for i, term_list in enumerate(comps_raw):
            where = f"components[{i}]"
            if not isinstance(term_list, list):
                raise SpecError("each component is a list of terms", where)
            terms: dict[tuple, Fraction] = {}
            for j, term in enumerate(term_list):
                tw = f"{where}[{j}]"
                if not isinstance(term, dict) or set(term) != {"coeff", "exps"}:
                    raise SpecError("a term is {\"coeff\": ..., \"exps\": [...]}", tw)
                exps = term["exps"]
                if not isinstance(exps, list) or len(exps) != nvars:
                    raise SpecError(f"exps must be a list of {nvars} integers", tw + ".exps")
                e = tuple(integer(v, tw + ".exps", 0) for v in exps)
                terms[e] = terms.get(e, Fraction(0)) + rational(term["coeff"], tw + ".coeff")
            comps.append(MultiPoly(nvars, terms))
        spec = FieldSpec(nvars=nvars, components=comps, lam=lam)
    else:
        raise SpecError("expected either a 'family' or a 'components' key")
    spec.build()
    return spec


def _line_of(text: str, key: str | None) -> int | None:
    if not key:
        return None
    head = key.split(".")[-1].split("[")[0]
    idx = text.find(f'"{head}"')
    return text.count("\n", 0, idx) + 1 if idx >= 0 else None


def parse_field_spec(text: bytes | str) -> FieldSpec:
    """Decode and validate a JSON field specification."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SpecError(f"not UTF-8: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"malformed JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from exc
    try:
        return field_spec_from_obj(obj)
    except SpecError as exc:
        if exc.line is None and exc.field:
            raise SpecError(str(exc).split(" (")[0], exc.field, _line_of(text, exc.field)) from exc
        raise
