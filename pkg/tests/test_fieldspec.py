import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nilfield.classify import classify_field
from nilfield.families import LinfParams, Y2Params, make_linf, make_y2, poly1
from nilfield.fieldspec import FAMILIES, FieldSpec, SpecError, field_spec_from_obj, parse_field_spec
from nilfield.polycore import PolyMap
from strategies import nonzero_rationals, small_rationals

Q = Fraction


def test_y2_example():
    F, lam = parse_field_spec(b'{"family":"y2","params":{"lambda":"-1","k":1}}').build()
    assert lam == -1 and F == make_y2(Y2Params(-1, 1))


def test_linf_example():
    text = b'{"family":"linf","params":{"lambda":"1/2","v1":"1","alpha":"1","b1":"0","g":[["1",1]]}}'
    F, lam = parse_field_spec(text).build()
    assert lam == Q(1, 2) and F == make_linf(LinfParams(Q(1, 2), 1, 1, 0, poly1([0, 1])))


def test_explicit_scaled_identity():
    text = json.dumps(
        {
            "nvars": 3,
            "lambda": "-2/3",
            "components": [[{"coeff": "-2/3", "exps": [int(i == j) for j in range(3)]}] for i in range(3)],
        }
    )
    F, lam = parse_field_spec(text).build()
    assert F == PolyMap.scaled_identity(3, Q(-2, 3))
    assert classify_field(F, lam).verdict == "N_ld"


def test_aliases_and_family_list():
    assert {"cy1", "dy1", "y2", "linf", "hnr", "fn2", "teo1li"} <= set(FAMILIES)
    cy = parse_field_spec('{"family":"cy1","params":{"lambda":"-1","a":[["1",0]],"b":[["1",1]],"g":[["1",0]]}}')
    assert classify_field(*cy.build()).verdict == "N_ld"


@pytest.mark.parametrize(
    "text,field",
    [
        ('{"family":"linf","params":{"lambda":"1/2","v1":"0","alpha":"1","b1":"0","g":[["1",1]]}}', "params"),
        ('{"family":"nope","params":{}}', "family"),
        ('{"family":"y2","params":{"lambda":0.5,"k":1}}', "params.lambda"),
    ],
)
def test_errors_carry_field_context(text, field):
    with pytest.raises(SpecError) as info:
        parse_field_spec(text)
    assert info.value.field == field
    assert info.value.line == 1


def test_malformed_json_reports_position():
    with pytest.raises(SpecError) as info:
        parse_field_spec('{\n  "family": "y2",\n  "params": {"lambda": "-1",}\n}')
    assert info.value.line == 3 and info.value.column is not None
    assert "line 3" in str(info.value)


def test_error_line_points_at_key():
    text = '{\n  "family": "y2",\n  "params": {\n    "lambda": 1.5\n  }\n}'
    with pytest.raises(SpecError) as info:
        parse_field_spec(text)
    assert info.value.line == 4


def test_not_utf8():
    with pytest.raises(SpecError):
        parse_field_spec(b"\xff\xfe")


def test_floats_rejected_in_components():
    text = '{"nvars":1,"lambda":"1","components":[[{"coeff":0.1,"exps":[1]}]]}'
    with pytest.raises(SpecError):
        parse_field_spec(text)


def _q(v: Fraction) -> str:
    return str(v)


family_objs = st.one_of(
    st.builds(
        lambda lam, k: {"family": "y2", "params": {"lambda": _q(lam), "k": k}},
        small_rationals,
        st.integers(1, 3),
    ),
    st.builds(
        lambda lam, v1, al, b1, g1, g2: {
            "family": "linf",
            "params": {"lambda": _q(lam), "v1": _q(v1), "alpha": _q(al), "b1": _q(b1), "g": [[_q(g1), 1], [_q(g2), 2]]},
        },
        small_rationals,
        nonzero_rationals,
        nonzero_rationals,
        small_rationals,
        nonzero_rationals,
        small_rationals,
    ),
    st.builds(
        lambda n, lam: {"family": "fn2", "params": {"n": n, "lambda": _q(lam)}},
        st.integers(3, 5),
        small_rationals,
    ),
    st.builds(
        lambda lam, c: {
            "nvars": 2,
            "lambda": _q(lam),
            "components": [[{"coeff": _q(lam), "exps": [1, 0]}, {"coeff": _q(c), "exps": [0, 2]}], [{"coeff": _q(lam), "exps": [0, 1]}]],
        },
        small_rationals,
        small_rationals,
    ),
)


@given(family_objs)
def test_round_trip_is_identity(obj):
    spec = field_spec_from_obj(obj)
    again = parse_field_spec(spec.to_json())
    assert again == spec
    assert again.to_json() == spec.to_json()
    assert again.build() == spec.build()
