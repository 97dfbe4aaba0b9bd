import json

import pytest

from algebroid_pbw.io import DocumentError, digest, load_problem, parse_document, serialize
from algebroid_pbw.registry import fixture_path, list_fixtures


def _doc(**over):
    doc = {
        "ring": {"kind": "rational-field"},
        "algebroid": {"generators": ["a", "b"], "brackets": [{"i": 0, "j": 1, "k": 1, "coeff": "1"}]},
        "pair": {"sub_rank": 1},
    }
    doc.update(over)
    return json.dumps(doc)


@pytest.mark.parametrize("name", list_fixtures())
def test_serialize_round_trip(name):
    P = load_problem(fixture_path(name))
    text = serialize(P)
    again = serialize(parse_document(text))
    assert again == text


def test_brackets_are_mirrored():
    P = parse_document(_doc())
    L = P.algebroid
    assert str(L.brackets[1][0][1]) == "-1"


def test_unit_rows_are_filled_in():
    P = parse_document(_doc(ring={"kind": "finite-dim-algebra", "basis": ["1", "eps"],
                                  "mul_table": [{"i": 1, "j": 1, "k": 0, "coeff": 0}]}))
    eps = P.ring.parse("eps")
    assert P.ring.one * eps == eps
    assert eps * eps == P.ring.zero


def test_malformed_json_has_a_position():
    with pytest.raises(DocumentError) as err:
        parse_document('{"ring": {"kind": "rational-field"},,}')
    assert err.value.where.startswith("line 1 column")


def test_schema_error_has_a_path():
    with pytest.raises(DocumentError) as err:
        parse_document(_doc(pair={"sub_rank": -1}))
    assert err.value.where == "pair/sub_rank"


@pytest.mark.parametrize("bad,where", [
    ({"pair": {"sub_rank": 5}}, "pair/sub_rank"),
    ({"algebroid": {"generators": ["a"], "brackets": [{"i": 0, "j": 3, "k": 0, "coeff": 1}]}}, "algebroid/brackets/0"),
    ({"algebroid": {"generators": ["a"], "anchor": {"z": {}}}}, "algebroid/anchor"),
    ({"modules": {"unit": {"rank": 1}}}, "modules/unit"),
    ({"modules": {"M": {"rank": 2, "action": [{"generator": "a", "matrix": [["1"]]}]}}}, "modules/M/action/0"),
    ({"modules": {"M": {"rank": 1, "action": [{"generator": "b", "matrix": [["1"]]}]}}}, "modules/M/action/0"),
    ({"modules": {"M": {"rank": 1, "action": [{"generator": "a", "matrix": [["1/0"]]}]}}}, "modules/M/action/0"),
])
def test_semantic_errors_are_located(bad, where):
    with pytest.raises(DocumentError) as err:
        parse_document(_doc(**bad))
    assert err.value.where == where


def test_polynomial_ring_needs_variables():
    with pytest.raises(DocumentError):
        parse_document(_doc(ring={"kind": "polynomial-ring"}))


def test_unknown_module_name():
    P = parse_document(_doc())
    with pytest.raises(KeyError):
        P.module("nope")
    assert P.module("1_A").rank == 1
    assert P.module("L/A").rank == 1


def test_digest_is_of_the_raw_text():
    text = _doc()
    assert parse_document(text).digest == digest(text)
    assert parse_document(text + " ").digest != digest(text)


def test_non_utf8_input(tmp_path):
    path = tmp_path / "bad.json"
    path.write_bytes(b'{"ring": "\xff"}')
    with pytest.raises(DocumentError) as err:
        load_problem(path)
    assert err.value.where.startswith("byte")
