import copy
import io
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kreinapprox.errors import InvalidState, ParseError, ValidationError
from kreinapprox.fileio import (
    certify,
    decode_matrix,
    decode_vector,
    dumps,
    encode_matrix,
    encode_vector,
    exit_code,
    parse_problem,
    process,
    run,
    serialize,
)

CORPUS = Path(__file__).parent / "corpus"
EXPECTED = json.loads((CORPUS / "expected.json").read_text())


def ilsq_doc(**problem):
    doc = json.loads((CORPUS / "solved_ilsq_point.json").read_text())
    doc["problem"].update(problem)
    return doc


finite = st.floats(-1e6, 1e6, allow_nan=False)


class TestEncoding:
    @given(st.lists(st.tuples(finite, finite), max_size=6))
    def test_vector_round_trip(self, pairs):
        v = np.array([complex(a, b) for a, b in pairs], dtype=complex)
        assert np.array_equal(decode_vector(json.loads(json.dumps(encode_vector(v))), "v"), v)

    def test_matrix_round_trip(self, rng):
        M = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
        back = decode_matrix(json.loads(json.dumps(encode_matrix(M))), "M")
        assert np.array_equal(back, M)

    def test_real_shorthand(self):
        np.testing.assert_array_equal(decode_vector([1, [2, 3]], "v"), [1, 2 + 3j])

    @pytest.mark.parametrize("bad, path", [
        ([[1, 2, 3]], "v[0]"), (["a"], "v[0]"), ([True], "v[0]"), (3, "v"),
    ])
    def test_vector_errors(self, bad, path):
        with pytest.raises(ParseError) as exc:
            decode_vector(bad, "v")
        assert exc.value.path == path

    def test_ragged_matrix(self):
        with pytest.raises(ParseError):
            decode_matrix([[1, 2], [3]], "M")


class TestParse:
    def test_diag_signature(self):
        doc = ilsq_doc()
        doc["spaces"]["H"]["J"] = {"diag": [1, -1]}
        p = parse_problem(doc)
        np.testing.assert_array_equal(p.spaces["H"].J, np.diag([1, -1]))

    def test_dense_signature(self):
        doc = ilsq_doc()
        doc["spaces"]["H"]["J"] = [[0, 1], [1, 0]]
        doc["operators"]["W"]["matrix"] = [[0, 1], [1, 0]]
        p = parse_problem(doc)
        assert p.j_format["H"] == "dense"

    @pytest.mark.parametrize("mutate, path", [
        (lambda d: d["spaces"]["H"].update(J={"diag": [1, 2]}), "spaces.H.J"),
        (lambda d: d["spaces"]["H"].update(dim=0), "spaces.H.dim"),
        (lambda d: d.update(field="real"), "field"),
        (lambda d: d["operators"]["A"].update(domain="Z"), "operators.A.domain"),
        (lambda d: d["operators"]["A"].update(matrix=[[1, 2]]), "operators.A.matrix"),
        (lambda d: d["problem"].update(type="bogus"), "problem.type"),
        (lambda d: d["problem"].update(W="A"), "problem.W"),
        (lambda d: d["problem"].update(x=[1, 2, 3]), "problem.x"),
        (lambda d: d["options"].update(seed=-1), "options.seed"),
        (lambda d: d["options"].update(n_samples=0), "options.n_samples"),
        (lambda d: d["options"].update(psd_tol="x"), "options.psd_tol"),
    ])
    def test_validation_paths(self, mutate, path):
        doc = ilsq_doc()
        mutate(doc)
        with pytest.raises(ValidationError) as exc:
            parse_problem(doc)
        assert exc.value.path == path

    def test_non_selfadjoint_weight(self):
        doc = ilsq_doc()
        doc["operators"]["W"]["matrix"] = [[1, 1], [0, 1]]
        with pytest.raises(ValidationError) as exc:
            parse_problem(doc)
        assert exc.value.path == "problem.W"

    def test_malformed(self):
        with pytest.raises(ParseError) as exc:
            parse_problem(io.StringIO("{not json"))
        assert exc.value.path == "$"

    def test_type_override(self):
        doc = json.loads((CORPUS / "solved_spline_point.json").read_text())
        doc["problem"]["rho"] = 1.0
        p = parse_problem(doc, type_override="smoothing")
        assert p.type == "smoothing" and p.payload["rho"] == 1.0


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_corpus(name):
    exp = EXPECTED[name]
    res, code = process(CORPUS / name)
    assert res["status"] == exp["status"]
    assert code == exp["exit"]
    if "reason" in exp:
        assert res["reason"] == exp["reason"]
    if "path" in exp:
        assert res["error"]["path"] == exp["path"]
    if res["status"] == "solved":
        assert res["certificates"]["oracle"]["margins"]


def test_corpus_is_balanced():
    statuses = [e["status"] for e in EXPECTED.values()]
    assert len(statuses) == 12
    assert all(statuses.count(s) == 4 for s in ("solved", "no_solution", "invalid_input"))


@pytest.mark.parametrize("name", sorted(n for n in EXPECTED if not n.startswith("invalid")))
def test_problem_round_trip(name):
    doc = json.loads((CORPUS / name).read_text())
    p = parse_problem(doc)
    again = serialize(parse_problem(json.loads(dumps(serialize(p)))))
    assert dumps(again) == dumps(serialize(p))
    for key, op in p.operators.items():
        assert np.array_equal(decode_matrix(again["operators"][key]["matrix"], key), op.matrix)


def test_result_round_trip():
    res, _ = process(CORPUS / "solved_ilsq_point.json")
    text = dumps(res)
    assert dumps(json.loads(text)) == text
    u = decode_vector(json.loads(text)["solution"]["u"], "u")
    assert np.array_equal(u, decode_vector(res["solution"]["u"], "u"))


class TestRun:
    def test_ilsq_example(self):
        res, code = process(CORPUS / "solved_ilsq_point.json")
        assert code == 0
        assert res["solution"]["value"] == pytest.approx(-25)
        np.testing.assert_allclose(decode_vector(res["solution"]["u"], "u"), [2])
        assert res["certificates"]["oracle"]["margins"]["worst_margin"] >= -1e-8

    def test_echoes_tolerances_and_seed(self):
        res, _ = process(CORPUS / "solved_ilsq_point.json", tol={"psd_tol": 1e-9}, seed=7)
        assert res["tolerances"]["psd_tol"] == 1e-9
        assert res["seed"] == 7
        assert res["tool_version"]

    def test_certify_requires_solved(self):
        p = parse_problem(CORPUS / "nosol_spline_negative_kernel.json")
        res = run(p)
        assert res["status"] == "no_solution"
        with pytest.raises(InvalidState):
            certify(p, res)

    @pytest.mark.parametrize("name", sorted(n for n in EXPECTED if n.startswith("solved")))
    def test_certificates_deterministic(self, name):
        p = parse_problem(CORPUS / name)
        res = run(p)
        a = certify(p, res, n_samples=200, seed=3)
        b = certify(p, res, n_samples=200, seed=3)
        assert dumps(a["certificates"]) == dumps(b["certificates"])

    def test_strict_flips_exit_code(self):
        p = parse_problem(CORPUS / "solved_ilsq_point.json")
        res = certify(p, run(p))
        bad = copy.deepcopy(res)
        bad["certificates"]["oracle"]["margins"]["worst_margin"] = -1.0
        assert exit_code(bad) == 0
        assert exit_code(bad, strict=True) == 4
        assert exit_code(res, strict=True) == 0

    def test_nonminimizer_detected(self):
        p = parse_problem(CORPUS / "solved_ilsq_point.json")
        res = run(p)
        res["solution"]["u"] = encode_vector([3.0])
        margins = certify(p, res)["certificates"]["oracle"]["margins"]
        assert min(margins.values()) < -1e-3

    def test_smoothing_global_and_operator(self):
        doc = json.loads((CORPUS / "solved_smoothing_point.json").read_text())
        del doc["problem"]["h0"]
        res, code = process(doc)
        assert code == 0 and "G" in res["solution"]
        doc["problem"]["B0"] = doc["problem"]["V"]
        res, code = process(doc, strict=True)
        assert code == 0 and "X" in res["solution"]

    def test_other_types(self):
        doc = ilsq_doc()
        doc["problem"] = {"type": "adjoint", "T": "W"}
        res, code = process(doc, strict=True)
        assert code == 0 and "T_sharp" in res["solution"]
        doc["problem"] = {"type": "jtrace", "T": "W"}
        res, code = process(doc, strict=True)
        assert code == 0 and res["solution"]["value"] == [0.0, 0.0]
        doc["problem"] = {"type": "ilsq", "A": "A", "W": "W"}
        res, code = process(doc, strict=True)
        assert code == 0 and "X" in res["solution"]
        doc["operators"]["A"]["matrix"] = [[0], [1]]
        res, code = process(doc, strict=True)
        assert code == 2 and res["reason"] == "NotNonnegative"
