import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from core.contraction_conditions import ContractionSpec, SelfMap, certify
from core.exceptions import CStarError
from core.fixed_point_solvers import picard_solve
from core.metric_spaces import verify_axioms
from core.trace_emitter import COLUMNS, emit_trace, encode, read_records, write_records
from models.schemas import OutputFormat, StopRule


@pytest.fixture
def halving_result(interval_space):
    space = interval_space(-1.0, 1.0)
    T = SelfMap("x/2", lambda x: x / 2, space.domain)
    spec = ContractionSpec.interpolative_kannan(tau=0.5, beta=0.5)
    return picard_solve(space, T, 1.0, spec, StopRule(step_norm_epsilon=0.1))


@pytest.fixture
def swap_certificate(discrete_space):
    space = discrete_space(["a", "b", "c"])
    swap = SelfMap("swap", lambda x: {"a": "b", "b": "a"}.get(x, x), space.domain)
    return space, certify(ContractionSpec.interpolative_kannan(tau=0.5, beta=0.5), swap, space, 10, seed=0)


def test_solve_records(halving_result):
    records = emit_trace(halving_result)
    assert [r["record"] for r in records] == ["iteration"] * 3 + ["fixed_point"]
    assert [r["step_norm"] for r in records[:3]] == [0.5, 0.25, 0.125]
    assert records[1]["points"] == [[0.5], [0.25]]
    assert all(r["verdict"] == "Holds" and r["bound_check"] == 0.0 for r in records[:3])

    final = records[-1]
    assert final["points"] == [[0.125]]
    assert final["verdict"] == "Converged"
    assert final["value"]["solver"] == "picard"
    assert final["value"]["bound_checks_failed"] == 0
    assert all(set(r) == set(COLUMNS) for r in records)


def test_certificate_records(swap_certificate):
    space, certificate = swap_certificate
    records = emit_trace(certificate, space.domain)
    violations = [r for r in records if r["record"] == "violation"]
    assert [r["points"] for r in violations] == [["a", "b"], ["b", "a"]]
    assert violations[0]["lhs_spectrum"] == [1.0]
    assert violations[0]["rhs_spectrum"] == [0.5]
    assert violations[0]["bound_check"] == pytest.approx(-0.5)

    summary = records[-1]
    assert summary["record"] == "summary"
    assert summary["value"]["pairs_tested"] == 9
    assert summary["value"]["exhaustive"] is True


def test_certificate_records_need_the_domain(swap_certificate):
    _, certificate = swap_certificate
    with pytest.raises(CStarError):
        emit_trace(certificate)


def test_axiom_records(discrete_space):
    space = discrete_space(["a", "b"])
    records = emit_trace(verify_axioms(space, 1, seed=0), space.domain)
    assert records == [{**{c: None for c in COLUMNS}, "record": "summary", "verdict": "Holds",
                        "value": {"samples_tested": 14, "violated": []}}]


def test_csv_and_jsonl_hold_the_same_records(tmp_path, halving_result, swap_certificate):
    space, certificate = swap_certificate
    records = emit_trace(halving_result) + emit_trace(certificate, space.domain)

    write_records(records, tmp_path / "run.jsonl", OutputFormat.JSONL)
    write_records(records, tmp_path / "run.csv", OutputFormat.CSV)

    from_jsonl = read_records(tmp_path / "run.jsonl", OutputFormat.JSONL)
    from_csv = read_records(tmp_path / "run.csv", OutputFormat.CSV)
    assert from_jsonl == from_csv
    assert len(from_jsonl) == len(records)
    assert (tmp_path / "run.csv").read_text().splitlines()[0] == ",".join(COLUMNS)


def test_csv_text_cells_read_back_as_text(tmp_path):
    row = {**{c: None for c in COLUMNS}, "record": "summary", "verdict": "null", "detail": "1", "value": "true"}
    write_records([row], tmp_path / "text.csv", OutputFormat.CSV)
    assert read_records(tmp_path / "text.csv", OutputFormat.CSV) == [row]


def test_encode_uses_seventeen_digits():
    assert encode(0.1) == "0.10000000000000001"
    assert encode({"a": [1, None, True]}) == '{"a": [1, null, true]}'
    assert encode(float("nan")) == "NaN"
    assert encode(-math.inf) == "-Infinity"


def test_encode_rejects_unknown_types():
    with pytest.raises(TypeError):
        encode(object())


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_encoded_floats_read_back_exactly(x):
    assert float(encode(x)) == x
