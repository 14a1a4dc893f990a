import json

import pytest

from nilfield.verify import CLAIM_IDS, EVIDENCE, FAIL, PASS, run_verify_suite

EXPECTED_IDS = (
    "nilpotency-family",
    "classification",
    "cy1-attraction",
    "dy1-attraction",
    "y2-continuous-escape",
    "y2-discrete-escape",
    "liorsc-trap",
    "liorsc-conjugation",
    "teo1li-blowup",
    "period3-exact",
    "period2-absence",
    "teo39-continuation",
    "liorsc-lift",
    "property-suites",
)


@pytest.fixture(scope="module")
def full_report():
    return run_verify_suite("all")


def test_all_claims_present(full_report):
    assert CLAIM_IDS == EXPECTED_IDS
    assert tuple(c.claim_id for c in full_report.claims) == EXPECTED_IDS


def test_overall_reflects_failures(full_report):
    failing = [c.claim_id for c in full_report.claims if c.status == FAIL]
    assert (full_report.overall == "fail") == bool(failing)
    # only the blow-up spectrum disagrees with the published values
    assert failing == ["teo1li-blowup"]


def test_statuses_and_budgets(full_report):
    for c in full_report.claims:
        assert c.status in (PASS, FAIL, EVIDENCE)
        assert c.seconds <= c.budget_seconds
    kinds = {c.claim_id: c.status for c in full_report.claims}
    assert kinds["period2-absence"] == EVIDENCE and kinds["property-suites"] == EVIDENCE


def test_report_is_json(full_report):
    obj = json.loads(full_report.to_json())
    assert obj["seed"] == full_report.seed
    assert len(obj["claims"]) == len(EXPECTED_IDS)


def test_scope_filter():
    rep = run_verify_suite(["liorsc-trap"])
    assert [c.claim_id for c in rep.claims] == ["liorsc-trap"]
    assert rep.overall == "pass"


def test_unknown_scope():
    with pytest.raises(ValueError):
        run_verify_suite(["nope"])


def test_tamper_probe_names_witness():
    rep = run_verify_suite("liorsc-trap", tamper={"liorsc-trap.p0_offset": "1/1000000"})
    claim = rep.claims[0]
    assert claim.status == FAIL and rep.overall == "fail"
    assert claim.details["violations"] > 0
    assert claim.details["witnesses"] and all("point" in v for v in claim.details["witnesses"])


def test_deterministic():
    a = run_verify_suite(["classification", "period3-exact"])
    b = run_verify_suite(["classification", "period3-exact"])
    assert [c.details for c in a.claims] == [c.details for c in b.claims]
