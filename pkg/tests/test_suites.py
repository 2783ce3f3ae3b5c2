import re

import pytest

from metwarp import SUITES, load_spec, run_suite, run_suites
from metwarp.suites import SuiteError, merge_tolerances


def _by_id(report):
    return {r.check_id: r for r in report}


def test_lemma_curvature_polar(polar):
    rep = run_suite(polar, "lemma-curvature", seed=42, samples=30)
    recs = _by_id(rep)
    for case in (1, 3):
        assert recs[f"lemma-curvature.case{case}"].verdict == "pass"
        assert recs[f"lemma-curvature.case{case}"].tolerance == 1e-8
    for case in (2, 4, 5):
        r = recs[f"lemma-curvature.case{case}"]
        assert r.verdict == "skipped" and "m>1 required" in r.note
    assert rep.ok


def test_lemma_suites_on_example3(example3_n2):
    for suite in ("lemma-curvature", "lemma-ricci", "warped-connection"):
        rep = run_suite(example3_n2, suite, seed=42, samples=30)
        assert rep.ok and all(r.verdict == "pass" for r in rep), suite


def test_proposition_identities_silver():
    spec = load_spec("builtin:sphere-line?p=2&q=1")
    recs = _by_id(run_suite(spec, "proposition-identities", seed=42, samples=30))
    assert recs["proposition-identities.Jp.square-slots"].verdict == "pass"
    literal = recs["proposition-identities.Jp.square-slots-literal"]
    assert literal.verdict == "fail" and literal.max_residual > 0.1
    for key in ("commutes", "symmetric-slots", "power-slots"):
        assert recs[f"proposition-identities.Jp.{key}"].verdict == "pass"


def test_example3_slant_cosine(example3_n2):
    recs = _by_id(run_suite(example3_n2, "example3", seed=42, samples=30))
    r = recs["example3.slant-cosine"]
    assert r.verdict == "pass"
    value = float(re.search(r"value=([-0-9.eE+]+)", r.note).group(1))
    assert abs(value - 0.408248290463863) <= 1e-9


def test_precondition_failures_become_records(polar):
    rep = run_suite(polar, "product-case", seed=1, samples=5)
    assert len(rep) >= 1 and not rep.ok
    assert all(r.verdict == "fail" for r in rep)
    rep = run_suite(polar, "ricci-invariance", seed=1, samples=5, params={"pairs": "J1:nope"})
    assert not rep.ok and len(rep) == 1


def test_unknown_suite_and_tolerances(polar):
    with pytest.raises(SuiteError):
        run_suite(polar, "nope")
    with pytest.raises(SuiteError):
        merge_tolerances({"bogus": 1.0})
    with pytest.raises(SuiteError):
        run_suite(polar, "lemma-curvature", samples=0)
    assert merge_tolerances({"parallel": 0.5})["parallel"] == 0.5


def test_tolerance_override_changes_verdict():
    spec = load_spec("builtin:sphere-line?p=2&q=1")
    loose = run_suite(spec, "proposition-identities", samples=5, tol_overrides={"oracle-curvature": 10.0})
    assert loose.ok


def test_bad_suite_parameter(example3_n2):
    rep = run_suite(example3_n2, "example3", params={"n": "two"})
    assert not rep.ok


@pytest.mark.parametrize("suite", list(SUITES))
def test_every_suite_yields_records(suite, polar):
    spec = {"product-case": "builtin:sphere-line", "proposition-identities": "builtin:sphere-line",
            "ricci-invariance": "builtin:hyperbolic",
            "example3": "builtin:example3"}.get(suite)
    rep = run_suite(load_spec(spec) if spec else polar, suite, seed=0, samples=3)
    assert len(rep) >= 1


def test_run_suites_defaults_to_spec_requests(polar):
    rep = run_suites(polar, samples=2)
    suites = {r.suite for r in rep}
    assert suites == {s.name for s in polar.suites}


def test_hessian_counterexample():
    spec = load_spec("builtin:hessian-counterexample")
    recs = _by_id(run_suite(spec, "ricci-invariance", seed=42, samples=30))
    tol = 1e-8
    assert recs["ricci-invariance.J1:J2.hessian-defect"].max_residual > 10 * tol
    assert recs["ricci-invariance.J1:J2.ricci-defect"].max_residual > 10 * tol
    assert recs["ricci-invariance.J1:J2.vertical-defect"].max_residual <= tol
    assert recs["ricci-invariance.J1s:J2.hessian-defect"].max_residual == 0.0
    assert recs["ricci-invariance.J1s:J2.ricci-defect"].max_residual <= tol
    assert all(recs[f"ricci-invariance.{t}.implication"].verdict == "pass" for t in ("J1:J2", "J1s:J2"))
