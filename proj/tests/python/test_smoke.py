import json
import os
from fractions import Fraction
from pathlib import Path

import pytest

import claimtree

ROOT = Path(__file__).resolve().parents[2]
FIXTURES = Path(os.environ.get("CLAIMTREE_FIXTURES", ROOT / "tests" / "fixtures"))
TEST_DATA = Path(os.environ.get("CLAIMTREE_TEST_DATA", ROOT / "tests" / "data"))


def f1_oracle(s, n, k):
    if s == 0:
        return 0.0
    p = Fraction(s, s + n)
    r = min(Fraction(s, k), Fraction(1))
    return float(2 * p * r / (p + r))


def test_f1_matches_rational_oracle():
    for s in range(0, 12):
        for n in range(0, 12):
            for k in (1, 3, 5, 10):
                assert claimtree.f1_at_k(s, n, k) == pytest.approx(f1_oracle(s, n, k), abs=1e-12)
    assert claimtree.precision(3, 1) == 0.75
    assert claimtree.recall_at_k(7, 5) == 1.0


def test_consolidation_rule():
    assert claimtree.consolidate_states(["accepted", "accepted"]) == "accepted"
    assert claimtree.consolidate_states(["accepted", "rejected"]) == "rejected"
    assert claimtree.consolidate_states(["accepted", "unsubstantiated"]) == "unsubstantiated"
    with pytest.raises(claimtree.ClaimtreeError):
        claimtree.consolidate_states(["maybe"])


def test_falsify_negation_and_numerals():
    out = claimtree.falsify("Timolol lowers intraocular pressure.", "negation", 1)
    assert out["text"].startswith("Timolol does not lower intraocular pressure")
    assert out["operator"] == "negation"
    assert out["original_claim"] == "Timolol lowers intraocular pressure."
    assert claimtree.scale_numeral("1,250", 0.1) == "125"
    assert claimtree.scale_numeral("2.5", 10.0) == "25"
    assert "numeric_perturbation" not in claimtree.applicable_operators("Fever is common.")
    with pytest.raises(claimtree.ClaimtreeError):
        claimtree.falsify("Fever is common.", "numeric_perturbation", 1)


def test_extract_matches_golden_claims():
    session = claimtree.Session(FIXTURES / "config.json")
    claims = session.extract((FIXTURES / "glaucoma-01.txt").read_text().strip())
    golden = [json.loads(line) for line in (FIXTURES / "golden" / "glaucoma-01.claims.jsonl").read_text().splitlines()]
    assert claims == golden


def test_verify_matches_golden_report(tmp_path):
    session = claimtree.Session(FIXTURES / "config.json")
    query = (FIXTURES / "glaucoma-01.txt").read_text().strip()
    report = session.verify(query, sample_id="glaucoma-01", category="Treatment", out=tmp_path / "run")
    golden = json.loads((FIXTURES / "golden" / "glaucoma-01.run" / "report.json").read_text())
    assert report == golden
    assert (tmp_path / "run" / "tree.json").read_text() == (FIXTURES / "golden" / "glaucoma-01.run" / "tree.json").read_text()


def test_evaluate_matches_golden_metrics():
    runs = TEST_DATA / "eval20" / "runs"
    reports = [json.loads(p.read_text()) for p in sorted(runs.glob("*/report.json"))]
    metrics = claimtree.evaluate(TEST_DATA / "eval20" / "gold.jsonl", reports)
    golden = json.loads((TEST_DATA / "eval20" / "golden" / "metrics.json").read_text())
    assert metrics == golden


def test_dataset_stats_and_table_means():
    s = claimtree.dataset_stats(FIXTURES / "golden" / "curate_seed1.jsonl")
    assert s["overall"]["num_texts"] == 3
    assert s["overall"]["num_claims"] == 13
    means = claimtree.table_row_means(json.dumps({"categories": ["A", "B"], "rows": {"x": [1.0, 2.0]}}))
    assert means == {"x": 1.5}


def test_bad_config_raises():
    with pytest.raises(claimtree.ClaimtreeError):
        claimtree.Session(FIXTURES / "missing.json")
