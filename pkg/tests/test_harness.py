import json
from collections import Counter

import numpy as np
import pytest

from bpl.evaluation import (
    ABLATION_CONFIGS,
    FEATURE_SETS,
    EvalData,
    EvalReport,
    MetricError,
    ablation_check,
    compare_hybrid,
    depth_stratified_eval,
    disagreement_correlation,
    feature_matrix,
    population_for,
    run_ablation,
    run_feature_eval,
)
from bpl.evaluation.harness import informative_subset
from bpl.evaluation.metrics import cohens_d
from bpl.evaluation.report import load_report, recompute_summary
from bpl.features import FeatureExtractor
from bpl.grounding import StubClient
from bpl.synth import disinfo_suite


@pytest.fixture(scope="module")
def evaluated(small_liar):
    data = EvalData.build(small_liar)
    agents, run = population_for(data, seed=1)
    return data, agents, run


def test_feature_set_column_counts(evaluated):
    data, agents, run = evaluated
    counts = {fs: feature_matrix(fs, data, run, agents)[0].shape[1] for fs in FEATURE_SETS}
    assert counts == {"Susceptibility": 1, "Belief": 1, "BplFull": 9, "Surface": 4, "BplPlusSurface": 13}
    assert feature_matrix("Surface", data, run, agents)[1][-1] == "historical_false_rate"
    with pytest.raises(ValueError):
        feature_matrix("Nope", data, run, agents)


def test_feature_eval_drop_and_shuffle(evaluated):
    data, agents, run = evaluated
    res = run_feature_eval(data, run, agents, "Surface", seed=0, drop=["historical_false_rate"])
    assert res.name == "Surface-minus-historical_false_rate" and len(res.columns) == 3
    with pytest.raises(ValueError, match="no column"):
        run_feature_eval(data, run, agents, "Belief", drop=["missing"])
    shuffled = np.random.default_rng(0).permutation(data.labels)
    null = run_feature_eval(data, run, agents, "BplFull", seed=0, labels=shuffled)
    assert abs(null.cv.auc_mean - 0.5) < 0.1


def test_ablation_rows(evaluated):
    data, _, _ = evaluated
    rows = run_ablation(data, seed=0)
    assert [(r.name, r.k, r.beta, r.sample_size) for r in rows] == list(ABLATION_CONFIGS)
    assert rows[0].delta_r == 0.0
    chk = ablation_check(rows, bound=1.0)
    assert chk["most_negative"] in {r.name for r in rows[1:]}


def test_informative_subset(small_liar):
    sub = informative_subset(small_liar, 20, n=10)
    assert len(sub) <= 10 and all(c.history.total >= 20 for c in sub)


def test_suite_construction():
    items = disinfo_suite(seed=0, n=900)
    sizes = Counter(it.stratum for it in items)
    assert all(abs(v - 300) <= 1 for v in sizes.values())
    fx = FeatureExtractor()
    depth = {s: {fx.extract(it.claim).depth for it in items if it.stratum == s} for s in sizes}
    assert depth == {"mis": {0}, "dis": {1}, "mal": {2}}
    assert disinfo_suite(seed=0, n=90) == disinfo_suite(seed=0, n=90)
    odd = Counter(it.stratum for it in disinfo_suite(seed=2, n=100))
    assert sorted(odd.values()) == [33, 33, 34]


def test_depth_table_shape_and_antisymmetry():
    data = EvalData.build([it.claim for it in disinfo_suite(seed=1, n=150)])
    table = depth_stratified_eval(data, seed=3)
    assert [c.k for c in table.cells] == [0, 1, 2]
    assert (table.n_depth0, table.n_depth1, table.excluded_depth2) == (50, 50, 50)
    for c in table.cells:
        assert c.cohens_d == pytest.approx(-cohens_d(c.errors_d0, c.errors_d1))


def test_depth_table_reports_empty_stratum():
    data = EvalData.build([it.claim for it in disinfo_suite(seed=1, n=150) if it.stratum != "dis"])
    table = depth_stratified_eval(data, seed=0)
    assert all(c.cohens_d is None and "empty stratum" in c.note for c in table.cells)


def test_disagreement_constructed_fixture():
    rng = np.random.default_rng(5)
    ambiguity = rng.uniform(size=200)
    # ambiguous claims split the population: half the agents at 0.1, half at 0.9
    spread = 0.4 * ambiguity + rng.normal(0, 0.02, 200)
    delta = spread**2
    res = disagreement_correlation(delta, ambiguity, n_permutations=200, seed=0)
    assert res.r > 0.5 and res.p_permutation == pytest.approx(1 / 201)
    assert -1 <= res.r <= 1
    with pytest.raises(MetricError):
        disagreement_correlation(np.zeros(10), ambiguity[:10])


def test_report_round_trip_and_self_consistency(tmp_path, evaluated):
    data, agents, run = evaluated
    report = EvalReport({"seed": 1, "config_hash": "abc"})
    report.add_feature_sets([run_feature_eval(data, run, agents, fs, seed=1) for fs in ("Belief", "Surface")])
    report.add_disagreement(disagreement_correlation(run.summary()[:, 1], data.ambiguity, 50))
    report.check("always", True, "ok")
    path = tmp_path / "r.json"
    path.write_text(report.to_json())
    loaded = load_report(path)
    for section in loaded["feature_sets"]:
        again = recompute_summary(section)
        for key, value in again.items():
            assert section[key] == pytest.approx(value, abs=1e-15)
    text = report.to_text()
    assert "Feature sets" in text and "[PASS] always" in text
    report.write_csv(tmp_path / "folds.csv")
    rows = (tmp_path / "folds.csv").read_text().splitlines()
    assert rows[0].startswith("# ") and sum(not r.startswith("#") for r in rows) == 11
    assert json.loads(report.to_json())["checks"][0]["passed"] is True


def test_compare_hybrid_shape(small_liar):
    data = EvalData.build(small_liar[:50])
    cmp = compare_hybrid(data, StubClient(0), k=1, beta=1.0, sample_size=3, seed=0)
    assert cmp.n == 50 and set(cmp.diagnostics) == {
        "phi_vs_valence_r", "false_recall_vs_falseness_r", "schema_p_true_vs_label_r"}
    for m in (cmp.feature, cmp.hybrid):
        assert 0 <= m.auc <= 1 and 0 <= m.mean_belief <= 1
