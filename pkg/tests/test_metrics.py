import numpy as np
import pytest
from oracles import (
    auc_pairs,
    cohens_d_loops,
    pearson_sums,
    random_metric_instance,
    u_exact_p,
    u_pairs,
)

from bpl.evaluation.metrics import (
    MetricError,
    cohens_d,
    f1_score,
    mann_whitney_u,
    pearson_r,
    roc_auc,
)


def test_roc_auc_examples():
    assert roc_auc([0.9, 0.3, 0.5, 0.1], [1, 1, 0, 0]) == 0.75
    assert roc_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert roc_auc([0.4] * 6, [0, 1] * 3) == 0.5
    with pytest.raises(MetricError):
        roc_auc([0.1, 0.2], [1, 1])


def test_auc_complement_for_tie_free_scores(rng):
    s = rng.normal(size=40)
    y = rng.integers(0, 2, 40)
    y[:2] = (0, 1)
    assert roc_auc(s, y) + roc_auc(-s, y) == pytest.approx(1.0, abs=1e-15)


def test_f1_examples():
    assert f1_score([0.9, 0.1, 0.8], [1, 0, 1]) == 1.0
    # TP=2, FP=1, FN=1
    assert f1_score([0.9, 0.8, 0.7, 0.2, 0.1], [1, 1, 0, 1, 0]) == pytest.approx(2 / 3)
    with pytest.warns(RuntimeWarning):
        assert f1_score([0.1, 0.2, 0.3], [1, 0, 1]) == 0.0


def test_pearson_examples():
    x = np.arange(10.0)
    assert pearson_r(x, 2 * x + 1) == pytest.approx(1.0)
    assert pearson_r(x, -x) == pytest.approx(-1.0)
    assert pearson_r([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)
    with pytest.raises(MetricError):
        pearson_r([1, 1, 1], [1, 2, 3])


def test_cohens_d_examples():
    assert cohens_d([1, 2, 3], [1, 2, 3]) == 0.0
    assert cohens_d([1, 2, 3], [3, 4, 5]) == pytest.approx(-2.0)
    assert cohens_d([3, 4, 5], [1, 2, 3]) == pytest.approx(2.0)
    with pytest.raises(MetricError):
        cohens_d([1, 1], [1, 1])


def test_mann_whitney_examples():
    mw = mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert mw.u == 0.0 and mw.method == "exact"
    assert mw.p == pytest.approx(0.1, abs=1e-12)
    assert mann_whitney_u([4, 5, 6], [1, 2, 3]).u == 9.0
    same = np.arange(30.0)
    assert mann_whitney_u(same, same).p == pytest.approx(1.0, abs=0.02)
    assert mann_whitney_u(same, same, method="normal").p == pytest.approx(1.0, abs=0.02)
    with pytest.raises(MetricError):
        mann_whitney_u([], [1.0])


def test_metrics_match_brute_force():
    rng = np.random.default_rng(2026)
    for _ in range(100):
        a, b = random_metric_instance(rng)
        scores = np.concatenate([a, b])
        labels = np.array([1] * a.size + [0] * b.size)
        assert roc_auc(scores, labels) == pytest.approx(auc_pairs(scores, labels), abs=1e-9)
        if np.ptp(scores) > 0:
            y = rng.normal(size=scores.size)
            assert pearson_r(scores, y) == pytest.approx(pearson_sums(scores, y), abs=1e-9)
        if np.var(a) + np.var(b) > 0:
            assert cohens_d(a, b) == pytest.approx(cohens_d_loops(a, b), abs=1e-9)
        mw = mann_whitney_u(a, b)
        assert mw.u == pytest.approx(u_pairs(a, b), abs=1e-9)
        if mw.method == "exact":
            assert mw.p == pytest.approx(u_exact_p(a, b), abs=1e-9)


def test_exact_and_normal_paths_agree_on_grid():
    """Both groups of size 8..20 with n_a * n_b <= 400, tied and untied data."""
    rng = np.random.default_rng(0)
    worst = 0.0
    for na in range(8, 21):
        for nb in range(8, 21):
            if na * nb > 400:
                continue
            for t in range(4):
                a = rng.normal(rng.uniform(0, 1.5), 1, na)
                b = rng.normal(0, 1, nb)
                if t % 2:
                    a, b = np.round(a, 1), np.round(b, 1)
                pe = mann_whitney_u(a, b, method="exact").p
                pn = mann_whitney_u(a, b, method="normal").p
                worst = max(worst, abs(pe - pn))
    assert worst <= 0.02
