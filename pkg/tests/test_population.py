import csv
from dataclasses import replace

import numpy as np
import pytest
from conftest import make_features

from bpl import _kernels, _rng
from bpl.features import FeatureExtractor
from bpl.inference import AgentProfile, PosteriorResult, RecallItem, bpl_posterior
from bpl.population import (
    STAT_NAMES,
    RecallPool,
    canonical_population,
    disagreement,
    run_population,
    summarize,
    write_population_csv,
)


def test_canonical_population_grid():
    grid = {(a.k, a.beta, a.sample_size) for a in canonical_population(0)}
    assert len(grid) == 9
    assert {(0, 0.2, 5), (2, 50.0, 500), (1, 1.0, 25)} <= grid


def test_disagreement_examples():
    assert disagreement([0.4] * 9) == 0.0
    assert disagreement([0.0, 1.0]) == 0.25
    assert disagreement([0.2, 0.4, 0.6]) == pytest.approx(0.02667, abs=5e-6)
    with pytest.raises(ValueError):
        disagreement([])


def test_bernoulli_disagreement_is_p_times_one_minus_p():
    for hits in range(10):
        b = [1.0] * hits + [0.0] * (9 - hits)
        p = hits / 9
        assert disagreement(b) == pytest.approx(p * (1 - p), abs=1e-15)


def _results(beliefs, losses=None):
    losses = losses or [0.0] * len(beliefs)
    return [PosteriorResult(b, b * (1 + l), l, 0) for b, l in zip(beliefs, losses)]


def test_summarize_examples():
    s = summarize(_results([0.5] * 9))
    assert s.as_tuple() == (0.5, 0.0, 0.5, 0.5, 0.5, 0.5, 0.0, 0.0, 0.0)
    s = summarize(_results([0.1] * 4 + [0.9] * 5))
    assert s.frac_believe == pytest.approx(5 / 9)
    with pytest.raises(ValueError, match="expects 9 results, got 3"):
        summarize(_results([0.5] * 3))


def test_summarize_order_statistics_and_shuffle_invariance(rng):
    b = rng.uniform(size=9)
    loss = rng.uniform(0, 0.3, size=9).tolist()
    s = summarize(_results(b.tolist(), loss))
    assert s.min_belief <= s.median_belief <= s.max_belief
    perm = rng.permutation(9)
    t = summarize(_results(b[perm].tolist(), [loss[i] for i in perm]))
    assert np.allclose(s.as_tuple(), t.as_tuple(), rtol=0, atol=1e-15)
    assert len(STAT_NAMES) == 9


def _corpus(small_liar):
    feats = FeatureExtractor().extract_all(small_liar)
    labels = [c.label.binary for c in small_liar]
    return [c.id for c in small_liar], feats, labels


def test_empty_pool_matches_scalar_chain():
    feats = [make_features(valence=v, prior_true=0.6) for v in (0.0, 0.5, 1.0)]
    ids = ["a", "b", "c"]
    agents = [AgentProfile(1, 1.0, 50, seed=0)]
    empty = run_population(ids, feats, agents, RecallPool.empty(3), 0, use_numba=False)
    # with an empty pool every level falls back to the uninformative recall
    for i, f in enumerate(feats):
        res = bpl_posterior(f, AgentProfile(1, 1.0, 50, seed=_rng.derive_seed(0, ids[i], 0)), [])
        assert empty.beliefs[i, 0] == pytest.approx(res.belief, abs=1e-15)


def test_scalar_and_batch_agree_with_single_recall_source():
    """A pool holding one other claim makes the sample deterministic, so both paths agree exactly."""
    feats = [make_features(valence=0.2, prior_true=0.3, repetition=2, credibility=0.5),
             make_features(valence=0.9, prior_true=0.8, repetition=5, credibility=1.0)]
    pool = RecallPool.from_split(feats, [0, 1])
    agents = canonical_population(seed=3)
    run = run_population(["x", "y"], feats, agents, pool, 3, use_numba=False)
    for i, other in ((0, 1), (1, 0)):
        corpus = [RecallItem("other", bool(pool.is_true[other]), float(pool.phi[other]))]
        for j, agent in enumerate(agents):
            res = bpl_posterior(feats[i], replace(agent, seed=_rng.derive_seed(3, "xy"[i], j)), corpus)
            assert run.beliefs[i, j] == pytest.approx(res.belief, abs=1e-14)
            assert run.susceptibility[i, j] == pytest.approx(res.susceptibility, abs=1e-14)


def test_results_independent_of_batching(small_liar):
    """Per-claim seeds: running claims in two batches over the same pool changes nothing."""
    ids, feats, labels = _corpus(small_liar[:60])
    pool = RecallPool.from_split(feats, labels)
    agents = canonical_population(0)
    whole = run_population(ids, feats, agents, pool, 0, use_numba=False)
    parts = []
    for sl in (slice(0, 25), slice(25, 60)):
        sub = RecallPool(pool.phi, pool.is_true, pool.self_index[sl])
        parts.append(run_population(ids[sl], feats[sl], agents, sub, 0, use_numba=False).beliefs)
    assert np.array_equal(np.vstack(parts), whole.beliefs)


@pytest.mark.skipif(not _kernels.HAS_NUMBA, reason="numba not available")
def test_numba_and_numpy_backends_agree(small_liar):
    ids, feats, labels = _corpus(small_liar)
    pool = RecallPool.from_split(feats, labels)
    agents = canonical_population(5)
    a = run_population(ids, feats, agents, pool, 5, use_numba=False)
    b = run_population(ids, feats, agents, pool, 5, use_numba=True)
    assert np.max(np.abs(a.beliefs - b.beliefs)) < 1e-12
    assert np.array_equal(a.effective_k, b.effective_k)


def test_population_csv(tmp_path, small_liar):
    ids, feats, labels = _corpus(small_liar[:10])
    run = run_population(ids, feats, canonical_population(0), RecallPool.from_split(feats, labels), 0)
    path = tmp_path / "pop.csv"
    write_population_csv(path, ids, run.summary(), [c.label.ambiguity for c in small_liar[:10]], ["seed: 0"])
    rows = list(csv.reader(path.read_text().splitlines()[1:]))
    assert rows[0] == ["id", *STAT_NAMES, "disagreement", "ambiguity"]
    assert len(rows) == 11 and rows[1][10] == rows[1][2]
