import csv

import pytest
from conftest import liar_row

from bpl.config import FeatureConfig
from bpl.features import (
    CredibilityTable,
    FeatureExtractor,
    ValenceLexicon,
    epistemic_depth,
    repetition,
    source_credibility,
    speaker_prior,
    valence,
    write_feature_csv,
)
from bpl.ingest import Claim, Dataset, SpeakerHistory, parse_liar, parse_multifc


def test_depth_examples():
    assert epistemic_depth("Unemployment is at 2%") == 0
    assert epistemic_depth("Senator X claims unemployment is at 2%") == 1
    assert epistemic_depth("Everyone knows officials believe unemployment data is fabricated") == 2
    assert epistemic_depth("") == 0


def test_depth_word_boundaries_and_case():
    assert epistemic_depth("The sayso of a claimsman") == 0
    assert epistemic_depth("  SENATOR X CLAIMS it  ") == epistemic_depth("senator x claims it")
    assert epistemic_depth("He says she says they say") == 2


def test_default_lexicon_has_23_terms():
    lex = ValenceLexicon.load()
    assert len(lex.terms) == 23
    assert all(w == 1.0 for w in lex.terms.values())


def test_valence_examples():
    lex = ValenceLexicon({"scandal": 0.8, "fraud": 1.0, "crisis": 1.0, "chaos": 1.0})
    assert valence("a quiet tuesday", lex) == 0.0
    assert valence("Scandal!", lex) == pytest.approx(0.4)
    assert valence("fraud crisis chaos", lex) == 1.0


def test_lexicon_rejects_bad_weights():
    with pytest.raises(ValueError):
        ValenceLexicon({})
    with pytest.raises(ValueError):
        ValenceLexicon({"x": 1.5})


def _liar(history):
    claims, _ = parse_liar([liar_row(history=history)])
    return claims[0]


def test_repetition_examples():
    assert repetition(_liar((1, 2, 0, 0, 3))) == 6
    assert repetition(_liar((0, 0, 0, 0, 0))) == 0
    mfc, _ = parse_multifc(["\t".join(["snes-1", " ".join(["word"] * 200), "false", "snopes.com"])])
    assert repetition(mfc[0]) == 0
    mfc, _ = parse_multifc(["\t".join(["snes-1", "ten words " * 5, "false", "snopes.com"])])
    assert repetition(mfc[0]) == 19


def test_speaker_prior_examples():
    assert speaker_prior(SpeakerHistory()) == 0.5
    assert speaker_prior(SpeakerHistory(half_true=8)) == pytest.approx(0.9)
    assert speaker_prior(SpeakerHistory(false_ct=8)) == pytest.approx(0.1)
    assert speaker_prior(None) == 0.5


def test_source_credibility_examples():
    table = CredibilityTable({"snopes.com": 0.75}, default_gamma=0.5)
    assert source_credibility(_liar((0, 0, 0, 0, 0)), table) == 0.0
    assert source_credibility(_liar((10, 10, 10, 5, 5)), table) == 1.0
    assert source_credibility(_liar((2, 2, 2, 2, 2)), table) == 0.5
    mfc, _ = parse_multifc(["snes-1\tA claim\tfalse\thttp://nowhere.example/x"])
    assert source_credibility(mfc[0], table) == 0.5


def test_extractor_ranges_and_order_independence(small_liar):
    fx = FeatureExtractor()
    feats = fx.extract_all(small_liar)
    for f in feats:
        assert 0 <= f.valence <= 1 and 0 <= f.depth <= 2 and f.repetition >= 0
        assert 0 < f.prior_true < 1 and 0 <= f.credibility <= 1
    rev = fx.extract_all(small_liar[::-1])[::-1]
    assert rev == feats


def test_recency_sidecar(tmp_path):
    side = tmp_path / "recency.csv"
    side.write_text("id,recency\n1.json,0.25\n", encoding="utf-8")
    fx = FeatureExtractor(FeatureConfig(recency_sidecar=str(side)))
    assert fx.extract(_liar((0, 0, 0, 0, 0))).recency == 0.25
    assert FeatureExtractor().extract(_liar((0, 0, 0, 0, 0))).recency == 0.0


def test_multifc_prior_is_uniform():
    mfc, _ = parse_multifc(["snes-1\tA claim\tfalse\thttp://snopes.com/x"])
    f = FeatureExtractor().extract(mfc[0])
    assert mfc[0].dataset is Dataset.MULTIFC and f.prior_true == 0.5 and f.credibility == 0.75


def test_feature_csv(tmp_path, small_liar):
    fx = FeatureExtractor()
    path = tmp_path / "f.csv"
    write_feature_csv(path, small_liar[:5], fx.extract_all(small_liar[:5]), ["seed: 0"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# seed: 0"
    rows = list(csv.reader(lines[1:]))
    assert rows[0] == ["id", "valence", "depth", "repetition", "recency", "prior_true", "credibility"]
    assert len(rows) == 6


def test_claim_text_must_be_non_empty():
    with pytest.raises(ValueError):
        Claim("x", "   ", "true", Dataset.LIAR, None)
