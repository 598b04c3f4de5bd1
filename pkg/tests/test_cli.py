import json

import pytest
from conftest import liar_row

from bpl.cli import main, parse_agent


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "corpus.jsonl"
    assert main(["ingest", "--kind", "synthetic-liar", "--n", "400", "--seed", "1", "--out", str(path)]) == 0
    return path


def _body(path):
    return [line for line in path.read_text().splitlines() if not line.startswith(("{\"_meta\"", "#"))]


def test_missing_input_exits_2_with_path(tmp_path, capsys):
    missing = tmp_path / "nope.tsv"
    assert main(["ingest", "--kind", "liar", "--in", str(missing), "--out", str(tmp_path / "o.jsonl")]) == 2
    assert str(missing) in capsys.readouterr().err
    assert main(["infer", "--corpus", str(missing), "--out", str(tmp_path / "d.jsonl")]) == 2
    err = capsys.readouterr().err
    assert str(missing) in err and "bpl ingest" in err


def test_ingest_liar_tsv_and_sample(tmp_path, capsys):
    tsv = tmp_path / "liar.tsv"
    labels = ["true", "false", "half-true", "pants-fire", "mostly-true", "barely-true"] * 5
    rows = [liar_row(f"{i}.json", lab, f"Claim number {i} about taxes.") for i, lab in enumerate(labels)]
    tsv.write_text("\n".join(rows + ["broken\trow"]) + "\n")
    out = tmp_path / "c.jsonl"
    assert main(["ingest", "--kind", "liar", "--in", str(tsv), "--out", str(out), "--sample", "12", "--seed", "42"]) == 0
    assert "parsed 30, rejected 1" in capsys.readouterr().out
    lines = out.read_text().splitlines()
    meta = json.loads(lines[0])["_meta"]
    assert meta["n_claims"] == 12 and len(lines) == 13
    report = json.loads((tmp_path / "c.jsonl.report.json").read_text())
    assert report["report"]["rejected"] == 1 and report["report"]["written"] == 12


def test_parse_agent():
    assert parse_agent("k=0,beta=0.2,N=5") == {"k": 0, "beta": 0.2, "sample_size": 5}
    from bpl.cli import CliError

    with pytest.raises(CliError, match="missing"):
        parse_agent("k=1,beta=2")
    with pytest.raises(CliError, match="unknown"):
        parse_agent("k=1,beta=2,N=3,x=1")


def test_infer_single_agent_and_population(tmp_path, corpus):
    one = tmp_path / "one.jsonl"
    assert main(["infer", "--corpus", str(corpus), "--agent", "k=0,beta=0.2,N=5", "--out", str(one)]) == 0
    head, *records = [json.loads(line) for line in one.read_text().splitlines()]
    meta = head["_meta"]
    for key in ("artifact_version", "config_hash", "dataset_hash", "seed"):
        assert key in meta
    assert len(records) == 400 and {(r["k"], r["beta"], r["N"]) for r in records} == {(0, 0.2, 5)}

    pop = tmp_path / "pop.jsonl"
    stats = tmp_path / "stats.csv"
    assert main(["infer", "--corpus", str(corpus), "--population", "--out", str(pop), "--stats", str(stats),
                 "--sample", "60", "--seed", "3"]) == 0
    records = [json.loads(line) for line in _body(pop)]
    per_claim = {}
    for r in records:
        per_claim.setdefault(r["id"], []).append(r)
    assert len(per_claim) == 60 and all(len(v) == 9 for v in per_claim.values())
    assert stats.read_text().startswith("# ")


def test_infer_rejects_bad_agent_before_work(tmp_path, corpus, capsys):
    out = tmp_path / "bad.jsonl"
    assert main(["infer", "--corpus", str(corpus), "--agent", "k=4,beta=1,N=3", "--out", str(out)]) == 2
    assert "invalid agent" in capsys.readouterr().err and not out.exists()


@pytest.mark.parametrize("mode", ["feature", "stub"])
def test_infer_rerun_is_byte_identical(tmp_path, corpus, mode):
    outs = []
    for i in range(2):
        out = tmp_path / f"{mode}{i}.jsonl"
        args = ["infer", "--corpus", str(corpus), "--out", str(out), "--sample", "30", "--seed", "5", "--mode", mode]
        if mode == "stub":
            args += ["--cache", str(tmp_path / "cache.jsonl")]
        assert main(args) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_config_file_and_flag_precedence(tmp_path, corpus):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[bpl]\nclamp_low = 0.2\n")
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    base = ["infer", "--corpus", str(corpus), "--sample", "10", "--agent", "k=0,beta=1,N=1", "--config", str(cfg)]
    assert main(base + ["--out", str(a)]) == 0
    assert main(base + ["--set", "bpl.clamp_low=0.05", "--out", str(b)]) == 0
    ma = json.loads(a.read_text().splitlines()[0])["_meta"]
    mb = json.loads(b.read_text().splitlines()[0])["_meta"]
    assert ma["config"]["bpl"]["clamp_low"] == 0.2 and mb["config"]["bpl"]["clamp_low"] == 0.05
    assert ma["config_hash"] != mb["config_hash"]


def test_ablate_emits_six_rows(tmp_path, corpus):
    out = tmp_path / "ablate.json"
    assert main(["ablate", "--corpus", str(corpus), "--sample", "200", "--out", str(out)]) in (0, 1)
    report = json.loads(out.read_text())
    assert len(report["ablation"]) == 6 and report["meta"]["dataset_hash"]


def test_evaluate_check_exit_code(tmp_path, corpus):
    out = tmp_path / "eval.json"
    code = main(["evaluate", "--corpus", str(corpus), "--permutations", "50", "--out", str(out), "--check"])
    report = json.loads(out.read_text())
    failed = [c for c in report["checks"] if not c["passed"]]
    assert code == (1 if failed else 0)
    assert main(["evaluate", "--corpus", str(corpus), "--permutations", "50"]) == 0


def test_depth_analysis_runs(tmp_path):
    suite = tmp_path / "suite.jsonl"
    assert main(["ingest", "--kind", "disinfo-suite", "--n", "90", "--out", str(suite)]) == 0
    out = tmp_path / "depth.json"
    assert main(["depth-analysis", "--corpus", str(suite), "--out", str(out)]) in (0, 1)
    assert [c["k"] for c in json.loads(out.read_text())["depth"]["agents"]] == [0, 1, 2]


def test_llm_validate_reproduces_from_cache(tmp_path):
    cache = tmp_path / "cache.jsonl"
    outs = []
    for i in range(2):
        out = tmp_path / f"v{i}.json"
        assert main(["llm-validate", "--n", "20", "--pool", "200", "--mode", "stub", "--cache", str(cache),
                     "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    report = json.loads(outs[0])
    assert set(report["hybrid"]["diagnostics"]) == {
        "phi_vs_valence_r", "false_recall_vs_falseness_r", "schema_p_true_vs_label_r"}


def test_llm_validate_rejects_feature_mode(capsys):
    with pytest.raises(SystemExit):
        main(["llm-validate", "--mode", "feature"])
