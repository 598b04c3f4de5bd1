"""Command-line entry point: ``bpl <command> [options]``.

Commands
--------
ingest          parse LIAR/MultiFC TSV (or generate a synthetic corpus) into JSON-lines
infer           run the agent population or one agent over a corpus
evaluate        cross-validated feature sets and the disagreement correlation
ablate          six-configuration ablation
depth-analysis  depth-stratified prediction error
llm-validate    hybrid (grounded) vs feature pipeline on a small sample

Every output file starts with a metadata header holding the artifact version,
a hash of the resolved configuration and run arguments, a hash of the input
corpus and the seed. Outputs carry no timestamps, so two runs with equal
headers produce identical files in feature and stub modes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .config import load_config
from .features import FeatureExtractor, write_feature_csv
from .ingest import Claim, IngestError, LabelMap, parse_liar, parse_multifc, read_corpus, sample_claims, write_corpus
from .inference import AgentProfile, ParameterError
from .population import canonical_population, configure, run_population, write_population_csv

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2


class CliError(Exception):
    """User-facing failure; printed without a traceback and mapped to exit code 2."""


# ------------------------------------------------------------------ helpers


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def corpus_hash(claims) -> str:
    blob = "\n".join(json.dumps(c.to_json(), sort_keys=True, ensure_ascii=False) for c in claims)
    return _sha(blob.encode("utf-8"))


def _load_corpus(path, producer: str = "bpl ingest") -> list[Claim]:
    p = Path(path)
    if not p.exists():
        raise CliError(f"corpus file not found: {p} (create it with `{producer} --out {p}`)")
    try:
        return read_corpus(p)
    except (ValueError, KeyError) as exc:
        raise CliError(f"{p}: not a corpus file ({exc})") from None


def _meta(args, cfg, claims, extra=None) -> dict:
    run = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "text", "emit_csv", "stats",
                                                                   "report", "check", "threads", "config",
                                                                   "features", "population")}
    run.update(extra or {})
    blob = json.dumps({"config": cfg.to_dict(), "run": run}, sort_keys=True, default=str)
    return {
        "artifact_version": __version__,
        "command": args.command,
        "config_hash": _sha(blob.encode("utf-8")),
        "dataset_hash": corpus_hash(claims),
        "seed": args.seed,
        "n_claims": len(claims),
        "run": run,
        "config": cfg.to_dict(),
    }


def _write(path, text: str) -> None:
    p = Path(path)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8")


def parse_agent(spec: str) -> dict:
    """``k=0,beta=0.2,N=5`` -> {"k": 0, "beta": 0.2, "sample_size": 5}."""
    out = {}
    for part in spec.split(","):
        key, sep, value = part.partition("=")
        key = key.strip()
        if not sep:
            raise CliError(f"bad --agent item {part!r}; expected key=value")
        try:
            if key == "k":
                out["k"] = int(value)
            elif key == "beta":
                out["beta"] = float(value)
            elif key in ("N", "n"):
                out["sample_size"] = int(value)
            else:
                raise CliError(f"unknown --agent key {key!r}; use k, beta, N")
        except ValueError:
            raise CliError(f"bad value in --agent {part!r}") from None
    missing = {"k", "beta", "sample_size"} - set(out)
    if missing:
        raise CliError(f"--agent needs k, beta and N (missing {', '.join(sorted(missing))})")
    return out


def _overrides(args) -> dict:
    out = {}
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise CliError(f"bad --set {item!r}; expected section.key=value")
        out[key.strip()] = value.strip()
    mode = getattr(args, "mode", None)
    if mode:
        out["grounding.mode"] = mode
    cache = getattr(args, "cache", None)
    if cache:
        out["grounding.cache_path"] = cache
    return out


def _config(args):
    if args.config and not Path(args.config).exists():
        raise CliError(f"config file not found: {args.config}")
    try:
        return load_config(args.config, _overrides(args))
    except ValueError as exc:
        raise CliError(f"invalid configuration: {exc}") from None


def _extractor(cfg) -> FeatureExtractor:
    try:
        return FeatureExtractor(cfg.features)
    except FileNotFoundError as exc:
        raise CliError(f"feature resource not found: {exc.filename}") from None


def _sampled(claims, n, seed):
    if n is None or n >= len(claims):
        return claims
    return sample_claims(claims, n, seed)


def _emit_report(report, args) -> int:
    if args.out:
        _write(args.out, report.to_json())
    if getattr(args, "text", None):
        _write(args.text, report.to_text())
    if getattr(args, "emit_csv", None):
        report.write_csv(args.emit_csv)
    sys.stdout.write(report.to_text())
    if args.check and not report.all_passed:
        return EXIT_CHECK_FAILED
    return EXIT_OK


# ------------------------------------------------------------------ commands


def cmd_ingest(args) -> int:
    from .synth import disinfo_suite, liar_corpus

    if args.kind in ("liar", "multifc"):
        if not args.input:
            raise CliError(f"--in is required for --kind {args.kind}")
        path = Path(args.input)
        if not path.exists():
            raise CliError(f"input file not found: {path}")
        try:
            with open(path, encoding="utf-8", newline="") as fh:
                if args.kind == "liar":
                    claims, report = parse_liar(fh, source=str(path))
                else:
                    lm = LabelMap.load(args.label_map) if args.label_map else LabelMap.load()
                    claims, report = parse_multifc(fh, lm, source=str(path))
        except (OSError, UnicodeDecodeError) as exc:
            raise CliError(f"cannot read {path}: {exc}") from None
        except IngestError as exc:
            raise CliError(str(exc)) from None
        report_json = report.to_json()
    elif args.kind == "synthetic-liar":
        claims = liar_corpus(args.n or 5000, seed=args.seed)
        report_json = {"source": "synthetic-liar", "parsed": len(claims), "rejected": 0}
    else:
        claims = [it.claim for it in disinfo_suite(seed=args.seed, n=args.n or 900)]
        report_json = {"source": "disinfo-suite", "parsed": len(claims), "rejected": 0}
    total = len(claims)
    if args.sample is not None:
        try:
            claims = sample_claims(claims, args.sample, args.seed)
        except ValueError as exc:
            raise CliError(str(exc)) from None
    meta = {"artifact_version": __version__, "kind": args.kind, "seed": args.seed, "sample": args.sample,
            "n_claims": len(claims), "dataset_hash": corpus_hash(claims)}
    write_corpus(claims, args.out, meta)
    report_json = {**report_json, "written": len(claims), "sampled_from": total}
    report_path = args.report or f"{args.out}.report.json"
    _write(report_path, json.dumps({"meta": meta, "report": report_json}, indent=2, sort_keys=True) + "\n")
    rejected = report_json.get("rejected", 0)
    print(f"ingest {args.kind}: parsed {report_json.get('parsed', total)}, rejected {rejected}, "
          f"wrote {len(claims)} claims to {args.out}")
    return EXIT_OK


def _agents_for(args, cfg) -> list[AgentProfile]:
    if args.agent:
        spec = parse_agent(args.agent)
        try:
            agents = [AgentProfile(**spec, seed=args.seed)]
        except ParameterError as exc:
            raise CliError(f"invalid agent: {exc}") from None
    else:
        agents = canonical_population(args.seed)
    return configure(agents, cfg.bpl)


def cmd_infer(args) -> int:
    cfg = _config(args)
    agents = _agents_for(args, cfg)
    claims = _sampled(_load_corpus(args.corpus), args.sample, args.seed)
    extractor = _extractor(cfg)
    feats = extractor.extract_all(claims)
    band = (cfg.bpl.clamp_low, cfg.bpl.clamp_high)
    ids = [c.id for c in claims]
    meta = _meta(args, cfg, claims, {"agents": [a.describe() for a in agents]})
    # backends agree to ~1e-15, not bitwise, so the header names the one used
    meta["backend"] = _kernels.backend()
    labels = [c.label.binary for c in claims]
    records = []
    if cfg.grounding.mode == "feature":
        from .population import RecallPool

        run = run_population(ids, feats, agents, RecallPool.from_split(feats, labels), args.seed, band=band,
                             eps=cfg.bpl.speaker_eps)
        for i, cid in enumerate(ids):
            for j, a in enumerate(agents):
                records.append({
                    "id": cid, "agent": j, "k": a.k, "beta": a.beta, "N": a.sample_size,
                    "belief": float(run.beliefs[i, j]), "susceptibility": float(run.susceptibility[i, j]),
                    "loss": float(run.loss[i, j]), "effective_k": int(run.effective_k[i, j]),
                    "s_hat": [float(x) for x in run.s_hat[i, j]], "seed": int(run.seeds[i, j]),
                })
        beliefs, susc, loss = run.beliefs, run.susceptibility, run.loss
    else:
        from .grounding import ground_claims, hybrid_posteriors, make_client

        client = make_client(cfg.grounding)
        n = len(claims)
        beliefs, susc, loss = (np.empty((n, len(agents))) for _ in range(3))
        grounded_by_n = {}
        for j, a in enumerate(agents):
            if a.sample_size not in grounded_by_n:
                grounded_by_n[a.sample_size] = ground_claims(client, claims, a.sample_size,
                                                             cfg.grounding.max_in_flight)
            res = hybrid_posteriors(claims, feats, a, grounded_by_n[a.sample_size], args.seed, band,
                                    cfg.bpl.speaker_eps, agent_index=j)
            for i, r in enumerate(res):
                beliefs[i, j], susc[i, j], loss[i, j] = r.belief, r.susceptibility, r.compression_loss
        for i, cid in enumerate(ids):
            for j, a in enumerate(agents):
                records.append({"id": cid, "agent": j, "k": a.k, "beta": a.beta, "N": a.sample_size,
                                "belief": float(beliefs[i, j]), "susceptibility": float(susc[i, j]),
                                "loss": float(loss[i, j])})
    lines = [json.dumps({"_meta": meta}, sort_keys=True)]
    lines += [json.dumps(r, sort_keys=True) for r in records]
    _write(args.out, "\n".join(lines) + "\n")
    header = [f"{k}: {v}" for k, v in sorted(meta.items()) if not isinstance(v, (dict, list))]
    if args.stats:
        if len(agents) != 9:
            raise CliError("--stats needs the nine-agent population (omit --agent)")
        from .population import summary_matrix

        write_population_csv(args.stats, ids, summary_matrix(beliefs, susc, loss),
                             [c.label.ambiguity for c in claims], header)
    if args.features:
        write_feature_csv(args.features, claims, feats, header)
    print(f"infer: {len(claims)} claims x {len(agents)} agents -> {args.out}")
    return EXIT_OK


def _report(args, cfg, claims, extra=None):
    from .evaluation.report import EvalReport

    return EvalReport(_meta(args, cfg, claims, extra))


def cmd_evaluate(args) -> int:
    from .evaluation import (
        FEATURE_SETS,
        EvalData,
        disagreement_correlation,
        population_for,
        run_feature_eval,
    )
    from .ingest import Dataset

    cfg = _config(args)
    claims = _sampled(_load_corpus(args.corpus), args.sample, args.seed)
    data = EvalData.build(claims, _extractor(cfg))
    if len(data.claims) < 10:
        raise CliError("evaluate needs at least 10 binary-labelled claims")
    agents, run = population_for(data, args.seed, cfg.bpl)
    workers = max(1, args.threads or 1)
    results = [run_feature_eval(data, run, agents, fs, seed=args.seed, workers=workers) for fs in FEATURE_SETS]
    liar = all(c.dataset is Dataset.LIAR for c in data.claims)
    if liar:
        results.append(run_feature_eval(data, run, agents, "Surface", seed=args.seed,
                                        drop=["historical_false_rate"], workers=workers))
    rng = np.random.default_rng(args.seed)
    shuffled = rng.permutation(data.labels)
    null = [run_feature_eval(data, run, agents, fs, seed=args.seed, labels=shuffled) for fs in FEATURE_SETS]
    report = _report(args, cfg, data.claims, {"excluded_unlabelled": data.excluded})
    report.add_feature_sets(results)
    dis = disagreement_correlation(run.summary()[:, 1], data.ambiguity, args.permutations, args.seed)
    report.add_disagreement(dis)
    counts = {r.name: len(r.columns) for r in results}
    expected = {"Susceptibility": 1, "Belief": 1, "BplFull": 9, "Surface": 4, "BplPlusSurface": 13}
    report.check("feature set column counts", all(counts[k] == v for k, v in expected.items()),
                 ", ".join(f"{k}={counts[k]}" for k in expected))
    report.check("shuffled labels give AUC near 0.5",
                 all(abs(r.cv.auc_mean - 0.5) <= 0.05 for r in null),
                 ", ".join(f"{r.name}={r.cv.auc_mean:.3f}" for r in null))
    if liar:
        by = {r.name: r for r in results}
        leak = by["Surface"].cv.auc_mean
        clean = by["Surface-minus-historical_false_rate"].cv.auc_mean
        report.check("surface with historical false rate AUC >= 0.99", leak >= 0.99, f"AUC={leak:.4f}")
        report.check("surface without historical false rate AUC < 0.95", clean < 0.95, f"AUC={clean:.4f}")
    report.check("disagreement correlates positively with ambiguity (p < 0.05)",
                 dis.r > 0 and dis.p_permutation < 0.05, f"r={dis.r:.4f}, p={dis.p_permutation:.4f}")
    return _emit_report(report, args)


def cmd_ablate(args) -> int:
    from .evaluation import EvalData, ablation_check, informative_subset, run_ablation

    cfg = _config(args)
    claims = _load_corpus(args.corpus)
    if args.min_history:
        claims = informative_subset(claims, args.min_history)
    claims = _sampled(claims, args.sample, args.seed)
    data = EvalData.build(claims, _extractor(cfg))
    if len(data.claims) < 3:
        raise CliError("ablate needs at least 3 binary-labelled claims")
    rows = run_ablation(data, args.seed, cfg.bpl, apply_depth_cap=args.depth_cap == "on")
    report = _report(args, cfg, data.claims)
    report.add_ablation(rows)
    chk = ablation_check(rows, args.bound)
    deltas = {r.name: r.delta_r for r in rows}
    report.check("NoCompression has the most negative delta r", chk["no_compression_most_negative"],
                 f"most negative: {chk['most_negative']} ({deltas[chk['most_negative']]:+.4f})")
    report.check(f"|delta r| NoDepth <= {args.bound}", chk["no_depth_within_bound"], f"{deltas['NoDepth']:+.4f}")
    report.check(f"|delta r| NoAvailability <= {args.bound}", chk["no_availability_within_bound"],
                 f"{deltas['NoAvailability']:+.4f}")
    return _emit_report(report, args)


def cmd_depth(args) -> int:
    from .evaluation import EvalData, depth_check, depth_stratified_eval

    cfg = _config(args)
    claims = _sampled(_load_corpus(args.corpus), args.sample, args.seed)
    data = EvalData.build(claims, _extractor(cfg))
    table = depth_stratified_eval(data, args.seed, cfg.bpl, beta=args.beta, sample_size=args.N)
    report = _report(args, cfg, data.claims)
    report.add_depth(table)
    chk = depth_check(table, args.gap)
    m = {c.k: c for c in table.cells}
    detail = ", ".join(f"k={k}: {m[k].mean_d1:.4f}" if m[k].mean_d1 is not None else f"k={k}: n/a" for k in (0, 1, 2))
    report.check("depth-1 error ordering k=1 > k=0 > k=2", chk["ordering"], detail)
    report.check(f"depth-1 error gaps >= {args.gap}", chk["gaps"], detail)
    report.check("k=2 depth-1 error below its depth-0 error", chk["k2_depth1_below_depth0"],
                 f"{m[2].mean_d1} vs {m[2].mean_d0}")
    return _emit_report(report, args)


def cmd_llm_validate(args) -> int:
    from .evaluation import EvalData, compare_hybrid
    from .grounding import GroundingError, make_client
    from .synth import liar_corpus

    cfg = _config(args)
    if cfg.grounding.mode == "feature":
        raise CliError("llm-validate needs --mode stub or --mode http")
    if args.corpus:
        claims = _load_corpus(args.corpus)
    else:
        claims = liar_corpus(args.pool, seed=args.seed)
    claims = [c for c in claims if c.label.binary is not None]
    if args.n > len(claims):
        raise CliError(f"--n {args.n} exceeds the {len(claims)} labelled claims available")
    claims = sample_claims(claims, args.n, args.seed)
    data = EvalData.build(claims, _extractor(cfg))
    try:
        AgentProfile(args.k, args.beta, args.N)
    except ParameterError as exc:
        raise CliError(f"invalid agent: {exc}") from None
    try:
        client = make_client(cfg.grounding)
        cmp = compare_hybrid(data, client, args.k, args.beta, args.N, args.seed, cfg.bpl,
                             cfg.grounding.max_in_flight)
    except GroundingError as exc:
        raise CliError(f"grounding failed: {exc}") from None
    report = _report(args, cfg, data.claims, {"corpus": args.corpus or f"synthetic-liar(n={args.pool})"})
    report.add_hybrid(cmp)
    r = cmp.diagnostics["phi_vs_valence_r"]
    report.check("grounded phi correlates positively with lexicon valence", r is not None and r > 0,
                 f"r={r:.4f}" if r is not None else "undefined (zero variance)")
    return _emit_report(report, args)


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [features], [bpl], [grounding] sections")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable); flags win over the file")
    common.add_argument("--seed", type=int, default=0, help="global seed (default 0)")
    common.add_argument("--threads", type=int, default=0, help="cap worker threads (0 = library default)")

    p = argparse.ArgumentParser(prog="bpl", description="Bounded pragmatic listener experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", parents=[common], help="parse or generate a corpus")
    s.add_argument("--kind", required=True, choices=["liar", "multifc", "synthetic-liar", "disinfo-suite"])
    s.add_argument("--in", dest="input", help="input TSV (liar, multifc)")
    s.add_argument("--label-map", help="MultiFC label map TSV (default: bundled)")
    s.add_argument("--out", required=True, help="output corpus (JSON-lines)")
    s.add_argument("--report", help="ingest report path (default: OUT.report.json)")
    s.add_argument("--sample", type=int, help="label-stratified subsample size")
    s.add_argument("--n", type=int, help="corpus size for synthetic kinds")
    s.set_defaults(func=cmd_ingest)

    def reporting(sp, corpus_required=True):
        sp.add_argument("--corpus", required=corpus_required, help="corpus JSON-lines from `bpl ingest`")
        sp.add_argument("--sample", type=int, help="label-stratified subsample size")
        sp.add_argument("--out", help="report JSON path")
        sp.add_argument("--text", help="aligned-text report path")
        sp.add_argument("--check", action="store_true", help="exit 1 if any acceptance check fails")

    s = sub.add_parser("infer", parents=[common], help="run agents over a corpus")
    s.add_argument("--corpus", required=True)
    s.add_argument("--out", required=True, help="inference dump (JSON-lines)")
    grp = s.add_mutually_exclusive_group()
    grp.add_argument("--agent", help="single agent, e.g. k=0,beta=0.2,N=5")
    grp.add_argument("--population", action="store_true", help="nine canonical agents (default)")
    s.add_argument("--mode", choices=["feature", "stub", "http"])
    s.add_argument("--cache", help="grounding response cache (JSON-lines)")
    s.add_argument("--sample", type=int)
    s.add_argument("--stats", help="write per-claim population statistics CSV")
    s.add_argument("--features", help="write per-claim feature CSV")
    s.set_defaults(func=cmd_infer, check=False)

    s = sub.add_parser("evaluate", parents=[common], help="feature-set CV and disagreement correlation")
    reporting(s)
    s.add_argument("--emit-csv", help="write fold-level raw values")
    s.add_argument("--permutations", type=int, default=1000)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("ablate", parents=[common], help="six-configuration ablation")
    reporting(s)
    s.add_argument("--min-history", type=int, default=0,
                   help="keep claims whose speaker history has at least this many statements")
    s.add_argument("--depth-cap", choices=["on", "off"], default="on")
    s.add_argument("--bound", type=float, default=0.02, help="|delta r| bound for NoDepth and NoAvailability")
    s.set_defaults(func=cmd_ablate)

    s = sub.add_parser("depth-analysis", parents=[common], help="depth-stratified prediction error")
    reporting(s)
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--N", type=int, default=25)
    s.add_argument("--gap", type=float, default=0.02)
    s.set_defaults(func=cmd_depth)

    s = sub.add_parser("llm-validate", parents=[common], help="hybrid vs feature pipeline")
    reporting(s, corpus_required=False)
    s.add_argument("--n", type=int, default=50)
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--N", type=int, default=3)
    s.add_argument("--mode", choices=["stub", "http"], default="stub")
    s.add_argument("--cache", help="grounding response cache (JSON-lines)")
    s.add_argument("--pool", type=int, default=1000, help="synthetic corpus size when --corpus is omitted")
    s.set_defaults(func=cmd_llm_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 0):
        _kernels.set_threads(args.threads)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"bpl {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"bpl {args.command}: error: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
