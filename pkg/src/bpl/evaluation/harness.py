"""Experiment drivers: feature-set cross-validation, ablation, depth
stratification, disagreement correlation and the hybrid comparison.

Each driver returns a plain dataclass whose fields are the raw values the
report is built from, so every summary number can be recomputed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .. import _rng
from ..features import FeatureExtractor, historical_false_rate, tokens
from ..ingest import Claim, Dataset, sample_claims
from ..inference import AgentProfile
from ..population import (
    STAT_NAMES,
    PopulationRun,
    RecallPool,
    canonical_population,
    configure,
    run_population,
)
from .metrics import MetricError, cohens_d, f1_score, mann_whitney_u, pearson_r, roc_auc
from .models import CvResult, cross_validate

FULL_AGENT = (1, 1.0, 25)  # (k, beta, N) of the reference single agent
SURFACE_BASE = ("token_count", "valence", "marker_count")


@dataclass
class EvalData:
    """Binary-labelled claims with their features; unlabelled items are dropped and counted."""

    claims: list
    feats: list
    labels: np.ndarray
    ambiguity: np.ndarray
    excluded: int = 0

    @classmethod
    def build(cls, claims: Sequence[Claim], extractor: Optional[FeatureExtractor] = None) -> "EvalData":
        extractor = extractor or FeatureExtractor()
        kept = [c for c in claims if c.label.binary is not None]
        return cls(
            claims=kept,
            feats=extractor.extract_all(kept),
            labels=np.array([c.label.binary for c in kept], dtype=np.int64),
            ambiguity=np.array([c.label.ambiguity for c in kept], dtype=float),
            excluded=len(claims) - len(kept),
        )

    @property
    def ids(self) -> list[str]:
        return [c.id for c in self.claims]

    def pool(self) -> RecallPool:
        return RecallPool.from_split(self.feats, list(self.labels))

    def subset(self, mask) -> "EvalData":
        idx = np.flatnonzero(mask)
        return EvalData([self.claims[i] for i in idx], [self.feats[i] for i in idx], self.labels[idx],
                        self.ambiguity[idx], self.excluded)


def informative_subset(claims: Sequence[Claim], min_history: int = 20, n: Optional[int] = None) -> list[Claim]:
    """Claims whose speaker history is long enough for full credibility (gamma = 1)."""
    out = [c for c in claims if c.history is not None and c.history.total >= min_history]
    return out[:n] if n is not None else out


# --------------------------------------------------------------- feature sets


def surface_columns(data: EvalData, extractor: Optional[FeatureExtractor] = None) -> tuple[np.ndarray, list[str]]:
    extractor = extractor or FeatureExtractor()
    kinds = {c.dataset for c in data.claims}
    if len(kinds) != 1:
        raise ValueError("surface features need a single-dataset corpus")
    liar = kinds.pop() is Dataset.LIAR
    last = "historical_false_rate" if liar else "domain_credibility"
    X = np.column_stack([
        [len(tokens(c.text)) for c in data.claims],
        [f.valence for f in data.feats],
        [extractor.markers_in(c.text) for c in data.claims],
        [historical_false_rate(c) if liar else f.credibility for c, f in zip(data.claims, data.feats)],
    ]).astype(float)
    return X, [*SURFACE_BASE, last]


def full_agent_index(agents: Sequence[AgentProfile]) -> int:
    k, beta, n = FULL_AGENT
    for j, a in enumerate(agents):
        if a.k == k and a.beta == beta and a.sample_size == n:
            return j
    raise ValueError("population has no (k=1, beta=1, N=25) agent")


FEATURE_SETS = ("Susceptibility", "Belief", "BplFull", "Surface", "BplPlusSurface")


def feature_matrix(name: str, data: EvalData, run: PopulationRun, agents: Sequence[AgentProfile],
                   extractor: Optional[FeatureExtractor] = None) -> tuple[np.ndarray, list[str]]:
    """Columns for one of the five feature sets (1, 1, 9, 4 and 13 columns)."""
    if name not in FEATURE_SETS:
        raise ValueError(f"unknown feature set {name!r}; choose from {', '.join(FEATURE_SETS)}")
    j = full_agent_index(agents)
    if name == "Susceptibility":
        return run.susceptibility[:, [j]], ["susceptibility"]
    if name == "Belief":
        return run.beliefs[:, [j]], ["belief"]
    stats = run.summary()
    if name == "BplFull":
        return stats, list(STAT_NAMES)
    surf, cols = surface_columns(data, extractor)
    if name == "Surface":
        return surf, cols
    return np.column_stack([stats, surf]), [*STAT_NAMES, *cols]


@dataclass
class FeatureSetResult:
    name: str
    columns: list
    cv: CvResult


def run_feature_eval(data: EvalData, run: PopulationRun, agents, feature_set: str, seed: int = 0,
                     drop: Sequence[str] = (), extractor=None, workers: int = 1, labels=None) -> FeatureSetResult:
    X, cols = feature_matrix(feature_set, data, run, agents, extractor)
    missing = [d for d in drop if d not in cols]
    if missing:
        raise ValueError(f"feature set {feature_set} has no column(s) {missing}")
    keep = [i for i, c in enumerate(cols) if c not in drop]
    X, cols = X[:, keep], [cols[i] for i in keep]
    y = data.labels if labels is None else np.asarray(labels)
    name = feature_set if not drop else f"{feature_set}-minus-{'+'.join(drop)}"
    return FeatureSetResult(name, cols, cross_validate(X, y, seed=seed, columns=cols, workers=workers))


def _numerics(cfg) -> dict:
    """Clamp band and speaker eps from a [bpl] config (defaults when None)."""
    if cfg is None:
        return {"band": (0.05, 0.95), "eps": 1e-12}
    return {"band": (cfg.clamp_low, cfg.clamp_high), "eps": cfg.speaker_eps}


def population_for(data: EvalData, seed: int, cfg=None, use_numba=None):
    agents = configure(canonical_population(seed), cfg)
    run = run_population(data.ids, data.feats, agents, data.pool(), seed, use_numba=use_numba, **_numerics(cfg))
    return agents, run


# -------------------------------------------------------------------- ablation

ABLATION_CONFIGS = (
    ("Full", 1, 1.0, 25),
    ("NoDepth", 2, 1.0, 25),
    ("NoCompression", 1, 100.0, 25),
    ("NoAvailability", 1, 1.0, 1000),
    ("RsaLiteral", 0, 100.0, 1000),
    ("MaxBounded", 0, 0.1, 3),
)


@dataclass
class AblationRow:
    name: str
    k: int
    beta: float
    sample_size: int
    r: float
    delta_r: float


def run_ablation(data: EvalData, seed: int = 0, cfg=None, apply_depth_cap: bool = True,
                 use_numba=None) -> list[AblationRow]:
    """Pearson r(belief, label) per configuration and its difference from Full."""
    agents = [AgentProfile(k, b, n, seed=seed) for _, k, b, n in ABLATION_CONFIGS]
    agents = configure(agents, cfg)
    agents = [replace(a, apply_depth_cap=apply_depth_cap) for a in agents]
    run = run_population(data.ids, data.feats, agents, data.pool(), seed, use_numba=use_numba, **_numerics(cfg))
    rs = [pearson_r(run.beliefs[:, j], data.labels) for j in range(len(agents))]
    return [AblationRow(name, k, b, n, r, r - rs[0]) for (name, k, b, n), r in zip(ABLATION_CONFIGS, rs)]


def ablation_check(rows: Sequence[AblationRow], bound: float = 0.02) -> dict:
    deltas = {r.name: r.delta_r for r in rows if r.name != "Full"}
    most_negative = min(deltas, key=deltas.get)
    return {
        "most_negative": most_negative,
        "no_compression_most_negative": most_negative == "NoCompression",
        "no_depth_within_bound": abs(deltas["NoDepth"]) <= bound,
        "no_availability_within_bound": abs(deltas["NoAvailability"]) <= bound,
    }


# --------------------------------------------------------- depth stratification


@dataclass
class DepthCell:
    k: int
    errors_d0: list
    errors_d1: list
    cohens_d: Optional[float]
    mw_u: Optional[float]
    mw_p: Optional[float]
    note: str = ""

    @property
    def mean_d0(self) -> Optional[float]:
        return float(np.mean(self.errors_d0)) if self.errors_d0 else None

    @property
    def mean_d1(self) -> Optional[float]:
        return float(np.mean(self.errors_d1)) if self.errors_d1 else None


@dataclass
class DepthTable:
    cells: list
    n_depth0: int
    n_depth1: int
    excluded_depth2: int
    beta: float = 1.0
    sample_size: int = 25


def depth_stratified_eval(data: EvalData, seed: int = 0, cfg=None, beta: float = 1.0, sample_size: int = 25,
                          use_numba=None) -> DepthTable:
    """Mean |belief - label| on depth-0 and depth-1 claims for k = 0, 1, 2.

    Cohen's d and the Mann-Whitney p compare depth-1 errors against depth-0
    errors, so a negative d means the agent is more accurate on attributed
    claims. Depth-2 claims are outside the table and only counted.
    """
    agents = configure([AgentProfile(k, beta, sample_size, seed=seed) for k in (0, 1, 2)], cfg)
    run = run_population(data.ids, data.feats, agents, data.pool(), seed, use_numba=use_numba, **_numerics(cfg))
    depth = np.array([f.depth for f in data.feats])
    err = np.abs(run.beliefs - data.labels[:, None])
    cells = []
    for j, agent in enumerate(agents):
        e0 = err[depth == 0, j].tolist()
        e1 = err[depth == 1, j].tolist()
        d = u = p = None
        note = ""
        if not e0 or not e1:
            note = "empty stratum: statistics skipped"
        else:
            try:
                d = cohens_d(e1, e0)
            except MetricError as exc:
                note = str(exc)
            mw = mann_whitney_u(e1, e0)
            u, p = mw.u, mw.p
        cells.append(DepthCell(agent.k, e0, e1, d, u, p, note))
    return DepthTable(cells, int(np.sum(depth == 0)), int(np.sum(depth == 1)), int(np.sum(depth == 2)),
                      beta, sample_size)


def depth_check(table: DepthTable, gap: float = 0.02) -> dict:
    e = {c.k: c for c in table.cells}
    if any(e[k].mean_d1 is None for k in (0, 1, 2)) or e[2].mean_d0 is None:
        return {"ordering": False, "gaps": False, "k2_depth1_below_depth0": False}
    m1 = {k: e[k].mean_d1 for k in (0, 1, 2)}
    return {
        "ordering": m1[1] > m1[0] > m1[2],
        "gaps": (m1[1] - m1[0]) >= gap and (m1[0] - m1[2]) >= gap,
        "k2_depth1_below_depth0": e[2].mean_d1 < e[2].mean_d0,
    }


# ------------------------------------------------------------------ disagreement


@dataclass
class DisagreementResult:
    r: float
    p_permutation: float
    n: int
    n_permutations: int


def disagreement_correlation(delta, ambiguity, n_permutations: int = 1000, seed: int = 0) -> DisagreementResult:
    """Pearson r between predicted disagreement and the ambiguity proxy.

    The p-value is one-sided (r greater than under shuffled ambiguity),
    with the usual +1 correction.
    """
    d = np.asarray(delta, dtype=float)
    a = np.asarray(ambiguity, dtype=float)
    r = pearson_r(d, a)
    rng = np.random.default_rng(_rng.derive_seed(seed, "disagreement-permutation"))
    dc = (d - d.mean()) / np.linalg.norm(d - d.mean())
    ac = (a - a.mean()) / np.linalg.norm(a - a.mean())
    perms = np.array([np.dot(dc, rng.permutation(ac)) for _ in range(n_permutations)])
    p = (1 + int(np.sum(perms >= r - 1e-12))) / (1 + n_permutations)
    return DisagreementResult(r, p, d.size, n_permutations)


# ------------------------------------------------------------- hybrid vs feature


@dataclass
class ModelMetrics:
    auc: float
    pearson_r: float
    f1: float
    mean_belief: float


@dataclass
class HybridComparison:
    n: int
    k: int
    beta: float
    sample_size: int
    feature: ModelMetrics
    hybrid: ModelMetrics
    diagnostics: dict = field(default_factory=dict)
    claim_ids: list = field(default_factory=list)
    feature_beliefs: list = field(default_factory=list)
    hybrid_beliefs: list = field(default_factory=list)


def _model_metrics(beliefs, labels) -> ModelMetrics:
    b = np.asarray(beliefs, dtype=float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        f1 = f1_score(b, labels)
    try:
        r = pearson_r(b, labels)
    except MetricError:
        r = float("nan")
    return ModelMetrics(roc_auc(b, labels), r, f1, float(b.mean()))


def _safe_r(x, y):
    try:
        return pearson_r(x, y)
    except MetricError:
        return None


def compare_hybrid(data: EvalData, client, k: int, beta: float, sample_size: int, seed: int = 0,
                   cfg=None, max_in_flight: int = 1) -> HybridComparison:
    """Hybrid and feature pipelines on the same claims at identical (k, beta, N)."""
    from ..grounding import ground_claims, hybrid_posteriors

    agent = configure([AgentProfile(k, beta, sample_size, seed=seed)], cfg)[0]
    num = _numerics(cfg)
    feat_run = run_population(data.ids, data.feats, [agent], data.pool(), seed, **num)
    grounded = ground_claims(client, data.claims, sample_size, max_in_flight)
    hyb = hybrid_posteriors(data.claims, data.feats, agent, grounded, seed, **num)
    fb = feat_run.beliefs[:, 0]
    hb = np.array([h.belief for h in hyb])
    g = [grounded[c.id] for c in data.claims]
    diagnostics = {
        "phi_vs_valence_r": _safe_r([x.phi for x in g], [f.valence for f in data.feats]),
        "false_recall_vs_falseness_r": _safe_r([x.false_recall_rate for x in g], 1 - data.labels),
        "schema_p_true_vs_label_r": _safe_r([x.schema.p_true for x in g], data.labels),
    }
    return HybridComparison(len(data.claims), k, beta, sample_size, _model_metrics(fb, data.labels),
                            _model_metrics(hb, data.labels), diagnostics, data.ids, fb.tolist(), hb.tolist())


def sample_eval(claims: Sequence[Claim], n: Optional[int], seed: int, extractor=None) -> EvalData:
    labelled = [c for c in claims if c.label.binary is not None]
    chosen = labelled if n is None or n >= len(labelled) else sample_claims(labelled, n, seed)
    data = EvalData.build(chosen, extractor)
    data.excluded = len(claims) - len(labelled)
    return data
