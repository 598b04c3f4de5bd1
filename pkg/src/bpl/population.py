"""Agent population: the canonical nine agents, batched inference over a
corpus, and per-claim population statistics."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from . import _kernels, _rng
from .config import BplConfig
from .features import ClaimFeatures, feature_arrays
from .inference import AgentProfile, PosteriorResult, SpeakerType

POPULATION_GRID = ((0.2, 5), (1.0, 25), (50.0, 500))

STAT_NAMES = (
    "mean_belief",
    "var_belief",
    "min_belief",
    "max_belief",
    "median_belief",
    "mean_susceptibility",
    "var_susceptibility",
    "mean_loss",
    "frac_believe",
)


def canonical_population(seed: int = 0, **overrides) -> list[AgentProfile]:
    """3x3 grid: k in {0,1,2} x (beta, N) in {(0.2,5), (1,25), (50,500)}."""
    return [
        AgentProfile(k=k, beta=beta, sample_size=n, seed=seed, **overrides)
        for k in (0, 1, 2)
        for beta, n in POPULATION_GRID
    ]


def agent_from_config(k: int, beta: float, n: int, cfg: Optional[BplConfig] = None, seed: int = 0) -> AgentProfile:
    cfg = cfg or BplConfig()
    stype = SpeakerType.general(float(cfg.level2_pi)) if cfg.level2_pi else None
    return AgentProfile(
        k=k,
        beta=beta,
        sample_size=n,
        alpha=cfg.alpha,
        lambda_mix=cfg.lambda_mix,
        speaker_type=stype,
        apply_depth_cap=cfg.apply_depth_cap,
        seed=seed,
    )


def configure(agents: Sequence[AgentProfile], cfg: Optional[BplConfig]) -> list[AgentProfile]:
    if cfg is None:
        return list(agents)
    stype = SpeakerType.general(float(cfg.level2_pi)) if cfg.level2_pi else None
    return [
        replace(a, alpha=cfg.alpha, lambda_mix=cfg.lambda_mix, speaker_type=stype, apply_depth_cap=cfg.apply_depth_cap)
        for a in agents
    ]


def disagreement(beliefs) -> float:
    """Population variance of beliefs (divides by M)."""
    b = np.asarray(beliefs, dtype=float)
    if b.size == 0:
        raise ValueError("disagreement needs at least one belief")
    return float(np.mean((b - b.mean()) ** 2))


@dataclass(frozen=True)
class PopulationSummary:
    mean_belief: float
    var_belief: float
    min_belief: float
    max_belief: float
    median_belief: float
    mean_susceptibility: float
    var_susceptibility: float
    mean_loss: float
    frac_believe: float

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, n) for n in STAT_NAMES)


def summary_matrix(beliefs: np.ndarray, susc: np.ndarray, loss: np.ndarray) -> np.ndarray:
    """Row-wise nine statistics for (claims x agents) arrays."""
    b = np.asarray(beliefs, dtype=float)
    s = np.asarray(susc, dtype=float)
    mb = b.mean(axis=1)
    ms = s.mean(axis=1)
    return np.column_stack(
        [
            mb,
            np.mean((b - mb[:, None]) ** 2, axis=1),
            b.min(axis=1),
            b.max(axis=1),
            np.median(b, axis=1),
            ms,
            np.mean((s - ms[:, None]) ** 2, axis=1),
            np.asarray(loss, dtype=float).mean(axis=1),
            (b > 0.5).mean(axis=1),
        ]
    )


def summarize(results: Sequence[PosteriorResult], expected: int = 9) -> PopulationSummary:
    if len(results) != expected:
        raise ValueError(f"summarize expects {expected} results, got {len(results)}")
    row = summary_matrix(
        np.array([[r.belief for r in results]]),
        np.array([[r.susceptibility for r in results]]),
        np.array([[r.compression_loss for r in results]]),
    )[0]
    return PopulationSummary(*(float(v) for v in row))


# ------------------------------------------------------------ batch runner


@dataclass
class RecallPool:
    """Recall corpus as arrays; ``self_index[i]`` locates claim i in the pool (-1 if absent)."""

    phi: np.ndarray
    is_true: np.ndarray
    self_index: np.ndarray

    @property
    def cum_phi(self) -> np.ndarray:
        return np.cumsum(self.phi)

    @classmethod
    def from_split(cls, feats: Sequence[ClaimFeatures], labels: Sequence[Optional[int]]) -> "RecallPool":
        """Other claims of the split with their ground-truth labels as recalled veracity."""
        fa = feature_arrays(list(feats))
        phi_all = 1.0 + fa["valence"] + np.log1p(fa["repetition"]) + fa["recency"]
        keep = np.array([lab is not None for lab in labels], dtype=bool)
        pos = np.cumsum(keep) - 1
        self_index = np.where(keep, pos, -1).astype(np.int64)
        is_true = np.array([lab == 1 for lab, k in zip(labels, keep) if k], dtype=bool)
        return cls(phi_all[keep], is_true, self_index)

    @classmethod
    def empty(cls, n_claims: int) -> "RecallPool":
        return cls(np.zeros(0), np.zeros(0, dtype=bool), np.full(n_claims, -1, dtype=np.int64))


@dataclass
class PopulationRun:
    beliefs: np.ndarray  # claims x agents
    susceptibility: np.ndarray
    loss: np.ndarray
    prior_true: np.ndarray
    effective_k: np.ndarray
    levels: np.ndarray  # claims x agents x 3
    s_hat: np.ndarray  # claims x agents x 2
    seeds: np.ndarray  # claims x agents (uint64)

    def summary(self) -> np.ndarray:
        return summary_matrix(self.beliefs, self.susceptibility, self.loss)


def compress_batch(prior_true, beta, gamma):
    """Vectorised compressed prior and KL loss."""
    p = np.asarray(prior_true, dtype=float)
    g = np.asarray(gamma, dtype=float)
    keep = beta / (beta + 1.0)
    q = g * (keep * p + (1.0 - keep) * 0.5) + (1.0 - g) * 0.5
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(p > 0, p * np.log(p / q), 0.0)
        t0 = np.where(p < 1, (1.0 - p) * np.log((1.0 - p) / (1.0 - q)), 0.0)
    return q, np.maximum(t1 + t0, 0.0)


def run_population(
    claim_ids: Sequence[str],
    feats: Sequence[ClaimFeatures],
    agents: Sequence[AgentProfile],
    pool: RecallPool,
    global_seed: int = 0,
    s_lit: Optional[np.ndarray] = None,
    prior_override: Optional[tuple] = None,
    band: tuple = (0.05, 0.95),
    eps: float = 1e-12,
    use_numba: Optional[bool] = None,
) -> PopulationRun:
    """Run every agent over every claim.

    Per-claim seeds are ``derive_seed(global_seed, claim_id, agent_index)``,
    so results do not depend on claim order or batching. ``s_lit`` and
    ``prior_override=(p_tilde, loss)`` inject grounded components.
    """
    fa = feature_arrays(list(feats))
    n, m = len(feats), len(agents)
    if s_lit is None:
        s_lit = 0.55 - 0.25 * fa["valence"]
    s_lit = np.clip(np.asarray(s_lit, dtype=float), band[0], band[1])
    out = {
        "beliefs": np.empty((n, m)),
        "susceptibility": np.empty((n, m)),
        "loss": np.empty((n, m)),
        "prior_true": np.empty((n, m)),
        "effective_k": np.empty((n, m), dtype=np.int64),
        "levels": np.empty((n, m, 3)),
        "s_hat": np.empty((n, m, 2)),
        "seeds": np.empty((n, m), dtype=np.uint64),
    }
    cum = pool.cum_phi
    for j, agent in enumerate(agents):
        if prior_override is not None:
            p_tilde, loss = (np.asarray(x, dtype=float) for x in prior_override)
        else:
            p_tilde, loss = compress_batch(fa["prior_true"], agent.beta, fa["credibility"])
        if agent.apply_depth_cap:
            k_eff = np.minimum(agent.k, fa["depth"] + 1)
        else:
            k_eff = np.full(n, agent.k, dtype=np.int64)
        if agent.speaker_type is None:
            pi2 = 1.0 - fa["credibility"]
        else:
            pi2 = np.full(n, agent.speaker_type.pi)
        seeds = np.array([_rng.derive_seed(global_seed, cid, j) for cid in claim_ids], dtype=np.uint64)
        levels, s_hat = _kernels.recursion_batch(
            p_tilde, s_lit, pi2, k_eff, agent.alpha, agent.lambda_mix, agent.sample_size,
            seeds, cum, pool.phi, pool.is_true, pool.self_index, eps, use_numba=use_numba,
        )
        belief = levels[np.arange(n), k_eff]
        out["beliefs"][:, j] = belief
        out["susceptibility"][:, j] = belief * (1.0 + loss)
        out["loss"][:, j] = loss
        out["prior_true"][:, j] = p_tilde
        out["effective_k"][:, j] = k_eff
        out["levels"][:, j] = levels
        out["s_hat"][:, j] = s_hat
        out["seeds"][:, j] = seeds
    return PopulationRun(**out)


def write_population_csv(path, claim_ids, stats: np.ndarray, ambiguity, header_lines=()) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["id", *STAT_NAMES, "disagreement", "ambiguity"])
        for cid, row, amb in zip(claim_ids, stats, ambiguity):
            w.writerow([cid, *(repr(float(v)) for v in row), repr(float(row[1])), repr(float(amb))])
