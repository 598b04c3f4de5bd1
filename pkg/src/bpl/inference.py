"""Single-claim BPL inference chain.

compressed prior -> literal listener -> (speaker -> availability-adjusted
likelihood -> listener) x k* -> belief and susceptibility.

The batched population runner in :mod:`bpl.population` runs the same chain
through :mod:`bpl._kernels`; this module is the readable per-claim path and
the one that records a full trace.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _rng
from .features import ClaimFeatures

CLAMP_BAND = (0.05, 0.95)
SPEAKER_EPS = 1e-12


class ParameterError(ValueError):
    pass


class DegenerateInput(ValueError):
    pass


class EmptyRecallCorpus(ValueError):
    pass


class Mode(str, enum.Enum):
    FEATURE = "feature"
    GROUNDED = "grounded"


@dataclass(frozen=True)
class SpeakerType:
    """Deception probability of a level-2 speaker: 0 honest, 1 deceptive."""

    pi: float
    name: str = "General"

    def __post_init__(self):
        if not 0.0 <= self.pi <= 1.0:
            raise ParameterError(f"deception probability must be in [0, 1], got {self.pi}")

    @classmethod
    def honest(cls) -> "SpeakerType":
        return cls(0.0, "Honest")

    @classmethod
    def deceptive(cls) -> "SpeakerType":
        return cls(1.0, "Deceptive")

    @classmethod
    def general(cls, pi: float) -> "SpeakerType":
        return cls(float(pi), "General")

    @classmethod
    def parse(cls, text: str) -> "SpeakerType":
        t = text.strip().lower()
        if t == "honest":
            return cls.honest()
        if t == "deceptive":
            return cls.deceptive()
        if t.startswith("general"):
            inner = t[len("general"):].strip("():= ")
            return cls.general(float(inner))
        raise ParameterError(f"unknown speaker type {text!r}")


@dataclass(frozen=True)
class AgentProfile:
    k: int
    beta: float
    sample_size: int
    alpha: float = 1.0
    lambda_mix: float = 0.5
    # None -> General(pi = 1 - gamma) at level 2
    speaker_type: Optional[SpeakerType] = None
    apply_depth_cap: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.k not in (0, 1, 2):
            raise ParameterError(f"k must be 0, 1 or 2, got {self.k}")
        if not self.beta > 0:
            raise ParameterError(f"beta must be > 0, got {self.beta}")
        if int(self.sample_size) != self.sample_size or self.sample_size < 1:
            raise ParameterError(f"sample size N must be a positive integer, got {self.sample_size}")
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be > 0, got {self.alpha}")
        if not 0.0 <= self.lambda_mix <= 1.0:
            raise ParameterError(f"lambda_mix must be in [0, 1], got {self.lambda_mix}")

    def level2_pi(self, gamma: float) -> float:
        return 1.0 - gamma if self.speaker_type is None else self.speaker_type.pi

    def describe(self) -> dict:
        return {
            "k": self.k,
            "beta": self.beta,
            "N": self.sample_size,
            "alpha": self.alpha,
            "lambda_mix": self.lambda_mix,
            "speaker_type": "General(1-gamma)" if self.speaker_type is None
            else f"{self.speaker_type.name}({self.speaker_type.pi})",
            "apply_depth_cap": self.apply_depth_cap,
        }


@dataclass(frozen=True)
class CompressedPrior:
    p_true: float
    loss: float


@dataclass(frozen=True)
class RecallItem:
    text: str
    recalled_veracity: bool
    phi: float = 1.0

    def __post_init__(self):
        if not self.phi >= 1.0:
            raise ValueError(f"availability weight must be >= 1, got {self.phi}")


@dataclass
class PosteriorResult:
    belief: float
    susceptibility: float
    compression_loss: float
    effective_k: int
    depth_trace: list = field(default_factory=list)
    speaker_likelihoods: tuple = (0.5, 0.5)
    prior_true: float = 0.5


def kl_bernoulli(p: float, q: float) -> float:
    """KL(Bern(p) || Bern(q)) in nats, with 0 log 0 = 0."""
    total = 0.0
    for a, b in ((p, q), (1.0 - p, 1.0 - q)):
        if a > 0.0:
            if b <= 0.0:
                return math.inf
            total += a * math.log(a / b)
    return max(total, 0.0)


def compress_prior(prior_true: float, beta: float, gamma: float) -> CompressedPrior:
    if not beta > 0:
        raise ParameterError(f"beta must be > 0, got {beta}")
    if not 0.0 <= prior_true <= 1.0 or not 0.0 <= gamma <= 1.0:
        raise ParameterError("prior_true and gamma must be in [0, 1]")
    keep = beta / (beta + 1.0)
    mixed = keep * prior_true + (1.0 - keep) * 0.5
    p = gamma * mixed + (1.0 - gamma) * 0.5
    return CompressedPrior(p, kl_bernoulli(prior_true, p))


def availability_weight(valence: float, repetition: float, recency: float) -> float:
    return 1.0 + valence + math.log1p(repetition) + recency


def literal_plausibility(
    features: ClaimFeatures,
    mode: Mode = Mode.FEATURE,
    grounding=None,
    claim=None,
    band: tuple = CLAMP_BAND,
) -> float:
    """s_lit(u, w=1); the w=0 value is its complement."""
    lo, hi = band
    if Mode(mode) is Mode.GROUNDED:
        if grounding is None:
            raise ParameterError("grounded literal plausibility needs a grounding client")
        raw = grounding.plausibility(claim)
    else:
        raw = 0.55 - 0.25 * features.valence
    return min(hi, max(lo, raw))


def listener(level: int, likelihoods: Sequence[float], prior: CompressedPrior) -> np.ndarray:
    """Normalised (L(w=0|u), L(w=1|u)) from a likelihood pair (w=0, w=1)."""
    s0, s1 = float(likelihoods[0]), float(likelihoods[1])
    if s0 < 0 or s1 < 0 or (s0 == 0.0 and s1 == 0.0):
        raise DegenerateInput(f"level {level}: likelihoods must be non-negative and not both zero")
    a = s1 * prior.p_true
    b = s0 * (1.0 - prior.p_true)
    if a + b == 0.0:
        raise DegenerateInput(f"level {level}: zero evidence under the prior")
    l1 = a / (a + b)
    return np.array([1.0 - l1, l1])


def speaker(listener_true: float, alpha: float = 1.0, speaker_type: Optional[SpeakerType] = None,
            eps: float = SPEAKER_EPS) -> tuple[float, float]:
    """(S(u|w=0), S(u|w=1)) for a two-alternative softmax speaker."""
    if speaker_type is None:
        speaker_type = SpeakerType.honest()
    lc = min(1.0 - eps, max(eps, listener_true))
    a = lc**alpha
    b = (1.0 - lc) ** alpha
    h1 = a / (a + b)
    h0 = 1.0 - h1
    pi = speaker_type.pi
    return ((1.0 - pi) * h0 + pi * h1, (1.0 - pi) * h1 + pi * h0)


def sample_recall(corpus: Sequence[RecallItem], n: int, seed: int, stream: int = 0) -> list[RecallItem]:
    """``n`` draws with replacement, P(item) proportional to its phi."""
    if len(corpus) == 0:
        raise EmptyRecallCorpus("recall corpus is empty")
    if n < 1:
        raise ParameterError("sample size must be >= 1")
    phi = np.array([it.phi for it in corpus], dtype=float)
    cum = np.cumsum(phi)
    u = _rng.uniforms(seed, np.arange(stream * n, stream * n + n))
    idx = np.minimum(np.searchsorted(cum, u * cum[-1], side="right"), len(corpus) - 1)
    return [corpus[i] for i in idx]


def recall_likelihood(sample: Sequence[RecallItem], w: int) -> float:
    """Salience-weighted fraction of the sample recalled with veracity ``w``."""
    if len(sample) == 0:
        return 0.5
    total = 0.0
    hit = 0.0
    for it in sample:
        total += it.phi
        if bool(it.recalled_veracity) == bool(w):
            hit += it.phi
    return hit / total


def availability_adjust(s_base: Sequence[float], w_recall: Sequence[float], lambda_mix: float) -> tuple[float, float]:
    if not 0.0 <= lambda_mix <= 1.0:
        raise ParameterError("lambda_mix must be in [0, 1]")
    return tuple((1.0 - lambda_mix) * s + lambda_mix * w for s, w in zip(s_base, w_recall))


def susceptibility(belief: float, loss: float) -> float:
    return belief * (1.0 + loss)


def effective_depth(agent: AgentProfile, depth: int) -> int:
    return min(agent.k, depth + 1) if agent.apply_depth_cap else agent.k


def bpl_posterior(
    features: ClaimFeatures,
    agent: AgentProfile,
    recall_corpus: Sequence[RecallItem],
    mode: Mode = Mode.FEATURE,
    grounding=None,
    claim=None,
    prior: Optional[CompressedPrior] = None,
    band: tuple = CLAMP_BAND,
    eps: float = SPEAKER_EPS,
) -> PosteriorResult:
    """Posterior belief that the claim is true for one bounded agent.

    ``prior`` replaces the feature-derived compressed prior (the hybrid
    pipeline passes a schema prior here). Level ``l`` draws its recall sample
    from counter stream ``l - 1`` of ``agent.seed``.
    """
    if Mode(mode) is Mode.GROUNDED and grounding is None:
        raise ParameterError("grounded mode requires a grounding client")
    cp = prior if prior is not None else compress_prior(features.prior_true, agent.beta, features.credibility)
    s_lit = literal_plausibility(features, mode, grounding, claim, band)
    k_star = effective_depth(agent, features.depth)

    dist = listener(0, (1.0 - s_lit, s_lit), cp)
    trace = [dist]
    s_hat = (1.0 - s_lit, s_lit)
    for level in range(1, k_star + 1):
        stype = SpeakerType.honest() if level == 1 else SpeakerType.general(agent.level2_pi(features.credibility))
        s_base = speaker(dist[1], agent.alpha, stype, eps)
        if agent.lambda_mix > 0.0:
            if len(recall_corpus):
                sample = sample_recall(recall_corpus, agent.sample_size, agent.seed, stream=level - 1)
                w1 = recall_likelihood(sample, 1)
                w_hat = (1.0 - w1, w1)
            else:
                w_hat = (0.5, 0.5)
            s_hat = availability_adjust(s_base, w_hat, agent.lambda_mix)
        else:
            s_hat = s_base
        dist = listener(level, s_hat, cp)
        trace.append(dist)
    belief = float(dist[1])
    return PosteriorResult(
        belief=belief,
        susceptibility=susceptibility(belief, cp.loss),
        compression_loss=cp.loss,
        effective_k=k_star,
        depth_trace=trace,
        speaker_likelihoods=(float(s_hat[0]), float(s_hat[1])),
        prior_true=cp.p_true,
    )
