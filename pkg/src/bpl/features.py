"""Per-claim input symbols: valence, epistemic depth, repetition, recency,
speaker prior and source credibility."""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .config import FeatureConfig
from .ingest import Claim, Dataset, SpeakerHistory

MAX_DEPTH = 2
_TOKEN = re.compile(r"[a-z0-9]+")


def _data_text(name: str) -> str:
    return resources.files("bpl").joinpath(f"data/{name}").read_text(encoding="utf-8")


def _content_lines(text: str):
    for line in text.splitlines():
        if line.strip() and not line.lstrip().startswith("#"):
            yield line


@dataclass(frozen=True)
class ValenceLexicon:
    terms: dict

    def __post_init__(self):
        if not self.terms:
            raise ValueError("valence lexicon must not be empty")
        for term, w in self.terms.items():
            if not 0.0 < w <= 1.0:
                raise ValueError(f"lexicon weight for {term!r} must be in (0, 1], got {w}")

    @classmethod
    def load(cls, path=None) -> "ValenceLexicon":
        text = _data_text("lexicon.tsv") if not path else Path(path).read_text(encoding="utf-8")
        terms = {}
        for line in _content_lines(text):
            parts = line.split("\t")
            terms[parts[0].strip().lower()] = float(parts[1]) if len(parts) > 1 else 1.0
        return cls(terms)


@dataclass(frozen=True)
class CredibilityTable:
    entries: dict
    default_gamma: float = 0.5

    def lookup(self, domain: Optional[str]) -> float:
        return self.entries.get((domain or "").lower(), self.default_gamma)

    @classmethod
    def load(cls, path=None) -> "CredibilityTable":
        text = _data_text("credibility.tsv") if not path else Path(path).read_text(encoding="utf-8")
        entries, default = {}, 0.5
        for line in _content_lines(text):
            key, value = line.split("\t")[:2]
            gamma = float(value)
            if not 0.0 <= gamma <= 1.0:
                raise ValueError(f"credibility for {key!r} outside [0, 1]")
            if key.strip().lower() == "default":
                default = gamma
            else:
                entries[key.strip().lower()] = gamma
        return cls(entries, default)


def load_markers(path=None) -> list[str]:
    text = _data_text("markers.txt") if not path else Path(path).read_text(encoding="utf-8")
    return [line.strip().lower() for line in _content_lines(text)]


DEFAULT_MARKERS = tuple(load_markers())


def _marker_pattern(markers) -> re.Pattern:
    if not markers:
        raise ValueError("attribution marker list must not be empty")
    alts = sorted({m.strip().lower() for m in markers}, key=len, reverse=True)
    body = "|".join(r"\s+".join(map(re.escape, m.split())) for m in alts)
    return re.compile(rf"\b(?:{body})\b", re.IGNORECASE)


_DEFAULT_PATTERN = _marker_pattern(DEFAULT_MARKERS)


def marker_count(text: str, markers=None) -> int:
    """Uncapped number of attribution-marker occurrences."""
    pattern = _DEFAULT_PATTERN if markers is None else _marker_pattern(markers)
    return len(pattern.findall(text or ""))


def epistemic_depth(text: str, markers=None) -> int:
    """Marker-count depth heuristic, capped at 2."""
    return min(MAX_DEPTH, marker_count(text, markers))


def tokens(text: str) -> list[str]:
    return _TOKEN.findall((text or "").lower())


def valence(text: str, lexicon: ValenceLexicon) -> float:
    score = sum(lexicon.terms.get(tok, 0.0) for tok in tokens(text))
    return min(1.0, score / 2.0)


def repetition(claim: Claim, multifc_constant: float = 200.0) -> int:
    if claim.dataset is Dataset.MULTIFC:
        words = max(1, len(claim.text.split()))
        return max(0, int(math.floor(multifc_constant / words + 0.5)) - 1)
    if claim.history is None:
        return 0
    return claim.history.false_total


def speaker_prior(history: Optional[SpeakerHistory]) -> float:
    """Laplace-smoothed P(w=1) from the speaker's history counts."""
    if history is None:
        return 0.5
    return (history.half_true + history.mostly_true + 1) / (history.total + 2)


def source_credibility(claim: Claim, table: CredibilityTable, liar_scale: float = 20.0) -> float:
    if claim.dataset is Dataset.MULTIFC:
        return table.lookup(claim.domain)
    if claim.history is None:
        return 0.0
    return min(1.0, claim.history.total / liar_scale)


def historical_false_rate(claim: Claim) -> float:
    h = claim.history
    if h is None or h.total == 0:
        return 0.0
    return h.false_total / h.total


@dataclass(frozen=True)
class ClaimFeatures:
    valence: float
    depth: int
    repetition: int
    recency: float
    prior_true: float
    credibility: float

    def __post_init__(self):
        for name in ("valence", "recency", "prior_true", "credibility"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if not 0 <= self.depth <= MAX_DEPTH:
            raise ValueError(f"depth must be in [0, {MAX_DEPTH}], got {self.depth}")
        if self.repetition < 0:
            raise ValueError("repetition must be >= 0")


def load_recency(path) -> dict:
    out = {}
    with open(path, encoding="utf-8", newline="") as fh:
        dialect = "excel-tab" if str(path).endswith((".tsv", ".tab")) else "excel"
        for row in csv.reader(fh, dialect=dialect):
            if not row or row[0].startswith("#") or row[0] == "id":
                continue
            rho = float(row[1])
            if not 0.0 <= rho <= 1.0:
                raise ValueError(f"recency for {row[0]!r} outside [0, 1]")
            out[row[0]] = rho
    return out


class FeatureExtractor:
    """Bundles the lexicon, marker set and proxy constants for a run."""

    def __init__(self, config: Optional[FeatureConfig] = None):
        self.config = config = config or FeatureConfig()
        self.lexicon = ValenceLexicon.load(config.lexicon or None)
        self.markers = load_markers(config.markers or None)
        self._pattern = _marker_pattern(self.markers)
        self.credibility = CredibilityTable.load(config.credibility_table or None)
        self.recency = load_recency(config.recency_sidecar) if config.recency_sidecar else {}

    def markers_in(self, text: str) -> int:
        return len(self._pattern.findall(text or ""))

    def extract(self, claim: Claim) -> ClaimFeatures:
        return ClaimFeatures(
            valence=valence(claim.text, self.lexicon),
            depth=min(MAX_DEPTH, self.markers_in(claim.text)),
            repetition=repetition(claim, self.config.multifc_repetition_constant),
            recency=self.recency.get(claim.id, 0.0),
            prior_true=speaker_prior(claim.history) if claim.dataset is Dataset.LIAR else 0.5,
            credibility=source_credibility(claim, self.credibility, self.config.liar_gamma_scale),
        )

    def extract_all(self, claims: Iterable[Claim]) -> list[ClaimFeatures]:
        return [self.extract(c) for c in claims]


FEATURE_COLUMNS = ("id", "valence", "depth", "repetition", "recency", "prior_true", "credibility")


def write_feature_csv(path, claims, feats, header_lines=()) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(FEATURE_COLUMNS)
        for c, f in zip(claims, feats):
            w.writerow([c.id, f.valence, f.depth, f.repetition, f.recency, f.prior_true, f.credibility])


def feature_arrays(feats: list[ClaimFeatures]) -> dict:
    return {
        "valence": np.array([f.valence for f in feats], dtype=float),
        "depth": np.array([f.depth for f in feats], dtype=np.int64),
        "repetition": np.array([f.repetition for f in feats], dtype=float),
        "recency": np.array([f.recency for f in feats], dtype=float),
        "prior_true": np.array([f.prior_true for f in feats], dtype=float),
        "credibility": np.array([f.credibility for f in feats], dtype=float),
    }
