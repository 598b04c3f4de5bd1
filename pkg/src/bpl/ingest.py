"""Corpus ingestion for LIAR- and MultiFC-format TSV files.

Both parsers return plain :class:`Claim` records plus an :class:`IngestReport`
that accounts for every input line: ``parsed + rejected == total_lines``.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional
from urllib.parse import urlsplit

import numpy as np

log = logging.getLogger(__name__)


class Dataset(str, enum.Enum):
    LIAR = "Liar"
    MULTIFC = "MultiFC"


class Ternary(str, enum.Enum):
    FALSE = "False"
    TRUE = "True"
    MIXTURE = "Mixture"


# pants-fire=0 ... true=5
LIAR_ORDINAL = {
    "pants-fire": 0,
    "false": 1,
    "barely-true": 2,
    "half-true": 3,
    "mostly-true": 4,
    "true": 5,
}

LIAR_MIN_FIELDS = 14


class IngestError(ValueError):
    pass


class UnparseableLine(IngestError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class MissingLabelMap(IngestError):
    def __init__(self, domain: str):
        super().__init__(f"no label map entry for domain {domain!r}")
        self.domain = domain


@dataclass(frozen=True)
class SpeakerHistory:
    barely_true: int = 0
    false_ct: int = 0
    half_true: int = 0
    mostly_true: int = 0
    pants_fire: int = 0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise ValueError(f"history count {name} must be >= 0, got {value}")

    @property
    def total(self) -> int:
        return self.barely_true + self.false_ct + self.half_true + self.mostly_true + self.pants_fire

    @property
    def false_total(self) -> int:
        return self.barely_true + self.false_ct + self.pants_fire


@dataclass(frozen=True)
class MappedLabel:
    binary: Optional[int] = None
    ternary: Optional[Ternary] = None
    ordinal: Optional[int] = None
    ambiguity: float = 0.0


def liar_label(raw: str) -> MappedLabel:
    """Map one of the six LIAR label strings; anything else raises ``KeyError``."""
    key = raw.strip().lower()
    if key not in LIAR_ORDINAL:
        raise KeyError(f"unknown LIAR label {raw!r}")
    ordinal = LIAR_ORDINAL[key]
    return MappedLabel(
        binary=1 if ordinal >= 3 else 0,
        ordinal=ordinal,
        ambiguity=1.0 - abs(ordinal - 2.5) / 2.5,
    )


def ternary_label(value: Ternary) -> MappedLabel:
    value = Ternary(value)
    binary = {Ternary.TRUE: 1, Ternary.FALSE: 0}.get(value)
    return MappedLabel(binary=binary, ternary=value, ambiguity=1.0 if value is Ternary.MIXTURE else 0.0)


@dataclass(frozen=True)
class Claim:
    id: str
    text: str
    raw_label: str
    dataset: Dataset
    label: MappedLabel
    speaker: Optional[str] = None
    domain: Optional[str] = None
    subject: Optional[str] = None
    history: Optional[SpeakerHistory] = None
    context: Optional[str] = None

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValueError(f"claim {self.id!r} has empty text")

    def to_json(self) -> dict:
        d = asdict(self)
        d["dataset"] = self.dataset.value
        if self.label.ternary is not None:
            d["label"]["ternary"] = self.label.ternary.value
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Claim":
        lab = dict(d["label"])
        if lab.get("ternary") is not None:
            lab["ternary"] = Ternary(lab["ternary"])
        hist = d.get("history")
        return cls(
            id=d["id"],
            text=d["text"],
            raw_label=d["raw_label"],
            dataset=Dataset(d["dataset"]),
            label=MappedLabel(**lab),
            speaker=d.get("speaker"),
            domain=d.get("domain"),
            subject=d.get("subject"),
            history=SpeakerHistory(**hist) if hist is not None else None,
            context=d.get("context"),
        )


@dataclass
class IngestReport:
    source: str = ""
    total_lines: int = 0
    parsed: int = 0
    rejects: list = field(default_factory=list)
    unmapped: int = 0
    warnings: list = field(default_factory=list)

    @property
    def rejected(self) -> int:
        return len(self.rejects)

    def reject(self, line_no: int, reason: str) -> None:
        self.rejects.append({"line": line_no, "reason": reason})

    def merge(self, other: "IngestReport") -> "IngestReport":
        return IngestReport(
            source=";".join(s for s in (self.source, other.source) if s),
            total_lines=self.total_lines + other.total_lines,
            parsed=self.parsed + other.parsed,
            rejects=self.rejects + other.rejects,
            unmapped=self.unmapped + other.unmapped,
            warnings=self.warnings + other.warnings,
        )

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "total_lines": self.total_lines,
            "parsed": self.parsed,
            "rejected": self.rejected,
            "unmapped": self.unmapped,
            "rejects": self.rejects,
            "warnings": self.warnings,
        }


def _lines(stream) -> Iterable[str]:
    if isinstance(stream, (str, Path)):
        with open(stream, encoding="utf-8") as fh:
            yield from fh.read().splitlines()
    else:
        for line in stream:
            yield line.rstrip("\r\n")


def _count(text: str, column: str) -> int:
    text = text.strip()
    if text == "":
        return 0
    value = float(text)
    if not math.isfinite(value) or value < 0 or value != int(value):
        raise ValueError(f"{column} must be a non-negative integer, got {text!r}")
    return int(value)


def _opt(text: str) -> Optional[str]:
    text = text.strip()
    return text or None


def parse_liar(stream, source: str = "") -> tuple[list[Claim], IngestReport]:
    """Parse LIAR TSV lines (id, label, statement, subject, speaker, job, state,
    party, five history counts, context). Extra trailing columns are ignored."""
    report = IngestReport(source=source or (str(stream) if isinstance(stream, (str, Path)) else ""))
    claims = []
    for line_no, line in enumerate(_lines(stream), start=1):
        report.total_lines += 1
        if not line.strip():
            report.reject(line_no, "empty line")
            continue
        cols = line.split("\t")
        if len(cols) < LIAR_MIN_FIELDS:
            report.reject(line_no, f"expected >= {LIAR_MIN_FIELDS} fields, got {len(cols)}")
            continue
        try:
            label = liar_label(cols[1])
            hist = SpeakerHistory(
                barely_true=_count(cols[8], "barely_true"),
                false_ct=_count(cols[9], "false"),
                half_true=_count(cols[10], "half_true"),
                mostly_true=_count(cols[11], "mostly_true"),
                pants_fire=_count(cols[12], "pants_fire"),
            )
            claim = Claim(
                id=cols[0].strip(),
                text=cols[2].strip(),
                raw_label=cols[1].strip(),
                dataset=Dataset.LIAR,
                label=label,
                speaker=_opt(cols[4]),
                subject=_opt(cols[3]),
                history=hist,
                context=_opt(cols[13]),
            )
        except (KeyError, ValueError) as exc:
            report.reject(line_no, str(exc).strip("'\""))
            continue
        claims.append(claim)
        report.parsed += 1
    if report.total_lines == 0:
        report.warnings.append("empty input")
        log.warning("LIAR input %s is empty", report.source or "<stream>")
    return claims, report


# ------------------------------------------------------------------ MultiFC


class LabelMap:
    """Per-domain raw-label -> ternary map. The ``*`` domain is a fallback."""

    def __init__(self, entries: dict[str, dict[str, Ternary]]):
        self.entries = {d.lower(): {k.strip().lower(): Ternary(v) for k, v in m.items()} for d, m in entries.items()}

    @classmethod
    def load(cls, path=None) -> "LabelMap":
        if path is None:
            text = resources.files("bpl").joinpath("data/multifc_labels.tsv").read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        entries: dict[str, dict[str, Ternary]] = {}
        for n, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise IngestError(f"label map line {n}: expected 3 tab-separated fields")
            entries.setdefault(cols[0].strip().lower(), {})[cols[1].strip().lower()] = Ternary(cols[2].strip())
        return cls(entries)

    def lookup(self, domain: str, raw: str) -> Optional[Ternary]:
        domain = (domain or "").lower()
        table = self.entries.get(domain)
        if table is None:
            table = self.entries.get("*")
            if table is None:
                raise MissingLabelMap(domain)
        return table.get(raw.strip().lower())


def url_domain(url: str) -> Optional[str]:
    url = (url or "").strip()
    if not url:
        return None
    host = urlsplit(url if "://" in url else "http://" + url).hostname
    if not host:
        return None
    return host[4:] if host.startswith("www.") else host


def parse_multifc(stream, label_map: Optional[LabelMap] = None, source: str = "") -> tuple[list[Claim], IngestReport]:
    """Parse MultiFC TSV lines (claimID, claim, label, claimURL, reason,
    categories, speaker, ...). Claims whose raw label has no map entry are
    excluded and counted as ``unmapped``."""
    if label_map is None:
        label_map = LabelMap.load()
    elif not isinstance(label_map, LabelMap):
        label_map = LabelMap.load(label_map)
    report = IngestReport(source=source or (str(stream) if isinstance(stream, (str, Path)) else ""))
    claims = []
    for line_no, line in enumerate(_lines(stream), start=1):
        report.total_lines += 1
        if not line.strip():
            report.reject(line_no, "empty line")
            continue
        cols = line.split("\t")
        if len(cols) < 4:
            report.reject(line_no, f"expected >= 4 fields, got {len(cols)}")
            continue
        claim_id, text, raw = cols[0].strip(), cols[1].strip(), cols[2].strip()
        if not text:
            report.reject(line_no, "empty claim text")
            continue
        domain = url_domain(cols[3]) or claim_id.split("-")[0].lower()
        mapped = label_map.lookup(domain, raw)
        if mapped is None:
            report.reject(line_no, f"unmapped label {raw!r} for domain {domain!r}")
            report.unmapped += 1
            continue
        claims.append(
            Claim(
                id=claim_id,
                text=text,
                raw_label=raw,
                dataset=Dataset.MULTIFC,
                label=ternary_label(mapped),
                speaker=_opt(cols[6]) if len(cols) > 6 else None,
                domain=domain,
                subject=_opt(cols[5]) if len(cols) > 5 else None,
            )
        )
        report.parsed += 1
    if report.total_lines == 0:
        report.warnings.append("empty input")
        log.warning("MultiFC input %s is empty", report.source or "<stream>")
    return claims, report


# ---------------------------------------------------------------- sampling


def _stratum(claim: Claim):
    if claim.dataset is Dataset.MULTIFC and claim.label.ternary is not None:
        return claim.label.ternary.value
    return claim.label.binary


def sample_claims(claims: list[Claim], n: int, seed: int) -> list[Claim]:
    """Label-stratified subsample of size ``n`` (largest-remainder allocation),
    returned in a seed-determined shuffled order."""
    if n > len(claims):
        raise ValueError(f"cannot sample n={n} claims from a population of {len(claims)}")
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = np.random.default_rng(seed)
    groups: dict = {}
    for i, c in enumerate(claims):
        groups.setdefault(_stratum(c), []).append(i)
    keys = sorted(groups, key=lambda k: (k is None, str(k)))
    quotas = {k: n * len(groups[k]) / len(claims) for k in keys}
    alloc = {k: int(math.floor(q)) for k, q in quotas.items()}
    short = n - sum(alloc.values())
    for k in sorted(keys, key=lambda k: (-(quotas[k] - alloc[k]), keys.index(k)))[:short]:
        alloc[k] += 1
    picked = []
    for k in keys:
        idx = np.asarray(groups[k])
        picked.extend(rng.choice(idx, size=alloc[k], replace=False).tolist())
    order = rng.permutation(len(picked))
    return [claims[picked[i]] for i in order]


# ------------------------------------------------------------ corpus files


def write_corpus(claims: Iterable[Claim], path, meta: Optional[dict] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if meta is not None:
            fh.write(json.dumps({"_meta": meta}, sort_keys=True) + "\n")
        for c in claims:
            fh.write(json.dumps(c.to_json(), sort_keys=True, ensure_ascii=False) + "\n")


def read_corpus(path) -> list[Claim]:
    claims = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            if "_meta" in d:
                continue
            claims.append(Claim.from_json(d))
    return claims
