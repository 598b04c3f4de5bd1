"""Seeded synthetic corpora.

``liar_corpus`` writes LIAR-format TSV lines from an explicit generative
story, so the whole ingest -> features -> inference -> evaluation path can be
exercised offline:

* one-off sources (viral posts, chain emails, minor officials) make up most
  records. They have one to three statements, all on the same side of the
  true/false split, and are mostly rated at the ends of the scale. Their
  history columns include the record's own label, as in the original LIAR
  release, so the historical false rate leaks the label.
* prolific speakers carry a reliability drawn from ``reliability_range``.
  Each of their statements is true with that probability, lands mostly
  mid-scale, and their history counts are a large multinomial sample of the
  same process. Their speaker prior is informative and roughly calibrated.

``disinfo_suite`` builds the three information-disorder strata (mis-, dis-,
mal-information) with controlled valence, repetition, credibility and prior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeatureExtractor
from .ingest import Claim, parse_liar

LABELS = ("pants-fire", "false", "barely-true", "half-true", "mostly-true", "true")
# history column order in LIAR: barely_true, false, half_true, mostly_true, pants_fire
_HIST_COL = {"barely-true": 0, "false": 1, "half-true": 2, "mostly-true": 3, "pants-fire": 4}

_SUBJECTS = (
    "unemployment", "the state budget", "violent crime", "gas prices", "the minimum wage",
    "health insurance premiums", "public school funding", "the federal deficit", "immigration",
    "property taxes", "voter turnout", "the pension fund", "border security", "drug overdoses",
    "college tuition", "the trade deficit", "wildfire damage", "home foreclosures",
)
_PREDICATES = (
    "has doubled since {year}", "fell by {pct} percent last year", "is at its highest level in {num} years",
    "went up {pct} percent under the current governor", "is lower than in any neighboring state",
    "costs taxpayers {num} million dollars a year", "has not changed since {year}",
    "grew faster here than anywhere else in the country", "dropped {pct} percent in a decade",
)
_ATTRIBUTORS = (
    "Senator Smith", "The governor", "A campaign spokesperson", "The mayor", "A blog post",
    "An opposition ad", "The party chairman", "A viral post",
)
_ATTRIBUTION = ("says", "claims", "said", "believes", "alleges")
_LEXICON = (
    "shocking", "outrage", "scandal", "fraud", "corrupt", "disaster", "crisis", "terror", "threat",
    "danger", "deadly", "fear", "catastrophe", "illegal", "lie", "evil", "destroy", "attack", "abuse",
    "radical", "chaos", "horrific", "collapse",
)
_PARTIES = ("republican", "democrat", "none", "independent")


def _statement(rng, n_valence: int, attributed: bool) -> str:
    subject = _SUBJECTS[rng.integers(len(_SUBJECTS))]
    pred = _PREDICATES[rng.integers(len(_PREDICATES))].format(
        year=int(rng.integers(1990, 2016)), pct=int(rng.integers(2, 60)), num=int(rng.integers(2, 90))
    )
    body = f"{subject} {pred}"
    if n_valence:
        words = rng.choice(len(_LEXICON), size=n_valence, replace=False)
        body = f"{body}, a {' and '.join(_LEXICON[w] for w in words)} for everyone"
    if attributed:
        who = _ATTRIBUTORS[rng.integers(len(_ATTRIBUTORS))]
        verb = _ATTRIBUTION[rng.integers(len(_ATTRIBUTION))]
        return f"{who} {verb} {body}."
    return body[0].upper() + body[1:] + "."


def _row(claim_id, label, text, subject, speaker, party, hist, context) -> str:
    cols = [claim_id, label, text, subject, speaker, "", "", party, *[str(int(h)) for h in hist], context]
    return "\t".join(cols)


@dataclass
class LiarSpec:
    n: int = 5000
    seed: int = 0
    prolific_share: float = 0.2
    n_prolific_speakers: int = 300
    reliability_range: tuple = (0.05, 0.95)
    history_size: tuple = (40, 400)
    attributed_share: float = 0.08
    # lexicon-hit rates: sensational wording is more common in false claims
    valence_share: float = 0.05
    false_valence_share: float = 0.4
    # one-off rating distribution over LIAR labels (pants-fire .. true)
    oneoff_labels: tuple = (0.34, 0.14, 0.04, 0.04, 0.10, 0.34)


def liar_lines(spec: LiarSpec = None, **kw) -> list[str]:
    """LIAR-format TSV lines following the generative story in the module docstring."""
    spec = spec or LiarSpec(**kw)
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.reliability_range
    reliab = rng.uniform(lo, hi, size=spec.n_prolific_speakers)
    true_mid = np.array([0.0, 0.0, 0.0, 0.45, 0.40, 0.15])
    false_mid = np.array([0.15, 0.40, 0.45, 0.0, 0.0, 0.0])
    base_hist = []
    for t in reliab:
        size = int(rng.integers(spec.history_size[0], spec.history_size[1] + 1))
        p6 = t * true_mid + (1 - t) * false_mid
        counts = rng.multinomial(size, p6)
        # drop the "true" column: LIAR history has no true count
        base_hist.append(np.array([counts[2], counts[1], counts[3], counts[4], counts[0]]))

    lines = []
    oneoff_p = np.asarray(spec.oneoff_labels, dtype=float)
    oneoff_p = oneoff_p / oneoff_p.sum()
    n_oneoff = 0
    for i in range(spec.n):
        attributed = rng.random() < spec.attributed_share
        u_val = rng.random(2)
        subject = _SUBJECTS[rng.integers(len(_SUBJECTS))].replace(" ", "-")
        if rng.random() < spec.prolific_share:
            s = int(rng.integers(spec.n_prolific_speakers))
            t = reliab[s]
            y = rng.random() < t
            label = LABELS[rng.choice(6, p=true_mid if y else false_mid)]
            hist = base_hist[s].copy()
            speaker = f"speaker-{s:03d}"
            party = _PARTIES[s % len(_PARTIES)]
        else:
            label = LABELS[rng.choice(6, p=oneoff_p)]
            positive = LABELS.index(label) >= 3
            hist = np.zeros(5, dtype=int)
            # the record itself plus up to two same-side earlier statements
            side = ("half-true", "mostly-true") if positive else ("pants-fire", "false", "barely-true")
            for _ in range(int(rng.integers(0, 3))):
                hist[_HIST_COL[side[rng.integers(len(side))]]] += 1
            n_oneoff += 1
            speaker = f"oneoff-{n_oneoff:05d}"
            party = "none"
        if label in _HIST_COL:
            hist[_HIST_COL[label]] += 1
        share = spec.valence_share if LABELS.index(label) >= 3 else spec.false_valence_share
        n_val = int(u_val[0] < share) + int(u_val[1] < share / 4)
        text = _statement(rng, n_val, attributed)
        lines.append(_row(f"{i}.json", label, text, subject, speaker, party, hist, "a synthetic source"))
    return lines


def liar_corpus(n: int = 5000, seed: int = 0, **kw) -> list[Claim]:
    claims, report = parse_liar(liar_lines(LiarSpec(n=n, seed=seed, **kw)), source="synthetic")
    assert report.rejected == 0
    return claims


# ------------------------------------------------------- disorder strata


@dataclass
class SuiteItem:
    claim: Claim
    stratum: str  # mis | dis | mal


def _history_for(rng, total: int, p_true: float) -> np.ndarray:
    """Five LIAR history columns with ``total`` statements and about ``p_true`` true-ish."""
    n_true = int(round(p_true * total))
    n_false = total - n_true
    half = int(rng.integers(0, n_true + 1))
    barely = int(rng.integers(0, n_false + 1))
    pants = int(rng.integers(0, n_false - barely + 1))
    return np.array([barely, n_false - barely - pants, half, n_true - half, pants])


# stratum, depth, share false, history total, history true share, valence terms
SUITE_PLAN = (
    ("mis", 0, 1.0, (20, 24), (0.9, 1.0), (0, 0)),
    ("dis", 1, 1.0, (0, 1), (1.0, 1.0), (0, 0)),
    ("mal", 2, 0.27, (24, 30), (0.3, 0.45), (2, 2)),
)


def disinfo_suite(seed: int = 0, n: int = 900, plan: tuple = None) -> list[SuiteItem]:
    """Labelled claims in three strata of n/3 (+-1) items each.

    mis-information (depth 0): plain, plausible framing from credible sources
    with a reliable track record. False.
    dis-information (depth 1): plausible claims falsely attributed to a named
    speaker and relayed by low-credibility sources with a short, clean
    history. False.
    mal-information (depth 2): "everyone knows ... believe" framing of
    genuine but inflammatory content, high valence and heavily repeated, so
    it dominates what agents recall. Mostly true.
    """
    rng = np.random.default_rng(seed)
    sizes = [n // 3 + (1 if i < n % 3 else 0) for i in range(3)]
    plan = plan or SUITE_PLAN
    lines, strata = [], []
    idx = 0
    for (name, depth, p_false, tot_rng, pt_rng, val_rng), size in zip(plan, sizes):
        # exact false share per stratum, in shuffled order
        is_false = rng.permutation(np.arange(size) < int(round(p_false * size)))
        for y_false in is_false:
            n_val = int(rng.integers(val_rng[0], val_rng[1] + 1))
            subject = _SUBJECTS[rng.integers(len(_SUBJECTS))]
            pred = _PREDICATES[rng.integers(len(_PREDICATES))].format(
                year=int(rng.integers(1990, 2016)), pct=int(rng.integers(2, 60)), num=int(rng.integers(2, 90))
            )
            body = f"{subject} {pred}"
            if n_val:
                words = rng.choice(len(_LEXICON), size=n_val, replace=False)
                body += ", a " + " and ".join(_LEXICON[w] for w in words)
            if depth == 0:
                text = body[0].upper() + body[1:] + "."
            elif depth == 1:
                who = _ATTRIBUTORS[rng.integers(len(_ATTRIBUTORS))]
                text = f"{who} {_ATTRIBUTION[rng.integers(len(_ATTRIBUTION))]} {body}."
            else:
                text = f"Everyone knows officials believe {body}."
            label = ("pants-fire", "false", "barely-true")[rng.integers(3)] if y_false else (
                "half-true", "mostly-true", "true")[rng.integers(3)]
            total = int(rng.integers(tot_rng[0], tot_rng[1] + 1))
            hist = _history_for(rng, total, float(rng.uniform(*pt_rng)))
            lines.append(_row(f"{name}-{idx}", label, text, subject.replace(" ", "-"),
                              f"{name}-source-{idx}", "none", hist, name))
            strata.append(name)
            idx += 1
    claims, report = parse_liar(lines, source="disinfo-suite")
    assert report.rejected == 0
    return [SuiteItem(c, s) for c, s in zip(claims, strata)]


def suite_features(items, extractor: FeatureExtractor = None):
    extractor = extractor or FeatureExtractor()
    return [extractor.extract(it.claim) for it in items]
