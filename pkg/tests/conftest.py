import numpy as np
import pytest

from bpl.features import ClaimFeatures
from bpl.synth import liar_corpus


def liar_row(claim_id="1.json", label="half-true", text="Unemployment is at 2 percent.",
             history=(1, 2, 0, 0, 3), extra=()):
    """One LIAR-format TSV line; history is (barely, false, half, mostly, pants)."""
    cols = [claim_id, label, text, "economy", "jane-doe", "mayor", "Ohio", "democrat",
            *(str(h) for h in history), "a debate", *extra]
    return "\t".join(cols)


def make_features(valence=0.0, depth=0, repetition=0, recency=0.0, prior_true=0.5, credibility=1.0):
    return ClaimFeatures(valence, depth, repetition, recency, prior_true, credibility)


@pytest.fixture(scope="session")
def small_liar():
    return liar_corpus(600, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# filled by the acceptance tests, echoed once at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
