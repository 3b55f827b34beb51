from __future__ import annotations

import random
from pathlib import Path

import pytest

from sdglens.ingest import TextBlock, make_block

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"
CORPUS = FIXTURES / "corpus"


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    print(f"\n[acceptance] {'PASS' if report.passed else 'FAIL'}: {name}")


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN


# --- synthetic block lists for merge/cleaning properties ----------------------

_VOCAB = [f"tok{i}" for i in range(300)]


def random_blocks(rng: random.Random, n_min: int = 5, n_max: int = 40) -> list[TextBlock]:
    """Seeded random document: plain prose, split sentences, captions,
    digit-heavy blocks, empties and deliberate short repeats."""
    blocks: list[str] = []
    n = rng.randint(n_min, n_max)
    while len(blocks) < n:
        roll = rng.random()
        if roll < 0.08:
            blocks.append("")
        elif roll < 0.14:
            blocks.append(rng.choice(["figure 3 overview", "Table 12: data", "page 4"]))
        elif roll < 0.20:
            blocks.append(" ".join(str(rng.randint(1900, 2100)) for _ in range(rng.randint(1, 4))))
        elif roll < 0.28 and blocks:
            blocks.append(rng.choice(blocks))  # duplicate an earlier block verbatim
        else:
            words = [rng.choice(_VOCAB) for _ in range(rng.randint(1, 30))]
            text = " ".join(words)
            if rng.random() < 0.6:
                text += "."
            if rng.random() < 0.3:
                text = text.capitalize()
            blocks.append(text)
    return [make_block(i, text) for i, text in enumerate(blocks)]
