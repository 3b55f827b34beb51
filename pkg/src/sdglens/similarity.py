"""Strategy 1: tag each paragraph with the most similar SDG description.

The default backend is TF-IDF plus cosine similarity over the 17 SDG
reference descriptions bundled with the package; a remote embedding service
can be plugged in through the same scoring contract (see backends).
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Protocol, Sequence

from .sdgs import SDG_MAX, SDG_NAMES

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


class SimilarityError(Exception):
    pass


@dataclass(frozen=True)
class SdgDescription:
    sdg: int
    name: str
    description: str


@dataclass(frozen=True)
class SimilarityAssignment:
    para_id: str
    scores: tuple[float, ...]  # index i holds the score for SDG i+1
    best: int
    best_score: float


def load_descriptions(path: str | Path | None = None) -> list[SdgDescription]:
    """Load the 17 SDG reference descriptions (bundled file by default)."""
    if path is None:
        raw = resources.files("sdglens.data").joinpath("sdg_descriptions.json").read_text("utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    entries = json.loads(raw)
    descriptions = [SdgDescription(e["sdg"], e["name"], e["description"]) for e in entries]
    if [d.sdg for d in descriptions] != list(range(1, SDG_MAX + 1)):
        raise SimilarityError("descriptions file must contain SDGs 1..17 in order")
    for d in descriptions:
        if d.name != SDG_NAMES[d.sdg]:
            raise SimilarityError(
                f"description name for SDG {d.sdg} must be {SDG_NAMES[d.sdg]!r}, got {d.name!r}"
            )
    return descriptions


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens; punctuation stripped, digit runs kept as tokens."""
    return _TOKEN_RE.findall(text.lower())


class TfidfModel:
    """tf-idf with raw term counts and idf = ln(N / df), no smoothing.

    The vocabulary is frozen at build time; terms unseen in the corpus get
    weight zero when vectorizing new text.
    """

    def __init__(self, corpus: Sequence[str]):
        if not corpus:
            raise SimilarityError("empty corpus")
        self.n_docs = len(corpus)
        self._doc_tokens = [tokenize(doc) for doc in corpus]
        df: Counter[str] = Counter()
        for tokens in self._doc_tokens:
            df.update(set(tokens))
        self.idf = {term: math.log(self.n_docs / count) for term, count in df.items()}

    def vector(self, text: str) -> dict[str, float]:
        counts = Counter(tokenize(text))
        return {t: n * self.idf[t] for t, n in counts.items() if t in self.idf}

    def doc_vector(self, index: int) -> dict[str, float]:
        counts = Counter(self._doc_tokens[index])
        return {t: n * self.idf[t] for t, n in counts.items()}


def cosine_similarity(u: Mapping[str, float], v: Mapping[str, float]) -> float:
    if not u or not v:
        return 0.0
    if u == v:  # exact self-similarity, immune to sqrt rounding
        return 1.0 if any(w != 0.0 for w in u.values()) else 0.0
    if len(v) < len(u):
        u, v = v, u
    dot = sum(w * v[t] for t, w in u.items() if t in v)
    norm_u = math.sqrt(sum(w * w for w in u.values()))
    norm_v = math.sqrt(sum(w * w for w in v.values()))
    if norm_u == 0.0 or norm_v == 0.0:
        return 0.0
    return min(1.0, dot / (norm_u * norm_v))


class SimilarityBackend(Protocol):
    """Scores a paragraph against each of the 17 descriptions, values in [0, 1]."""

    def score(self, paragraph: str, descriptions: Sequence[SdgDescription]) -> list[float]:
        ...


class TfidfBackend:
    """Default scorer: model built over the 17 descriptions plus the paragraph."""

    def score(self, paragraph: str, descriptions: Sequence[SdgDescription]) -> list[float]:
        corpus = [d.description for d in descriptions] + [paragraph]
        model = TfidfModel(corpus)
        pvec = model.doc_vector(len(corpus) - 1)
        return [cosine_similarity(pvec, model.doc_vector(i)) for i in range(len(descriptions))]


def pick_best(scores: Sequence[float]) -> tuple[int, float]:
    """Argmax with ties broken by the lower SDG number; all-zero means SDG 0."""
    best, best_score = 0, 0.0
    for i, score in enumerate(scores):
        if score > best_score:
            best, best_score = i + 1, score
    return best, best_score


def assign_sdg(
    para_id: str,
    text: str,
    descriptions: Sequence[SdgDescription],
    backend: SimilarityBackend | None = None,
) -> SimilarityAssignment:
    if len(descriptions) != SDG_MAX:
        raise SimilarityError(f"expected {SDG_MAX} descriptions, got {len(descriptions)}")
    scorer = backend or TfidfBackend()
    try:
        scores = scorer.score(text, descriptions)
    except SimilarityError:
        raise
    except Exception as exc:
        raise SimilarityError(f"similarity backend failed for {para_id}: {exc}") from exc
    if len(scores) != SDG_MAX:
        raise SimilarityError(f"backend returned {len(scores)} scores for {para_id}")
    best, best_score = pick_best(scores)
    return SimilarityAssignment(para_id, tuple(scores), best, best_score)
