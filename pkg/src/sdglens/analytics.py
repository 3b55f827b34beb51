"""Aggregation and evaluation: country scores, category shares, interlinkage
graph, and the match-rate harness against an expert-labelled baseline."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .parsing import NEUTRAL, BOTH, INWARD, OUTWARD, InterlinkageRecord

ENVIRONMENT = "environment"
SOCIETY = "society"
ECONOMY = "economy"

# Goal grouping used for the category maps; SDG17 counts as social.
CATEGORY_SDGS = {
    ENVIRONMENT: frozenset({6, 13, 14, 15}),
    SOCIETY: frozenset({1, 2, 3, 4, 5, 7, 11, 16, 17}),
    ECONOMY: frozenset({8, 9, 10, 12}),
}
CATEGORY_ORDER = (ENVIRONMENT, SOCIETY, ECONOMY)

SDG_CATEGORY = {sdg: cat for cat, sdgs in CATEGORY_SDGS.items() for sdg in sdgs}


class AnalyticsError(Exception):
    pass


@dataclass(frozen=True)
class SentimentDistribution:
    p0: float
    p1: float
    p2: float

    def __post_init__(self):
        for p in (self.p0, self.p1, self.p2):
            if not 0.0 <= p <= 1.0:
                raise AnalyticsError(f"probability out of range: {p}")
        if abs(self.p0 + self.p1 + self.p2 - 1.0) > 1e-9:
            raise AnalyticsError(f"probabilities must sum to 1, got {self.p0 + self.p1 + self.p2}")

    @classmethod
    def from_label(cls, label: int) -> "SentimentDistribution":
        if label not in (0, 1, 2):
            raise AnalyticsError(f"sentiment class must be 0, 1 or 2, got {label}")
        return cls(*(1.0 if i == label else 0.0 for i in range(3)))


@dataclass(frozen=True)
class CountryScore:
    country: str
    mean_sentiment: float
    z: float
    n_paragraphs: int


def expected_sentiment(dist: SentimentDistribution) -> float:
    """Expected class value in [0, 2]; the per-paragraph sentiment score."""
    return dist.p1 + 2.0 * dist.p2


def country_zscores(means: Mapping[str, float]) -> dict[str, float]:
    """Standardize country means with the population standard deviation.

    Zero variance (including a single country) maps everything to z = 0.
    """
    if not means:
        raise AnalyticsError("no countries to standardize")
    countries = sorted(means)
    values = [means[c] for c in countries]
    mu = sum(values) / len(values)
    sigma = math.sqrt(sum((v - mu) ** 2 for v in values) / len(values))
    if sigma == 0.0:
        return {c: 0.0 for c in countries}
    return {c: (means[c] - mu) / sigma for c in countries}


def country_scores(
    paragraph_sentiments: Sequence[tuple[str, float]],
) -> list[CountryScore]:
    """Aggregate (country, expected value) pairs into per-country scores."""
    totals: dict[str, list[float]] = {}
    for country, value in paragraph_sentiments:
        totals.setdefault(country, []).append(value)
    means = {c: sum(vs) / len(vs) for c, vs in totals.items()}
    zs = country_zscores(means)
    return [
        CountryScore(c, means[c], zs[c], len(totals[c]))
        for c in sorted(means)
    ]


def category_shares(
    assignments: Iterable[tuple[str, int]],
) -> dict[str, dict[str, float]]:
    """Per-country fractions over the three goal categories.

    SDG 0 must be filtered upstream; it carries no category.
    """
    counts: dict[str, dict[str, int]] = {}
    for country, sdg in assignments:
        if sdg == 0:
            raise AnalyticsError("SDG 0 has no category; exclude it before aggregation")
        category = SDG_CATEGORY.get(sdg)
        if category is None:
            raise AnalyticsError(f"SDG number out of range: {sdg}")
        counts.setdefault(country, {cat: 0 for cat in CATEGORY_ORDER})[category] += 1
    shares: dict[str, dict[str, float]] = {}
    for country in sorted(counts):
        total = sum(counts[country].values())
        shares[country] = {cat: counts[country][cat] / total for cat in CATEGORY_ORDER}
    return shares


@dataclass(frozen=True)
class SdgEvalRow:
    gold_count: int
    predicted_count: int
    recall: float
    bias: int


@dataclass(frozen=True)
class EvalReport:
    match_rate: float
    precision: float
    n_items: int
    per_sdg: dict[int, SdgEvalRow]

    def as_dict(self) -> dict:
        return {
            "match_rate": self.match_rate,
            "precision": self.precision,
            "n_items": self.n_items,
            "per_sdg": {
                str(sdg): {
                    "gold_count": row.gold_count,
                    "predicted_count": row.predicted_count,
                    "recall": row.recall,
                    "bias": row.bias,
                }
                for sdg, row in sorted(self.per_sdg.items())
            },
        }


def match_rate(
    predictions: Mapping[str, frozenset[int] | set[int]],
    gold: Mapping[str, frozenset[int] | set[int]],
) -> EvalReport:
    """Gold-label recall plus per-SDG detection bias.

    match_rate = (sum over items of |gold ∩ predicted|) / (sum of |gold|).
    bias(s) = total predicted occurrences of s − total gold occurrences;
    positive means over-detection, negative chronic misses.
    """
    if set(predictions) != set(gold):
        missing = set(gold) ^ set(predictions)
        raise AnalyticsError(f"prediction/gold item keys differ: {sorted(missing)[:5]}")
    if not gold:
        raise AnalyticsError("empty gold baseline")
    for item, labels in gold.items():
        if not labels:
            raise AnalyticsError(f"gold item {item} has no labels")
        if len(labels) > 2:
            raise AnalyticsError(f"gold item {item} has more than two labels")

    covered = 0
    gold_total = 0
    predicted_total = 0
    per_sdg_gold: dict[int, int] = {}
    per_sdg_pred: dict[int, int] = {}
    per_sdg_hit: dict[int, int] = {}
    for item in gold:
        g = set(gold[item])
        p = set(predictions[item])
        covered += len(g & p)
        gold_total += len(g)
        predicted_total += len(p)
        for sdg in g:
            per_sdg_gold[sdg] = per_sdg_gold.get(sdg, 0) + 1
            if sdg in p:
                per_sdg_hit[sdg] = per_sdg_hit.get(sdg, 0) + 1
        for sdg in p:
            per_sdg_pred[sdg] = per_sdg_pred.get(sdg, 0) + 1

    per_sdg: dict[int, SdgEvalRow] = {}
    for sdg in sorted(set(per_sdg_gold) | set(per_sdg_pred)):
        gold_count = per_sdg_gold.get(sdg, 0)
        predicted_count = per_sdg_pred.get(sdg, 0)
        recall = per_sdg_hit.get(sdg, 0) / gold_count if gold_count else 0.0
        per_sdg[sdg] = SdgEvalRow(gold_count, predicted_count, recall, predicted_count - gold_count)

    return EvalReport(
        match_rate=covered / gold_total,
        precision=covered / predicted_total if predicted_total else 0.0,
        n_items=len(gold),
        per_sdg=per_sdg,
    )


def load_gold_csv(
    path: str | Path,
    warnings: list[str] | None = None,
) -> dict[str, frozenset[int]]:
    """Read an expert baseline: item_id, sdg_a, sdg_b (optional), type.

    Target-level labels like "13.2" are coarsened to their goal; each
    coarsening is reported through `warnings`.  The type column is accepted
    for shape compatibility but plays no role in set matching.
    """
    gold: dict[str, frozenset[int]] = {}
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"item_id", "sdg_a"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise AnalyticsError(f"gold file must have columns item_id, sdg_a: {path}")
        for lineno, row in enumerate(reader, start=2):
            item = row["item_id"]
            if not item:
                raise AnalyticsError(f"{path}:{lineno}: empty item_id")
            if item in gold:
                raise AnalyticsError(f"{path}:{lineno}: duplicate item_id {item!r}")
            labels = set()
            for column in ("sdg_a", "sdg_b"):
                raw = (row.get(column) or "").strip()
                if not raw:
                    continue
                labels.add(_coarsen_gold_label(raw, f"{path}:{lineno}", warnings))
            if not labels:
                raise AnalyticsError(f"{path}:{lineno}: item {item!r} has no SDG labels")
            gold[item] = frozenset(labels)
    if not gold:
        raise AnalyticsError(f"gold file has no rows: {path}")
    return gold


def _coarsen_gold_label(raw: str, where: str, warnings: list[str] | None) -> int:
    goal_part = raw.split(".", 1)[0]
    try:
        goal = int(goal_part)
    except ValueError:
        raise AnalyticsError(f"{where}: unparseable SDG label {raw!r}") from None
    if not 1 <= goal <= 17:
        raise AnalyticsError(f"{where}: SDG label outside 1..17: {raw!r}")
    if "." in raw and warnings is not None:
        warnings.append(f"{where}: target label {raw!r} coarsened to goal {goal}")
    return goal


@dataclass
class InterlinkageGraph:
    """Directed multigraph over SDGs 1..17, aggregated from records.

    Edge weights count records per (source, target, relationship); neutral
    records are tallied per unordered pair but add no edges.
    """

    edges: dict[tuple[int, int, str], int] = field(default_factory=dict)
    neutral_pairs: dict[tuple[int, int], int] = field(default_factory=dict)

    nodes = tuple(range(1, 18))

    def add_edge(self, a: int, b: int, relationship: str) -> None:
        key = (a, b, relationship)
        self.edges[key] = self.edges.get(key, 0) + 1

    def total_weight(self) -> int:
        return sum(self.edges.values())

    def edge_list(self) -> list[tuple[int, int, str, int]]:
        return [(a, b, rel, w) for (a, b, rel), w in sorted(self.edges.items())]


def build_interlinkage_graph(records: Iterable[InterlinkageRecord]) -> InterlinkageGraph:
    """outward a→b, inward b→a, both adds both directions, neutral no edge."""
    graph = InterlinkageGraph()
    for record in records:
        if record.relationship == NEUTRAL:
            pair = (min(record.sdg_a, record.sdg_b), max(record.sdg_a, record.sdg_b))
            graph.neutral_pairs[pair] = graph.neutral_pairs.get(pair, 0) + 1
            continue
        if record.directionality in (OUTWARD, BOTH):
            graph.add_edge(record.sdg_a, record.sdg_b, record.relationship)
        if record.directionality in (INWARD, BOTH):
            graph.add_edge(record.sdg_b, record.sdg_a, record.relationship)
    return graph
