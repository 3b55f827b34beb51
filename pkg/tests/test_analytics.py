from __future__ import annotations

import math
import random
from pathlib import Path

import pytest

from sdglens.analytics import (
    CATEGORY_SDGS,
    SDG_CATEGORY,
    AnalyticsError,
    SentimentDistribution,
    build_interlinkage_graph,
    category_shares,
    country_scores,
    country_zscores,
    expected_sentiment,
    load_gold_csv,
    match_rate,
)
from sdglens.parsing import BOTH, INWARD, NEUTRAL, NONE, OUTWARD, SYNERGY, TRADEOFF, InterlinkageRecord


# --- independent z-score oracle: textbook two-pass formula --------------------

def two_pass_zscores(means: dict[str, float]) -> dict[str, float]:
    values = list(means.values())
    n = len(values)
    mu = math.fsum(values) / n
    var = math.fsum((v - mu) ** 2 for v in values) / n
    sigma = math.sqrt(var)
    if sigma == 0:
        return {c: 0.0 for c in means}
    return {c: (v - mu) / sigma for c, v in means.items()}


class TestSentimentDistribution:
    def test_degenerate_negative(self):
        assert expected_sentiment(SentimentDistribution(1.0, 0.0, 0.0)) == 0.0

    def test_degenerate_positive(self):
        assert expected_sentiment(SentimentDistribution(0.0, 0.0, 1.0)) == 2.0

    def test_dot_product(self):
        assert expected_sentiment(SentimentDistribution(0.2, 0.3, 0.5)) == 1.3

    def test_sum_must_be_one(self):
        with pytest.raises(AnalyticsError):
            SentimentDistribution(0.5, 0.5, 0.5)

    def test_range_checked(self):
        with pytest.raises(AnalyticsError):
            SentimentDistribution(-0.1, 0.6, 0.5)

    def test_from_label(self):
        assert SentimentDistribution.from_label(2) == SentimentDistribution(0.0, 0.0, 1.0)
        with pytest.raises(AnalyticsError):
            SentimentDistribution.from_label(3)

    def test_linearity(self):
        rng = random.Random(2)

        def random_distribution():
            p = [rng.random() for _ in range(3)]
            s = sum(p)
            return SentimentDistribution(p[0] / s, p[1] / s, p[2] / s)

        for _ in range(100):
            d1 = random_distribution()
            d2 = random_distribution()
            lam = rng.random()
            mixed = SentimentDistribution(
                lam * d1.p0 + (1 - lam) * d2.p0,
                lam * d1.p1 + (1 - lam) * d2.p1,
                lam * d1.p2 + (1 - lam) * d2.p2,
            )
            expected = lam * expected_sentiment(d1) + (1 - lam) * expected_sentiment(d2)
            assert expected_sentiment(mixed) == pytest.approx(expected, abs=1e-12)


class TestCountryZscores:
    def test_two_countries_analytic(self):
        assert country_zscores({"A": 1.0, "B": 2.0}) == {"A": -1.0, "B": 1.0}

    def test_single_country(self):
        assert country_zscores({"X": 1.7}) == {"X": 0.0}

    def test_zero_variance(self):
        assert country_zscores({"A": 1.0, "B": 1.0, "C": 1.0}) == {"A": 0.0, "B": 0.0, "C": 0.0}

    def test_empty_rejected(self):
        with pytest.raises(AnalyticsError):
            country_zscores({})

    def test_matches_two_pass_oracle(self):
        rng = random.Random(8)
        means = {f"C{i:02d}": rng.uniform(0, 2) for i in range(10)}
        got = country_zscores(means)
        expected = two_pass_zscores(means)
        for country in means:
            assert abs(got[country] - expected[country]) < 1e-12

    def test_standardized_moments(self):
        rng = random.Random(9)
        means = {f"C{i:02d}": rng.uniform(0, 2) for i in range(23)}
        zs = list(country_zscores(means).values())
        assert abs(math.fsum(zs) / len(zs)) < 1e-9
        sigma = math.sqrt(math.fsum(z * z for z in zs) / len(zs))
        assert abs(sigma - 1.0) < 1e-9

    def test_translation_invariance(self):
        rng = random.Random(10)
        means = {f"C{i:02d}": rng.uniform(0, 2) for i in range(12)}
        shifted = {c: v + 0.73 for c, v in means.items()}
        base = country_zscores(means)
        moved = country_zscores(shifted)
        for country in means:
            assert abs(base[country] - moved[country]) < 1e-12

    def test_country_scores_aggregation(self):
        scores = country_scores([("AND", 2.0), ("AND", 1.0), ("KEN", 0.5)])
        by_country = {s.country: s for s in scores}
        assert by_country["AND"].mean_sentiment == 1.5
        assert by_country["AND"].n_paragraphs == 2
        assert by_country["KEN"].n_paragraphs == 1


class TestCategoryShares:
    def test_partition_is_exhaustive_and_disjoint(self):
        seen = {}
        for category, sdgs in CATEGORY_SDGS.items():
            for sdg in sdgs:
                assert sdg not in seen, f"SDG {sdg} in two categories"
                seen[sdg] = category
        assert set(seen) == set(range(1, 18))

    def test_environment_pair(self):
        shares = category_shares([("AND", 13), ("AND", 14)])
        assert shares["AND"]["environment"] == 1.0

    def test_economy_block(self):
        shares = category_shares([("AND", s) for s in (8, 9, 10, 12)])
        assert shares["AND"]["economy"] == 1.0

    def test_sdg17_is_social(self):
        assert SDG_CATEGORY[17] == "society"
        shares = category_shares([("AND", 17)])
        assert shares["AND"]["society"] == 1.0

    def test_shares_sum_to_one(self):
        rng = random.Random(12)
        assignments = [(f"C{rng.randint(0, 3)}", rng.randint(1, 17)) for _ in range(300)]
        for fractions in category_shares(assignments).values():
            assert abs(sum(fractions.values()) - 1.0) < 1e-9

    def test_sdg_zero_rejected(self):
        with pytest.raises(AnalyticsError):
            category_shares([("AND", 0)])


class TestMatchRate:
    def test_identity(self):
        gold = {f"i{k}": frozenset({13}) for k in range(4)}
        report = match_rate(gold, gold)
        assert report.match_rate == 1.0
        assert report.precision == 1.0

    def test_eighty_percent(self):
        gold = {f"i{k}": frozenset({k % 17 + 1}) for k in range(10)}
        predictions = {
            item: labels if k < 8 else frozenset({(k % 17 + 2) % 17 + 1})
            for k, (item, labels) in enumerate(sorted(gold.items()))
        }
        report = match_rate(predictions, gold)
        assert report.match_rate == 0.8
        assert report.n_items == 10

    def test_planted_bias(self):
        # gold never contains 17; SDG1 over-predicted five extra times
        gold = {f"i{k}": frozenset({13}) for k in range(5)}
        predictions = {f"i{k}": frozenset({13, 1, 17}) for k in range(5)}
        report = match_rate(predictions, gold)
        assert report.per_sdg[17].bias == 5
        assert report.per_sdg[1].bias == 5
        assert report.per_sdg[13].bias == 0
        # and the mirror image: gold 17 never detected -> negative bias
        gold2 = {"a": frozenset({17}), "b": frozenset({17, 1})}
        predictions2 = {"a": frozenset({1}), "b": frozenset({1})}
        report2 = match_rate(predictions2, gold2)
        assert report2.per_sdg[17].bias == -2
        assert report2.per_sdg[17].recall == 0.0

    def test_disjoint_predictions(self):
        gold = {"a": frozenset({1})}
        assert match_rate({"a": frozenset({2})}, gold).match_rate == 0.0

    def test_two_label_gold(self):
        gold = {"a": frozenset({13, 1})}
        report = match_rate({"a": frozenset({13})}, gold)
        assert report.match_rate == 0.5

    def test_key_mismatch_rejected(self):
        with pytest.raises(AnalyticsError, match="keys differ"):
            match_rate({"a": frozenset({1})}, {"b": frozenset({1})})

    def test_oversized_gold_rejected(self):
        with pytest.raises(AnalyticsError, match="more than two"):
            match_rate({"a": frozenset({1})}, {"a": frozenset({1, 2, 3})})

    def test_empty_gold_set_rejected(self):
        with pytest.raises(AnalyticsError, match="no labels"):
            match_rate({"a": frozenset({1})}, {"a": frozenset()})


def random_interlinkage(rng: random.Random) -> InterlinkageRecord:
    a, b = rng.sample(range(1, 18), 2)
    relationship = rng.choice([SYNERGY, TRADEOFF, NEUTRAL])
    directionality = NONE if relationship == NEUTRAL else rng.choice([INWARD, OUTWARD, BOTH])
    return InterlinkageRecord(a, b, relationship, directionality, "x")


class TestInterlinkageGraph:
    def test_outward_edge(self):
        graph = build_interlinkage_graph([InterlinkageRecord(13, 1, TRADEOFF, OUTWARD, "e")])
        assert graph.edges == {(13, 1, TRADEOFF): 1}

    def test_both_adds_two_edges(self):
        graph = build_interlinkage_graph([InterlinkageRecord(13, 1, SYNERGY, BOTH, "e")])
        assert graph.edges == {(13, 1, SYNERGY): 1, (1, 13, SYNERGY): 1}

    def test_inward_reverses(self):
        graph = build_interlinkage_graph([InterlinkageRecord(1, 13, TRADEOFF, INWARD, "e")])
        assert graph.edges == {(13, 1, TRADEOFF): 1}

    def test_neutral_counts_no_edge(self):
        graph = build_interlinkage_graph([InterlinkageRecord(4, 5, NEUTRAL, NONE, "e")])
        assert graph.edges == {}
        assert graph.neutral_pairs == {(4, 5): 1}

    def test_weight_conservation_oracle(self):
        rng = random.Random(13)
        records = [random_interlinkage(rng) for _ in range(100)]
        graph = build_interlinkage_graph(records)
        # brute-force expectation per record
        expected = sum(
            0 if r.relationship == NEUTRAL else (2 if r.directionality == BOTH else 1)
            for r in records
        )
        assert graph.total_weight() == expected

    def test_edge_list_sorted(self):
        rng = random.Random(14)
        graph = build_interlinkage_graph([random_interlinkage(rng) for _ in range(50)])
        edge_list = graph.edge_list()
        assert edge_list == sorted(edge_list)


class TestGoldCsv:
    def write(self, tmp_path: Path, content: str) -> Path:
        path = tmp_path / "gold.csv"
        path.write_text(content, encoding="utf-8")
        return path

    def test_basic_load(self, tmp_path: Path):
        path = self.write(tmp_path, "item_id,sdg_a,sdg_b,type\nx1,13,1,tradeoff\nx2,7,,synergy\n")
        gold = load_gold_csv(path)
        assert gold == {"x1": frozenset({13, 1}), "x2": frozenset({7})}

    def test_target_coarsening_logged(self, tmp_path: Path):
        path = self.write(tmp_path, "item_id,sdg_a,sdg_b,type\nx1,13.2,1,tradeoff\n")
        warnings: list[str] = []
        gold = load_gold_csv(path, warnings)
        assert gold["x1"] == frozenset({13, 1})
        assert any("coarsened" in w for w in warnings)

    def test_bad_label(self, tmp_path: Path):
        path = self.write(tmp_path, "item_id,sdg_a\nx1,eighteen\n")
        with pytest.raises(AnalyticsError, match="unparseable"):
            load_gold_csv(path)

    def test_out_of_range(self, tmp_path: Path):
        path = self.write(tmp_path, "item_id,sdg_a\nx1,18\n")
        with pytest.raises(AnalyticsError, match="outside 1..17"):
            load_gold_csv(path)

    def test_duplicate_item(self, tmp_path: Path):
        path = self.write(tmp_path, "item_id,sdg_a\nx1,3\nx1,4\n")
        with pytest.raises(AnalyticsError, match="duplicate"):
            load_gold_csv(path)
