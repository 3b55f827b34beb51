from __future__ import annotations

import math
import random

import pytest

from sdglens.similarity import (
    SimilarityError,
    TfidfBackend,
    TfidfModel,
    assign_sdg,
    cosine_similarity,
    load_descriptions,
    pick_best,
    tokenize,
)


# --- independent oracle: naive double-loop tf-idf ----------------------------

def brute_force_tfidf(corpus: list[str]) -> list[dict[str, float]]:
    """Recompute every weight the slow way: tf by counting, df by scanning."""
    token_lists = [tokenize(doc) for doc in corpus]
    vectors = []
    for tokens in token_lists:
        weights: dict[str, float] = {}
        for term in tokens:
            tf = sum(1 for t in tokens if t == term)
            df = sum(1 for other in token_lists if term in other)
            weights[term] = tf * math.log(len(corpus) / df)
        vectors.append(weights)
    return vectors


def random_corpus(rng: random.Random, n_docs: int) -> list[str]:
    vocab = [f"term{i}" for i in range(40)]
    return [
        " ".join(rng.choice(vocab) for _ in range(rng.randint(3, 25))) for _ in range(n_docs)
    ]


class TestTokenize:
    def test_punctuation_stripped(self):
        assert tokenize("Climate Action!") == ["climate", "action"]

    def test_alphanumeric_kept_together(self):
        assert tokenize("CO2 emissions") == ["co2", "emissions"]

    def test_empty(self):
        assert tokenize("") == []

    def test_digits_are_tokens(self):
        assert tokenize("by 2030, 40% less") == ["by", "2030", "40", "less"]

    def test_underscore_is_punctuation(self):
        assert tokenize("net_zero") == ["net", "zero"]


class TestTfidfModel:
    def test_term_in_all_docs_has_zero_weight(self):
        model = TfidfModel(["shared one", "shared two", "shared three"])
        for i in range(3):
            assert model.doc_vector(i)["shared"] == 0.0

    def test_two_doc_idf(self):
        model = TfidfModel(["a b", "a c"])
        assert model.doc_vector(0)["b"] == pytest.approx(math.log(2), abs=1e-12)
        assert model.doc_vector(0)["a"] == 0.0

    def test_empty_corpus_rejected(self):
        with pytest.raises(SimilarityError):
            TfidfModel([])

    def test_vector_ignores_unknown_terms(self):
        model = TfidfModel(["a b", "a c"])
        assert model.vector("b z z") == {"b": math.log(2)}

    def test_matches_brute_force_oracle(self):
        corpus = random_corpus(random.Random(7), 20)
        model = TfidfModel(corpus)
        expected = brute_force_tfidf(corpus)
        for i in range(20):
            got = model.doc_vector(i)
            assert got.keys() == expected[i].keys()
            for term, weight in expected[i].items():
                assert abs(got[term] - weight) < 1e-9


class TestCosineSimilarity:
    def test_identical_vectors(self):
        v = {"a": 1.3, "b": 0.4}
        assert cosine_similarity(v, dict(v)) == 1.0

    def test_disjoint_supports(self):
        assert cosine_similarity({"a": 1.0}, {"b": 1.0}) == 0.0

    def test_analytic_half(self):
        u = {"x": 1.0, "y": 1.0}
        v = {"x": 1.0, "z": 1.0}
        assert cosine_similarity(u, v) == pytest.approx(0.5, abs=1e-12)

    def test_zero_norm(self):
        assert cosine_similarity({}, {"a": 1.0}) == 0.0
        assert cosine_similarity({"a": 0.0}, {"a": 0.0}) == 0.0

    def test_bounds_on_random_vectors(self):
        rng = random.Random(3)
        for _ in range(500):
            u = {f"t{i}": rng.random() for i in range(rng.randint(1, 30))}
            v = {f"t{i}": rng.random() for i in range(rng.randint(1, 30))}
            s = cosine_similarity(u, v)
            assert 0.0 <= s <= 1.0
            assert cosine_similarity(u, dict(u)) == 1.0


class TestDescriptions:
    def test_seventeen_entries_in_order(self):
        descriptions = load_descriptions()
        assert [d.sdg for d in descriptions] == list(range(1, 18))
        assert descriptions[12].name == "Climate action"

    def test_canonical_names_enforced(self, tmp_path):
        import json as _json

        entries = [
            {"sdg": i, "name": f"Goal {i}", "description": "text"} for i in range(1, 18)
        ]
        path = tmp_path / "descriptions.json"
        path.write_text(_json.dumps(entries), encoding="utf-8")
        with pytest.raises(SimilarityError, match="must be 'No poverty'"):
            load_descriptions(path)


class TestAssignSdg:
    def test_paragraph_equal_to_description(self):
        descriptions = load_descriptions()
        a = assign_sdg("p1", descriptions[12].description, descriptions)
        assert a.best == 13
        assert a.best_score == 1.0
        assert a.best_score == max(a.scores)

    def test_no_shared_vocabulary_maps_to_zero(self):
        descriptions = load_descriptions()
        a = assign_sdg("p1", "zzz qqq xxx", descriptions)
        assert a.best == 0
        assert a.best_score == 0.0

    def test_tie_breaks_to_lower_sdg(self):
        class TiedBackend:
            def score(self, paragraph, descriptions):
                scores = [0.0] * 17
                scores[6] = 0.7  # SDG 7
                scores[12] = 0.7  # SDG 13
                return scores

        a = assign_sdg("p1", "anything", load_descriptions(), TiedBackend())
        assert a.best == 7

    def test_scores_in_unit_interval(self):
        descriptions = load_descriptions()
        a = assign_sdg("p", "renewable energy for clean water and health", descriptions)
        assert all(0.0 <= s <= 1.0 for s in a.scores)
        assert len(a.scores) == 17

    def test_backend_failure_carries_para_id(self):
        class Exploding:
            def score(self, paragraph, descriptions):
                raise RuntimeError("socket closed")

        with pytest.raises(SimilarityError, match="para-9"):
            assign_sdg("para-9", "text", load_descriptions(), Exploding())


class TestInvariances:
    def paragraphs(self, n: int) -> list[str]:
        rng = random.Random(11)
        topics = [
            "poverty reduction and social protection",
            "renewable energy with solar and wind power",
            "climate change adaptation and mitigation policy",
            "clean water and sanitation for communities",
            "sustainable cities and urban transport",
            "ocean and marine ecosystems conservation",
        ]
        return [
            f"{rng.choice(topics)} measure {i} with {rng.randint(2, 60)} percent targets"
            for i in range(n)
        ]

    def test_argmax_invariant_under_positive_scaling(self):
        descriptions = load_descriptions()
        texts = [d.description for d in descriptions]
        for lam in (0.25, 3.0, 117.5):
            for paragraph in self.paragraphs(40):
                model = TfidfModel(texts + [paragraph])
                pvec = model.doc_vector(17)
                base = [cosine_similarity(pvec, model.doc_vector(i)) for i in range(17)]
                scaled = [
                    cosine_similarity(
                        pvec, {t: lam * w for t, w in model.doc_vector(i).items()}
                    )
                    for i in range(17)
                ]
                assert pick_best(base)[0] == pick_best(scaled)[0]

    def test_permutation_invariance(self):
        descriptions = load_descriptions()
        rng = random.Random(5)
        shuffled = descriptions[:]
        rng.shuffle(shuffled)
        backend = TfidfBackend()
        for paragraph in self.paragraphs(10):
            base = backend.score(paragraph, descriptions)
            permuted = backend.score(paragraph, shuffled)
            for j, d in enumerate(shuffled):
                assert permuted[j] == pytest.approx(base[d.sdg - 1], abs=1e-12)

    def test_determinism(self):
        descriptions = load_descriptions()
        for paragraph in self.paragraphs(10):
            a1 = assign_sdg("p", paragraph, descriptions)
            a2 = assign_sdg("p", paragraph, descriptions)
            assert a1 == a2
