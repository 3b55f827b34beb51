"""Pluggable model backends: chat completion, sentiment, embeddings, segmentation.

The chat contract is the least common denominator of commercial APIs: one
POST with {model, prompt, temperature, max_tokens}, one JSON reply with
{text, finish_reason}.  A deterministic keyword-driven mock implements the
same interface so every pipeline stage can run offline, and a seeded noise
wrapper exists to exercise the robustness protocol.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Protocol, Sequence

import requests

from .cleaning import SegmenterError
from .sdgs import sdg_name
from .similarity import SdgDescription, cosine_similarity


class BackendError(Exception):
    """Base class for completion-backend failures."""


class TransientBackendError(BackendError):
    """Retryable: rate limits, 5xx, timeouts."""


class BackendAuthError(BackendError):
    """Credentials rejected; retrying cannot help."""


class BackendRequestError(BackendError):
    """Anything else the backend refuses or mangles."""


class ChatBackend(Protocol):
    backend_id: str
    model_name: str

    def send(self, prompt: str, temperature: float, max_output_tokens: int) -> tuple[str, str]:
        """Returns (raw_text, finish_reason)."""
        ...


class HttpChatBackend:
    """Adapter for any provider exposing the single-endpoint chat contract."""

    def __init__(
        self,
        url: str,
        model_name: str,
        api_key: str | None = None,
        timeout: float = 60.0,
        session: requests.Session | None = None,
    ):
        self.url = url
        self.model_name = model_name
        self.backend_id = f"http:{url}"
        self._api_key = api_key
        self._timeout = timeout
        self._session = session or requests.Session()

    def send(self, prompt: str, temperature: float, max_output_tokens: int) -> tuple[str, str]:
        headers = {}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        try:
            resp = self._session.post(
                self.url,
                json={
                    "model": self.model_name,
                    "prompt": prompt,
                    "temperature": temperature,
                    "max_tokens": max_output_tokens,
                },
                headers=headers,
                timeout=self._timeout,
            )
        except requests.RequestException as exc:
            raise TransientBackendError(f"request failed: {exc}") from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransientBackendError(f"backend returned {resp.status_code}")
        if resp.status_code in (401, 403):
            raise BackendAuthError(f"backend rejected credentials ({resp.status_code})")
        if resp.status_code >= 400:
            raise BackendRequestError(f"backend returned {resp.status_code}: {resp.text[:200]}")
        try:
            payload = resp.json()
            return payload["text"], payload.get("finish_reason", "stop")
        except (ValueError, KeyError, TypeError) as exc:
            raise BackendRequestError(f"malformed backend JSON: {exc}") from exc


# --- Deterministic mock ------------------------------------------------------

@dataclass(frozen=True)
class _InterlinkRule:
    requires: tuple[str, ...]
    relationship: str
    mutual: bool = False
    cause: int | None = None
    effect: int | None = None


class MockRules:
    """Keyword tables driving the offline mock backend (bundled JSON file)."""

    def __init__(self, payload: dict):
        self.sdg_keywords = [(e["phrase"].casefold(), tuple(e["sdgs"])) for e in payload["sdg_keywords"]]
        self.positive = [p.casefold() for p in payload["sentiment_positive"]]
        self.negative = [p.casefold() for p in payload["sentiment_negative"]]
        self.interlink_rules = [
            _InterlinkRule(
                requires=tuple(p.casefold() for p in e["requires"]),
                relationship=e["relationship"],
                mutual=e.get("mutual", False),
                cause=e.get("cause"),
                effect=e.get("effect"),
            )
            for e in payload["interlink_rules"]
        ]

    @classmethod
    def load(cls, path: str | Path | None = None) -> "MockRules":
        if path is None:
            raw = resources.files("sdglens.data").joinpath("mock_rules.json").read_text("utf-8")
        else:
            raw = Path(path).read_text(encoding="utf-8")
        return cls(json.loads(raw))

    def sdg_hits(self, text: str) -> list[tuple[int, int, list[str]]]:
        """(first position, sdg, matched phrases) per detected SDG, by appearance."""
        lowered = text.casefold()
        first_pos: dict[int, int] = {}
        phrases: dict[int, list[str]] = {}
        for phrase, sdgs in self.sdg_keywords:
            pos = lowered.find(phrase)
            if pos < 0:
                continue
            for sdg in sdgs:
                if sdg not in first_pos or pos < first_pos[sdg]:
                    first_pos[sdg] = pos
                phrases.setdefault(sdg, []).append(phrase)
        return sorted((pos, sdg, sorted(set(phrases[sdg]))) for sdg, pos in first_pos.items())

    def sentiment_class(self, text: str) -> int:
        lowered = text.casefold()
        pos = sum(1 for p in self.positive if p in lowered)
        neg = sum(1 for p in self.negative if p in lowered)
        if pos > neg:
            return 2
        if neg > pos:
            return 0
        return 1

    def interlink_verdict(self, text: str, a: int, b: int) -> tuple[str, str]:
        """(relationship, directionality) for a rendered pair, first rule wins."""
        lowered = text.casefold()
        for rule in self.interlink_rules:
            if not all(p in lowered for p in rule.requires):
                continue
            if rule.mutual:
                return rule.relationship, "both"
            if (a, b) == (rule.cause, rule.effect):
                return rule.relationship, "outward"
            if (a, b) == (rule.effect, rule.cause):
                return rule.relationship, "inward"
        return "neutral", "none"


_STAGE1_TEXT_RE = re.compile(r"\*\* Text \*\* :\n\n(.*?)\n\n\*\* Instructions \*\*", re.DOTALL)
_STAGE2_TEXT_RE = re.compile(
    r'\*\* Original Text \*\*: Text to analyze: "(.*?)"\n\n\*\* SDG Description \*\*', re.DOTALL
)
_STAGE2_PAIR_RE = re.compile(r"- SDG Pair: SDG SDG (\d{1,2}) - (\d{1,2})")

_RELATIONSHIP_SURFACE = {"synergy": "Synergy", "tradeoff": "Trade-off", "neutral": "Neutral"}
_DIRECTIONALITY_SURFACE = {"inward": "Inward", "outward": "Outward", "both": "Both", "none": "None"}


class MockChatBackend:
    """Keyword-rule mock for every prompt template; fully deterministic."""

    backend_id = "mock"
    model_name = "mock-rules"

    def __init__(self, rules: MockRules | None = None):
        self.rules = rules or MockRules.load()

    def send(self, prompt: str, temperature: float, max_output_tokens: int) -> tuple[str, str]:
        if prompt.startswith("Assign the following text to the top three SDGs"):
            return self._variant(prompt), "stop"
        if prompt.startswith("Assign the following text to all relevant SDGs"):
            return self._sdg_set(prompt), "stop"
        if prompt.startswith("Use the following rules to interpret a paragraph"):
            return self._sentiment(prompt), "stop"
        if prompt.startswith("First Prompt: Identifying SDGs"):
            return self._interlink_stage1(prompt), "stop"
        if prompt.startswith("Second Prompt: Evaluating relationships."):
            return self._interlink_stage2(prompt), "stop"
        raise BackendRequestError("mock backend does not recognize this prompt")

    @staticmethod
    def _bound_text(prompt: str) -> str:
        # Variant / two-step templates put the paragraph after the first blank line.
        parts = prompt.split("\n\n", 1)
        return parts[1] if len(parts) == 2 else ""

    def _variant(self, prompt: str) -> str:
        hits = self.rules.sdg_hits(self._bound_text(prompt))
        if not hits:
            return "0"
        # the three variant wordings rank differently, so prompts with more
        # than three detected SDGs can disagree across variants (sets of at
        # most three stay identical run to run)
        instruction = prompt.split("\n\n", 1)[0]
        if "per relevance" in instruction:
            ranked = sorted(hits, key=lambda h: h[1])
        elif "prominence" in instruction:
            ranked = sorted(hits, key=lambda h: (-len(h[2]), h[1]))
        else:  # dominance: order of first appearance
            ranked = hits
        return ", ".join(str(sdg) for _, sdg, _ in ranked[:3])

    def _sdg_set(self, prompt: str) -> str:
        hits = self.rules.sdg_hits(self._bound_text(prompt))
        if not hits:
            return "0"
        return ", ".join(str(sdg) for sdg in sorted(h[1] for h in hits))

    def _sentiment(self, prompt: str) -> str:
        return str(self.rules.sentiment_class(self._bound_text(prompt)))

    def _interlink_stage1(self, prompt: str) -> str:
        m = _STAGE1_TEXT_RE.search(prompt)
        if not m:
            raise BackendRequestError("mock: stage-1 prompt without a text section")
        hits = self.rules.sdg_hits(m.group(1))
        if not hits:
            return "Main SDG (0): Not relevant\nReason main SDG (0): no SDG keywords matched"
        main = hits[0][1]
        lines = [
            f"Main SDG ({main}): {sdg_name(main)}",
            f"Reason main SDG ({main}): keyword evidence: {', '.join(hits[0][2])}",
        ]
        for _, sdg, phrases in sorted(hits[1:], key=lambda h: h[1]):
            lines.append(f"Secondary SDG ({sdg}): {sdg_name(sdg)}")
            lines.append(f"Reason secondary SDG ({sdg}): keyword evidence: {', '.join(phrases)}")
        return "\n".join(lines)

    def _interlink_stage2(self, prompt: str) -> str:
        text_match = _STAGE2_TEXT_RE.search(prompt)
        pair_match = _STAGE2_PAIR_RE.search(prompt)
        if not text_match or not pair_match:
            raise BackendRequestError("mock: stage-2 prompt missing text or pair")
        a, b = int(pair_match.group(1)), int(pair_match.group(2))
        relationship, directionality = self.rules.interlink_verdict(text_match.group(1), a, b)
        return "\n".join(
            [
                f"- SDG Pair: SDG {a} - SDG {b}",
                f"- Relationship: {_RELATIONSHIP_SURFACE[relationship]}",
                f"- Directionality: {_DIRECTIONALITY_SURFACE[directionality]}",
                "- Explanation: keyword-rule verdict on the quoted text.",
            ]
        )


class NoisyChatBackend:
    """Wraps a backend and, with fixed probability, replaces the response with
    a random single-SDG answer.  Seeded, so runs are reproducible; meant only
    for robustness experiments (never combine with a shared cache)."""

    def __init__(self, inner: ChatBackend, flip_probability: float = 0.1, seed: int = 0):
        self.inner = inner
        self.flip_probability = flip_probability
        self.backend_id = f"noise:{inner.backend_id}:s{seed}"
        self.model_name = inner.model_name
        self._rng = random.Random(seed)

    def send(self, prompt: str, temperature: float, max_output_tokens: int) -> tuple[str, str]:
        text, reason = self.inner.send(prompt, temperature, max_output_tokens)
        if self._rng.random() < self.flip_probability:
            return str(self._rng.randint(1, 17)), reason
        return text, reason


# --- Sentiment classifier backends ------------------------------------------

class SentimentBackend(Protocol):
    def classify(self, text: str) -> tuple[float, float, float]:
        """(p0, p1, p2) over negative / neutral / positive climate stance."""
        ...


class MockSentimentBackend:
    """Lexicon stand-in for the remote classifier; deterministic distributions."""

    def __init__(self, rules: MockRules | None = None):
        self.rules = rules or MockRules.load()

    def classify(self, text: str) -> tuple[float, float, float]:
        label = self.rules.sentiment_class(text)
        if label == 2:
            return (0.1, 0.2, 0.7)
        if label == 0:
            return (0.7, 0.2, 0.1)
        return (0.15, 0.7, 0.15)


class RemoteSentimentBackend:
    def __init__(self, base_url: str, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self._timeout = timeout

    def classify(self, text: str) -> tuple[float, float, float]:
        payload = _post_json(f"{self.base_url}/classify-sentiment", {"text": text}, self._timeout)
        try:
            return (float(payload["p0"]), float(payload["p1"]), float(payload["p2"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendRequestError(f"malformed sentiment response: {exc}") from exc


# --- Embedding-based similarity backend --------------------------------------

class RemoteEmbeddingBackend:
    """Similarity scorer backed by the model service's /embed endpoint.

    Description embeddings are fetched once per instance.  Scores are cosine
    values clamped at zero so the [0, 1] contract holds for any embedding
    space.
    """

    def __init__(self, base_url: str, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self._timeout = timeout
        self._description_vectors: list[dict[str, float]] | None = None

    def _embed(self, text: str) -> dict[str, float]:
        payload = _post_json(f"{self.base_url}/embed", {"text": text}, self._timeout)
        try:
            vector = [float(x) for x in payload["vector"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendRequestError(f"malformed embedding response: {exc}") from exc
        return {str(i): x for i, x in enumerate(vector) if x != 0.0}

    def score(self, paragraph: str, descriptions: Sequence[SdgDescription]) -> list[float]:
        if self._description_vectors is None:
            self._description_vectors = [self._embed(d.description) for d in descriptions]
        pvec = self._embed(paragraph)
        return [max(0.0, cosine_similarity(pvec, dvec)) for dvec in self._description_vectors]


# --- Remote sentence segmenter ------------------------------------------------

class RemoteSegmenter:
    """Segmenter backed by the model service's /segment endpoint."""

    def __init__(self, base_url: str, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self._timeout = timeout

    def merge_decisions(self, texts: Sequence[str]) -> list[bool]:
        try:
            payload = _post_json(
                f"{self.base_url}/segment", {"blocks": list(texts)}, self._timeout
            )
            return [bool(x) for x in payload["merge"]]
        except (BackendError, KeyError, TypeError) as exc:
            raise SegmenterError(f"segment service failed: {exc}") from exc


def _post_json(url: str, body: dict, timeout: float) -> dict:
    try:
        resp = requests.post(url, json=body, timeout=timeout)
    except requests.RequestException as exc:
        raise TransientBackendError(f"request failed: {exc}") from exc
    if resp.status_code >= 400:
        raise BackendRequestError(f"{url} returned {resp.status_code}: {resp.text[:200]}")
    try:
        payload = resp.json()
    except ValueError as exc:
        raise BackendRequestError(f"{url} returned non-JSON body") from exc
    if not isinstance(payload, dict):
        raise BackendRequestError(f"{url} returned non-object JSON")
    return payload
