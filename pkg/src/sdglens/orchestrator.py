"""Completion dispatch (retries, rate cap, disk cache) and the prompt workflows.

Wraps any ChatBackend with: content-addressed response caching, exponential
backoff on transient failures, a global in-flight cap, and a request counter
so callers can prove budget and cache behaviour.  On top of that sit the
two-step classification, the two-stage interlinkage extraction and the
robustness protocol.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
import time
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Callable, Sequence

from . import parsing
from .backends import BackendError, ChatBackend, TransientBackendError
from .parsing import InterlinkageRecord, ParseError, ParseWarning
from .prompts import PromptTemplate, get_template, render_prompt
from .similarity import SdgDescription


@dataclass(frozen=True)
class CompletionRequest:
    backend_id: str
    model_name: str
    prompt_text: str
    temperature: float
    max_output_tokens: int


@dataclass(frozen=True)
class CompletionResponse:
    raw_text: str
    finish_reason: str
    latency_ms: float
    from_cache: bool


@dataclass
class ClientStats:
    sends: int = 0
    cache_hits: int = 0
    retries: int = 0


class StageParseError(Exception):
    """Model output defeated both strict and lenient parsing."""

    def __init__(self, message: str, raw_text: str):
        super().__init__(message)
        self.raw_text = raw_text


def cache_key(request: CompletionRequest) -> str:
    material = json.dumps(
        [request.backend_id, request.model_name, request.prompt_text, request.temperature],
        ensure_ascii=False,
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


class CompletionClient:
    """One backend plus the operational policy around it.

    With a cache directory set, a repeated request never reaches the network
    and reproduces the stored response byte for byte.
    """

    def __init__(
        self,
        backend: ChatBackend,
        cache_dir: str | Path | None = None,
        temperature: float = 0.0,
        max_output_tokens: int = 1024,
        max_attempts: int = 5,
        max_in_flight: int = 4,
        min_interval: float = 0.0,
        sleeper: Callable[[float], None] = time.sleep,
        backoff_base: float = 0.5,
        jitter_rng: random.Random | None = None,
    ):
        self.backend = backend
        self.cache_dir = Path(cache_dir) if cache_dir is not None else None
        self.temperature = temperature
        self.max_output_tokens = max_output_tokens
        self.max_attempts = max_attempts
        self.stats = ClientStats()
        self._sleep = sleeper
        self._backoff_base = backoff_base
        self._jitter = jitter_rng or random.Random()
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._min_interval = min_interval
        self._last_send = 0.0
        self._send_lock = threading.Lock()

    def request_for(self, prompt: str) -> CompletionRequest:
        return CompletionRequest(
            backend_id=self.backend.backend_id,
            model_name=self.backend.model_name,
            prompt_text=prompt,
            temperature=self.temperature,
            max_output_tokens=self.max_output_tokens,
        )

    def complete(self, prompt: str) -> CompletionResponse:
        request = self.request_for(prompt)
        key = cache_key(request)
        cached = self._cache_read(key)
        if cached is not None:
            self.stats.cache_hits += 1
            return cached

        last_error: BackendError | None = None
        for attempt in range(self.max_attempts):
            try:
                with self._slots:
                    self._respect_rate_limit()
                    started = time.monotonic()
                    self.stats.sends += 1
                    text, finish_reason = self.backend.send(
                        prompt, request.temperature, request.max_output_tokens
                    )
                    latency_ms = (time.monotonic() - started) * 1000.0
                response = CompletionResponse(text, finish_reason, latency_ms, from_cache=False)
                self._cache_write(key, request, response)
                return response
            except TransientBackendError as exc:
                last_error = exc
                if attempt + 1 >= self.max_attempts:
                    break
                self.stats.retries += 1
                delay = min(self._backoff_base * (2**attempt), 30.0)
                self._sleep(delay + self._jitter.uniform(0.0, delay * 0.1))
        raise BackendError(
            f"exhausted {self.max_attempts} attempts against {self.backend.backend_id}: {last_error}"
        )

    def _respect_rate_limit(self) -> None:
        if self._min_interval <= 0:
            return
        with self._send_lock:
            now = time.monotonic()
            wait = self._min_interval - (now - self._last_send)
            if wait > 0:
                self._sleep(wait)
            self._last_send = time.monotonic()

    def _cache_path(self, key: str) -> Path | None:
        if self.cache_dir is None:
            return None
        return self.cache_dir / f"{key}.json"

    def _cache_read(self, key: str) -> CompletionResponse | None:
        path = self._cache_path(key)
        if path is None or not path.exists():
            return None
        try:
            stored = json.loads(path.read_text(encoding="utf-8"))
            return CompletionResponse(
                raw_text=stored["raw_text"],
                finish_reason=stored["finish_reason"],
                latency_ms=stored["latency_ms"],
                from_cache=True,
            )
        except (OSError, ValueError, KeyError):
            return None  # unreadable entry: treat as a miss, it will be rewritten

    def _cache_write(self, key: str, request: CompletionRequest, response: CompletionResponse) -> None:
        path = self._cache_path(key)
        if path is None:
            return
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        payload = {
            "backend_id": request.backend_id,
            "model_name": request.model_name,
            "temperature": request.temperature,
            "prompt_text": request.prompt_text,
            "raw_text": response.raw_text,
            "finish_reason": response.finish_reason,
            "latency_ms": response.latency_ms,
        }
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")
        os.replace(tmp, path)


def _parse_with_fallback(parse, raw_text: str, warnings: list[ParseWarning] | None, label: str):
    try:
        return parse(raw_text, parsing.STRICT, warnings)
    except ParseError:
        pass
    try:
        return parse(raw_text, parsing.LENIENT, warnings)
    except ParseError as exc:
        raise StageParseError(f"{label}: {exc}", raw_text) from exc


def describe_sdgs(descriptions: Sequence[SdgDescription]) -> str:
    return "\n".join(f"{d.sdg}) {d.name}: {d.description}" for d in descriptions)


def llm_sdg_set(
    text: str,
    client: CompletionClient,
    corrected: bool = False,
    warnings: list[ParseWarning] | None = None,
) -> tuple[int, ...]:
    """Two-step stage 1: the paragraph's SDG set.

    An SDG 0 anywhere in the parsed set collapses the set to exactly {0}.
    """
    if not text.strip():
        raise ValueError("paragraph must be non-empty")
    prompt = render_prompt(get_template("twostep_sdg", corrected), {"text": text})
    raw = client.complete(prompt).raw_text
    sdgs = _parse_with_fallback(parsing.parse_sdg_set, raw, warnings, "two-step stage 1")
    return (0,) if 0 in sdgs else tuple(sorted(set(sdgs)))


def llm_sentiment_label(text: str, client: CompletionClient, corrected: bool = False) -> int:
    """Two-step stage 2: the paragraph's single 0/1/2 sentiment class."""
    if not text.strip():
        raise ValueError("paragraph must be non-empty")
    prompt = render_prompt(get_template("twostep_sentiment", corrected), {"text": text})
    raw = client.complete(prompt).raw_text
    try:
        return parsing.parse_sentiment_label(raw)
    except ParseError as exc:
        raise StageParseError(f"two-step stage 2: {exc}", raw) from exc


def two_step_classify(
    text: str,
    client: CompletionClient,
    corrected: bool = False,
    warnings: list[ParseWarning] | None = None,
) -> tuple[tuple[int, ...], int]:
    """Stage 1 tags the paragraph with its SDG set, stage 2 with a 0/1/2 class."""
    sdg_set = llm_sdg_set(text, client, corrected, warnings)
    label = llm_sentiment_label(text, client, corrected)
    return sdg_set, label


@dataclass(frozen=True)
class InterlinkResult:
    main: int
    main_reason: str
    secondaries: tuple[tuple[int, str], ...]
    records: tuple[InterlinkageRecord, ...]
    partial: bool = False
    pair_errors: tuple[str, ...] = ()


def interlink_extract(
    text: str,
    client: CompletionClient,
    descriptions: Sequence[SdgDescription],
    corrected: bool = False,
    warnings: list[ParseWarning] | None = None,
) -> InterlinkResult:
    """Run the two-stage interlinkage prompt: identify SDGs, then evaluate
    one (main, secondary) pair per stage-2 call.

    Stage-1 failures abort; stage-2 failures only mark the result partial and
    keep whatever pairs parsed.
    """
    if not text.strip():
        raise ValueError("text must be non-empty")
    context = describe_sdgs(descriptions)
    stage1_prompt = render_prompt(
        get_template("interlink_stage1", corrected),
        {"text": text, "Read_description": context},
    )
    raw1 = client.complete(stage1_prompt).raw_text
    assignment = _parse_with_fallback(
        parsing.parse_sdg_assignment, raw1, warnings, "interlinkage stage 1"
    )
    if assignment.main == 0 or not assignment.secondaries:
        return InterlinkResult(assignment.main, assignment.main_reason, assignment.secondaries, ())

    stage2_template = get_template("interlink_stage2", corrected)
    records: list[InterlinkageRecord] = []
    errors: list[str] = []
    for secondary, _reason in assignment.secondaries:
        prompt = render_prompt(
            stage2_template,
            {
                "text": text,
                "Read_description": context,
                "main_sdg": str(assignment.main),
                "secondary_sdg": str(secondary),
            },
        )
        raw2 = client.complete(prompt).raw_text
        try:
            pair_records = _parse_with_fallback(
                parsing.parse_interlinkage, raw2, warnings, "interlinkage stage 2"
            )
            if not pair_records:
                raise StageParseError("interlinkage stage 2: no record group found", raw2)
            records.extend(pair_records)
        except StageParseError as exc:
            errors.append(f"pair ({assignment.main}, {secondary}): {exc}")
    return InterlinkResult(
        main=assignment.main,
        main_reason=assignment.main_reason,
        secondaries=assignment.secondaries,
        records=tuple(records),
        partial=bool(errors),
        pair_errors=tuple(errors),
    )


# --- Robustness protocol ------------------------------------------------------

@dataclass
class VariantAgreement:
    jaccard_by_paragraph: dict[str, float]
    mean_jaccard: float
    exact_match_fraction: float


@dataclass
class AgreementReport:
    runs: int
    per_variant: dict[str, VariantAgreement]
    cross_variant: dict[str, dict[str, float]]
    order_sensitivity: bool
    total_requests: int

    def as_dict(self) -> dict:
        return {
            "runs": self.runs,
            "per_variant": {
                vid: {
                    "mean_jaccard": v.mean_jaccard,
                    "exact_match_fraction": v.exact_match_fraction,
                    "jaccard_by_paragraph": v.jaccard_by_paragraph,
                }
                for vid, v in self.per_variant.items()
            },
            "cross_variant": self.cross_variant,
            "order_sensitivity": self.order_sensitivity,
            "total_requests": self.total_requests,
        }


def _jaccard(a: frozenset[int], b: frozenset[int]) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def run_robustness_protocol(
    variants: Sequence[PromptTemplate],
    paragraphs: Sequence[tuple[str, str]],
    client: CompletionClient,
    runs: int = 3,
    shuffle_seed: int = 0,
) -> AgreementReport:
    """Repeat each prompt variant `runs` times over seeded shuffles of the
    paragraph order and measure classification agreement.

    Within-variant agreement uses per-paragraph Jaccard and exact-set match,
    averaged over run pairs; the cross-variant matrix compares first-run label
    sets between variants.  Use a cache-less client: the point is fresh calls.
    """
    if not variants:
        raise ValueError("need at least one prompt variant")
    if len(paragraphs) < 2:
        raise ValueError("need at least two paragraphs")
    ids = [pid for pid, _ in paragraphs]
    sends_before = client.stats.sends

    labels: dict[str, list[dict[str, frozenset[int]]]] = {}
    for variant in variants:
        run_sets: list[dict[str, frozenset[int]]] = []
        for run_idx in range(runs):
            order = list(paragraphs)
            random.Random(f"{shuffle_seed}:{variant.template_id}:{run_idx}").shuffle(order)
            assigned: dict[str, frozenset[int]] = {}
            for para_id, text in order:
                raw = client.complete(render_prompt(variant, {"text": text})).raw_text
                sdgs = _parse_with_fallback(parsing.parse_sdg_set, raw, None, "robustness")
                assigned[para_id] = frozenset({0}) if 0 in sdgs else frozenset(sdgs)
            run_sets.append(assigned)
        labels[variant.template_id] = run_sets

    per_variant: dict[str, VariantAgreement] = {}
    order_sensitivity = False
    for vid, run_sets in labels.items():
        pairs = list(combinations(range(runs), 2))
        jaccard_by_paragraph = {}
        for pid in ids:
            values = [_jaccard(run_sets[r][pid], run_sets[s][pid]) for r, s in pairs]
            jaccard_by_paragraph[pid] = sum(values) / len(values) if values else 1.0
        exact = []
        for r, s in pairs:
            matches = sum(1 for pid in ids if run_sets[r][pid] == run_sets[s][pid])
            exact.append(matches / len(ids))
        exact_fraction = sum(exact) / len(exact) if exact else 1.0
        if any(v < 1.0 for v in jaccard_by_paragraph.values()):
            order_sensitivity = True
        per_variant[vid] = VariantAgreement(
            jaccard_by_paragraph=jaccard_by_paragraph,
            mean_jaccard=sum(jaccard_by_paragraph.values()) / len(ids),
            exact_match_fraction=exact_fraction,
        )

    cross: dict[str, dict[str, float]] = {}
    for v1 in labels:
        cross[v1] = {}
        for v2 in labels:
            matches = sum(1 for pid in ids if labels[v1][0][pid] == labels[v2][0][pid])
            cross[v1][v2] = matches / len(ids)

    return AgreementReport(
        runs=runs,
        per_variant=per_variant,
        cross_variant=cross,
        order_sensitivity=order_sensitivity,
        total_requests=client.stats.sends - sends_before,
    )
