"""Corpus acquisition: manifest loading and extractor-output normalization.

A corpus is described by a manifest (JSON array of document records).  Each
record points at the line-delimited JSON output of an external PDF extractor;
this module validates the records and turns extractor lines into TextBlocks
with derived statistics.  PDF parsing itself is out of scope.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import requests

DOC_TYPES = ("ndc", "peer_reviewed", "national_report", "civil_society", "news")


class IngestError(Exception):
    """Base class for manifest / block-file problems."""


class ManifestError(IngestError):
    pass


class BlockFileError(IngestError):
    pass


class EmptyDocumentError(BlockFileError):
    """The block file exists but contains no blocks."""


@dataclass(frozen=True)
class DocumentRecord:
    doc_id: str
    country: str
    doc_type: str
    language: str
    source_uri: str
    title: str
    submission_round: int | None = None


@dataclass(frozen=True)
class TextBlock:
    block_index: int
    text: str
    word_count: int
    numeric_char_ratio: float
    page: int | None = None


def word_count(text: str) -> int:
    return len(text.split())


def numeric_char_ratio(text: str) -> float:
    """Digit characters over non-whitespace characters; 0 for an empty denominator."""
    non_ws = [c for c in text if not c.isspace()]
    if not non_ws:
        return 0.0
    digits = sum(1 for c in non_ws if c.isdigit())
    return digits / len(non_ws)


def make_block(index: int, text: str, page: int | None = None) -> TextBlock:
    return TextBlock(
        block_index=index,
        text=text,
        word_count=word_count(text),
        numeric_char_ratio=numeric_char_ratio(text),
        page=page,
    )


def _validate_record(entry: object, index: int) -> DocumentRecord:
    if not isinstance(entry, dict):
        raise ManifestError(f"manifest entry {index}: expected object, got {type(entry).__name__}")

    def req(field: str) -> str:
        value = entry.get(field)
        if not isinstance(value, str) or not value:
            raise ManifestError(f"manifest entry {index}: missing or invalid field '{field}'")
        return value

    doc_id = req("doc_id")
    country = req("country")
    if country != "N/A" and not (len(country) == 3 and country.isalpha() and country.isupper()):
        raise ManifestError(
            f"manifest entry {index}: field 'country' must be ISO-3166 alpha-3 or \"N/A\""
        )
    doc_type = req("doc_type")
    if doc_type not in DOC_TYPES:
        raise ManifestError(
            f"manifest entry {index}: field 'doc_type' must be one of {DOC_TYPES}"
        )
    round_ = entry.get("submission_round")
    if round_ is not None:
        if not isinstance(round_, int) or isinstance(round_, bool) or round_ < 1:
            raise ManifestError(
                f"manifest entry {index}: field 'submission_round' must be an integer >= 1"
            )
    return DocumentRecord(
        doc_id=doc_id,
        country=country,
        doc_type=doc_type,
        language=req("language"),
        source_uri=req("source_uri"),
        title=req("title"),
        submission_round=round_,
    )


def parse_manifest(payload: object) -> list[DocumentRecord]:
    """Validate a decoded manifest; all-or-nothing (raises on first bad entry)."""
    if not isinstance(payload, list):
        raise ManifestError("manifest must be a JSON array of document records")
    records = [_validate_record(entry, i) for i, entry in enumerate(payload)]
    seen: set[str] = set()
    for rec in records:
        if rec.doc_id in seen:
            raise ManifestError(f"duplicate doc_id '{rec.doc_id}' in manifest")
        seen.add(rec.doc_id)
    return records


def fetch_manifest(source: str | Path, timeout: float = 10.0, retries: int = 3) -> list[DocumentRecord]:
    """Load a manifest from a local path or over HTTP.

    HTTP fetches honour `timeout` and retry transient failures at most
    `retries` times beyond the initial attempt.  Validation is atomic: any
    bad entry raises and no records are returned.
    """
    src = str(source)
    if src.startswith(("http://", "https://")):
        last_error: Exception | None = None
        for _ in range(1 + max(0, retries)):
            try:
                resp = requests.get(src, timeout=timeout)
                resp.raise_for_status()
                payload = resp.json()
                break
            except (requests.RequestException, ValueError) as exc:
                last_error = exc
        else:
            raise ManifestError(f"unreachable manifest source {src}: {last_error}")
    else:
        path = Path(src)
        if not path.exists():
            raise ManifestError(f"manifest not found: {path}")
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ManifestError(f"malformed manifest {path}: {exc}") from exc
    return parse_manifest(payload)


def load_blocks(doc: DocumentRecord, extractor_output: str | Path) -> list[TextBlock]:
    """Read one document's extractor output (JSON Lines) into TextBlocks.

    Lines must carry contiguous 0-based indices.  An existing but blockless
    file signals an empty document, which callers may want to treat
    differently from a malformed one.
    """
    path = Path(extractor_output)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise BlockFileError(f"{doc.doc_id}: cannot read block file {path}: {exc}") from exc
    try:
        content = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise BlockFileError(f"{doc.doc_id}: block file {path} is not valid UTF-8") from exc

    blocks: list[TextBlock] = []
    for lineno, line in enumerate(content.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BlockFileError(f"{doc.doc_id}: line {lineno}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict) or "index" not in obj or "text" not in obj:
            raise BlockFileError(f"{doc.doc_id}: line {lineno}: block needs 'index' and 'text'")
        index = obj["index"]
        expected = len(blocks)
        if index != expected:
            raise BlockFileError(f"{doc.doc_id}: non-contiguous block index {index} (expected {expected})")
        text = obj["text"]
        if not isinstance(text, str):
            raise BlockFileError(f"{doc.doc_id}: line {lineno}: 'text' must be a string")
        page = obj.get("page")
        if page is not None and (not isinstance(page, int) or page < 1):
            raise BlockFileError(f"{doc.doc_id}: line {lineno}: 'page' must be an integer >= 1")
        blocks.append(make_block(index, text, page))
    if not blocks:
        raise EmptyDocumentError(f"{doc.doc_id}: empty document ({path})")
    return blocks


def blocks_to_jsonl(blocks: Iterable[TextBlock]) -> str:
    lines = []
    for b in blocks:
        obj: dict = {"index": b.block_index}
        if b.page is not None:
            obj["page"] = b.page
        obj["text"] = b.text
        obj["word_count"] = b.word_count
        obj["numeric_char_ratio"] = b.numeric_char_ratio
        lines.append(json.dumps(obj, ensure_ascii=False))
    return "".join(line + "\n" for line in lines)
