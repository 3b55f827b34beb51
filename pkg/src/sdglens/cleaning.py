"""Block filtering and paragraph merging for extracted policy documents.

The pipeline drops caption blocks, too-short blocks, digit-dominated blocks
and frequently repeated short sentences, then merges the survivors into
paragraphs wherever a block looks like an unfinished sentence continued by
the next one.  Merging is delegated to a pluggable segmenter backend; the
default is a punctuation/case heuristic that needs no model.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Protocol, Sequence

from .ingest import TextBlock, word_count as _word_count

# Caption starters observed across English/French/Spanish reports; callers can
# extend the list (e.g. with "gráfico") through CleaningConfig.
DEFAULT_CAPTION_KEYWORDS = (
    "figure",
    "figura",
    "fig",
    "table",
    "tableau",
    "tabla",
    "chapter",
    "chapitre",
    "capítulo",
    "page",
    "pagina",
    "página",
)

MIN_TOKENS = 2
MAX_NUMERIC_RATIO = 0.5  # strictly above drops
REPEAT_WORD_LIMIT = 25  # strictly below counts as "short"
REPEAT_COUNT_LIMIT = 5  # strictly above drops

TERMINAL_PUNCTUATION = (".", "!", "?", ":", ";")


@dataclass(frozen=True)
class Paragraph:
    para_id: str
    doc_id: str
    text: str
    word_count: int
    source_blocks: tuple[int, ...]


@dataclass
class CleaningReport:
    blocks_in: int = 0
    dropped_caption: int = 0
    dropped_min_tokens: int = 0
    dropped_numeric: int = 0
    dropped_repeats: int = 0
    paragraphs_out: int = 0
    mean_words_per_paragraph: float = 0.0
    segmenter_fallback: bool = False

    def as_dict(self) -> dict:
        return {
            "blocks_in": self.blocks_in,
            "dropped_caption": self.dropped_caption,
            "dropped_min_tokens": self.dropped_min_tokens,
            "dropped_numeric": self.dropped_numeric,
            "dropped_repeats": self.dropped_repeats,
            "paragraphs_out": self.paragraphs_out,
            "mean_words_per_paragraph": self.mean_words_per_paragraph,
            "segmenter_fallback": self.segmenter_fallback,
        }


@dataclass
class CleaningConfig:
    caption_keywords: Sequence[str] = DEFAULT_CAPTION_KEYWORDS


class SegmenterBackend(Protocol):
    """Decides, for each adjacent block pair, whether the two belong together."""

    def merge_decisions(self, texts: Sequence[str]) -> list[bool]:
        ...


class SegmenterError(Exception):
    pass


class HeuristicSegmenter:
    """Merge when the left block lacks terminal punctuation and the right one
    starts in lowercase or with a digit."""

    def merge_decisions(self, texts: Sequence[str]) -> list[bool]:
        return [
            _heuristic_merge(texts[i], texts[i + 1]) for i in range(len(texts) - 1)
        ]


def _heuristic_merge(left: str, right: str) -> bool:
    left = left.rstrip()
    right = right.lstrip()
    if not left or not right:
        return False
    if left.endswith(TERMINAL_PUNCTUATION):
        return False
    first = right[0]
    return first.islower() or first.isdigit()


def _caption_pattern(keywords: Sequence[str]) -> re.Pattern[str]:
    alternatives = "|".join(re.escape(k) for k in keywords)
    # Keyword must not run into further letters ("figure" vs "figures" is a
    # different word, and "fig" must not fire inside "figure"), then optional
    # punctuation/whitespace, then a digit.
    return re.compile(
        rf"^\s*(?:{alternatives})(?![^\W\d_])[\W_]*\d",
        re.IGNORECASE | re.UNICODE,
    )


def filter_caption(block: TextBlock, config: CleaningConfig | None = None) -> bool:
    """True = keep.  Drops caption-style blocks: a known keyword followed by a number."""
    keywords = (config or CleaningConfig()).caption_keywords
    return _caption_pattern(tuple(keywords)).match(block.text) is None


def filter_min_tokens(block: TextBlock) -> bool:
    """True = keep.  Drops blocks with fewer than two whitespace tokens."""
    return block.word_count >= MIN_TOKENS


def filter_numeric_ratio(block: TextBlock) -> bool:
    """True = keep.  Drops blocks that are more than half digits (strict)."""
    return block.numeric_char_ratio <= MAX_NUMERIC_RATIO


def _normalize_for_repeats(text: str) -> str:
    return " ".join(text.split()).casefold()


def dedup_short_repeats(blocks: Sequence[TextBlock]) -> list[TextBlock]:
    """Remove every occurrence of short sentences repeated more than five times.

    "Short" means fewer than 25 words; occurrence counting is done on the
    case-folded, whitespace-collapsed text within a single document.
    """
    counts = Counter(_normalize_for_repeats(b.text) for b in blocks)
    return [
        b
        for b in blocks
        if not (
            b.word_count < REPEAT_WORD_LIMIT
            and counts[_normalize_for_repeats(b.text)] > REPEAT_COUNT_LIMIT
        )
    ]


def merge_paragraphs(
    blocks: Sequence[TextBlock],
    doc_id: str,
    segmenter: SegmenterBackend | None = None,
    report: CleaningReport | None = None,
) -> list[Paragraph]:
    """Join consecutive blocks the segmenter judges to be one broken sentence.

    A segmenter backend failure falls back to the built-in heuristic and is
    recorded on the report.  Paragraph text is the space-join of its source
    blocks, so total word count is preserved.
    """
    if not blocks:
        return []
    texts = [b.text for b in blocks]
    backend = segmenter or HeuristicSegmenter()
    try:
        decisions = backend.merge_decisions(texts)
        if len(decisions) != len(texts) - 1:
            raise SegmenterError(
                f"segmenter returned {len(decisions)} decisions for {len(texts)} blocks"
            )
    except Exception:
        if isinstance(backend, HeuristicSegmenter):
            raise
        decisions = HeuristicSegmenter().merge_decisions(texts)
        if report is not None:
            report.segmenter_fallback = True

    groups: list[list[TextBlock]] = [[blocks[0]]]
    for i in range(1, len(blocks)):
        if decisions[i - 1]:
            groups[-1].append(blocks[i])
        else:
            groups.append([blocks[i]])

    paragraphs = []
    for n, group in enumerate(groups):
        text = " ".join(b.text for b in group)
        paragraphs.append(
            Paragraph(
                para_id=f"{doc_id}:p{n}",
                doc_id=doc_id,
                text=text,
                word_count=_word_count(text),
                source_blocks=tuple(b.block_index for b in group),
            )
        )
    return paragraphs


def clean_pipeline(
    blocks: Sequence[TextBlock],
    doc_id: str,
    config: CleaningConfig | None = None,
    segmenter: SegmenterBackend | None = None,
) -> tuple[list[Paragraph], CleaningReport]:
    """Run all filters and the merge step in order, tallying each stage."""
    config = config or CleaningConfig()
    report = CleaningReport(blocks_in=len(blocks))

    survivors = []
    for block in blocks:
        if not filter_caption(block, config):
            report.dropped_caption += 1
        elif not filter_min_tokens(block):
            report.dropped_min_tokens += 1
        elif not filter_numeric_ratio(block):
            report.dropped_numeric += 1
        else:
            survivors.append(block)

    deduped = dedup_short_repeats(survivors)
    report.dropped_repeats = len(survivors) - len(deduped)

    paragraphs = merge_paragraphs(deduped, doc_id, segmenter, report)
    report.paragraphs_out = len(paragraphs)
    total_words = sum(p.word_count for p in paragraphs)
    report.mean_words_per_paragraph = total_words / len(paragraphs) if paragraphs else 0.0
    return paragraphs, report
