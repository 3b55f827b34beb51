"""Parsers for the structured text formats the prompts ask the model to emit.

Strict mode accepts only the canonical line grammar (what serialize_* writes);
lenient mode additionally forgives the deviations real model output shows:
bullets, case changes, blank lines, "SDG 13" instead of "(13)", wrapped
explanations.  Everything strict accepts, lenient accepts with the same
result.  Parsers never raise anything but ParseError, whatever the input.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from .sdgs import SDG_NAMES, is_valid_sdg, sdg_name

STRICT = "strict"
LENIENT = "lenient"

SYNERGY = "synergy"
TRADEOFF = "tradeoff"
NEUTRAL = "neutral"

INWARD = "inward"
OUTWARD = "outward"
BOTH = "both"
NONE = "none"

_RELATIONSHIP_WORDS = {
    "synergy": SYNERGY,
    "trade-off": TRADEOFF,
    "tradeoff": TRADEOFF,
    "trade off": TRADEOFF,
    "neutral": NEUTRAL,
}
_DIRECTIONALITY_WORDS = {
    "inward": INWARD,
    "outward": OUTWARD,
    "both": BOTH,
    "none": NONE,
}

_CANONICAL_RELATIONSHIP = {SYNERGY: "Synergy", TRADEOFF: "Trade-off", NEUTRAL: "Neutral"}
_CANONICAL_DIRECTIONALITY = {INWARD: "Inward", OUTWARD: "Outward", BOTH: "Both", NONE: "None"}

_NAME_TO_SDG = {name.casefold(): i for i, name in enumerate(SDG_NAMES)}


class ParseError(Exception):
    def __init__(self, message: str, rule: str = "parse"):
        super().__init__(message)
        self.rule = rule


@dataclass(frozen=True)
class ParseWarning:
    rule: str
    message: str


@dataclass(frozen=True)
class SdgAssignment:
    main: int
    main_reason: str
    secondaries: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        if not is_valid_sdg(self.main):
            raise ValueError(f"main SDG out of range: {self.main}")
        numbers = [n for n, _ in self.secondaries]
        for n in numbers:
            if not 1 <= n <= 17:
                raise ValueError(f"secondary SDG out of range: {n}")
        if len(set(numbers)) != len(numbers):
            raise ValueError("duplicate secondary SDG")
        if self.main in numbers:
            raise ValueError("main SDG repeated as secondary")
        if self.main == 0 and self.secondaries:
            raise ValueError("main SDG 0 admits no secondaries")


@dataclass(frozen=True)
class InterlinkageRecord:
    sdg_a: int
    sdg_b: int
    relationship: str
    directionality: str
    explanation: str

    def __post_init__(self):
        for n in (self.sdg_a, self.sdg_b):
            if not 1 <= n <= 17:
                raise ValueError(f"pair SDG out of range: {n}")
        if self.sdg_a == self.sdg_b:
            raise ValueError("pair members must differ")
        if self.relationship not in (SYNERGY, TRADEOFF, NEUTRAL):
            raise ValueError(f"unknown relationship: {self.relationship}")
        if self.relationship == NEUTRAL:
            if self.directionality != NONE:
                raise ValueError("neutral relationship requires directionality 'none'")
        elif self.directionality not in (INWARD, OUTWARD, BOTH):
            raise ValueError(f"invalid directionality: {self.directionality}")


def _warn(warnings: list[ParseWarning] | None, rule: str, message: str) -> None:
    if warnings is not None:
        warnings.append(ParseWarning(rule, message))


def _check_sdg_number(raw: str, rule: str) -> int:
    number = int(raw)
    if not is_valid_sdg(number):
        raise ParseError(f"SDG number outside 0..17: {number}", rule)
    return number


def _check_name(number: int, name_text: str, rule: str, warnings: list[ParseWarning] | None) -> None:
    # The number is authoritative; a recognizable but contradicting goal name
    # is worth surfacing, anything else is ignored.
    claimed = _NAME_TO_SDG.get(name_text.strip().casefold())
    if claimed is not None and claimed != number:
        _warn(warnings, rule, f"goal name '{name_text.strip()}' does not match SDG {number}")


# --- SDG assignment (stage-1 interlinkage output) -------------------------

_MAIN_STRICT = re.compile(r"^Main SDG \((\d{1,2})\): (.*)$")
_REASON_MAIN_STRICT = re.compile(r"^Reason main SDG \((\d{1,2})\): (.*)$")
_SECONDARY_STRICT = re.compile(r"^Secondary SDG \((\d{1,2})\): (.*)$")
_REASON_SECONDARY_STRICT = re.compile(r"^Reason secondary SDG \((\d{1,2})\): (.*)$")

_MAIN_LENIENT = re.compile(r"^Main SDG\s*\(?\s*(\d{1,2})\s*\)?\s*:\s*(.*)$", re.IGNORECASE)
_REASON_MAIN_LENIENT = re.compile(
    r"^Reason (?:for )?main SDG\s*\(?\s*(\d{1,2})\s*\)?\s*:\s*(.*)$", re.IGNORECASE
)
_SECONDARY_LENIENT = re.compile(r"^Secondary SDG\s*\(?\s*(\d{1,2})\s*\)?\s*:\s*(.*)$", re.IGNORECASE)
_REASON_SECONDARY_LENIENT = re.compile(
    r"^Reason (?:for )?secondary SDG\s*\(?\s*(\d{1,2})\s*\)?\s*:\s*(.*)$", re.IGNORECASE
)

_BULLET_RE = re.compile(r"^\s*[-*•]\s*")


def _strip_bullet(line: str) -> str:
    return _BULLET_RE.sub("", line.strip())


def parse_sdg_assignment(
    raw_text: str,
    mode: str = STRICT,
    warnings: list[ParseWarning] | None = None,
) -> SdgAssignment:
    """Parse `Main SDG (n): ...` / `Secondary SDG (n): ...` blocks."""
    if mode not in (STRICT, LENIENT):
        raise ParseError(f"unknown parse mode: {mode}", "mode")
    lenient = mode == LENIENT
    main_re = _MAIN_LENIENT if lenient else _MAIN_STRICT
    reason_main_re = _REASON_MAIN_LENIENT if lenient else _REASON_MAIN_STRICT
    secondary_re = _SECONDARY_LENIENT if lenient else _SECONDARY_STRICT
    reason_secondary_re = _REASON_SECONDARY_LENIENT if lenient else _REASON_SECONDARY_STRICT

    main: tuple[int, str] | None = None
    secondaries: list[tuple[int, str]] = []
    have_reason_main = False

    for raw_line in raw_text.splitlines():
        line = _strip_bullet(raw_line) if lenient else raw_line
        if not line.strip():
            if lenient:
                continue
            raise ParseError("blank line in strict assignment text", "assignment")

        m = main_re.match(line)
        if m:
            number = _check_sdg_number(m.group(1), "assignment")
            if main is not None:
                if not lenient:
                    raise ParseError("duplicate main SDG line", "assignment")
                _warn(warnings, "assignment", "duplicate main SDG line ignored")
                continue
            _check_name(number, m.group(2), "assignment", warnings)
            main = (number, "")
            continue

        m = reason_main_re.match(line)
        if m:
            if main is None:
                raise ParseError("reason line before main SDG line", "assignment")
            if have_reason_main:
                if not lenient:
                    raise ParseError("duplicate main reason line", "assignment")
                _warn(warnings, "assignment", "duplicate main reason ignored")
                continue
            if int(m.group(1)) != main[0]:
                _warn(warnings, "assignment", "reason line number differs from main SDG")
            main = (main[0], m.group(2))
            have_reason_main = True
            continue

        m = secondary_re.match(line)
        if m:
            if main is None:
                raise ParseError("secondary SDG before main SDG line", "assignment")
            number = _check_sdg_number(m.group(1), "assignment")
            _check_name(number, m.group(2), "assignment", warnings)
            secondaries.append((number, ""))
            continue

        m = reason_secondary_re.match(line)
        if m:
            if not secondaries:
                if not lenient:
                    raise ParseError("secondary reason with no secondary SDG", "assignment")
                _warn(warnings, "assignment", "dangling secondary reason ignored")
                continue
            number, _ = secondaries[-1]
            if int(m.group(1)) != number:
                _warn(warnings, "assignment", "reason line number differs from secondary SDG")
            secondaries[-1] = (number, m.group(2))
            continue

        if lenient:
            _warn(warnings, "assignment", f"unrecognized line skipped: {line[:60]!r}")
            continue
        raise ParseError(f"unrecognized line: {raw_line[:60]!r}", "assignment")

    if main is None:
        raise ParseError("no main-SDG line found", "assignment")

    main_number, main_reason = main
    numbers = [n for n, _ in secondaries]
    dupes = {n for n in numbers if numbers.count(n) > 1}
    if dupes:
        raise ParseError(f"duplicate secondary SDG: {sorted(dupes)}", "assignment")
    if main_number in numbers:
        if not lenient:
            raise ParseError("main SDG repeated as secondary", "assignment")
        _warn(warnings, "assignment", f"secondary repeating main SDG {main_number} dropped")
        secondaries = [(n, r) for n, r in secondaries if n != main_number]
    if any(n == 0 for n, _ in secondaries):
        if not lenient:
            raise ParseError("secondary SDG 0 not allowed", "assignment")
        _warn(warnings, "assignment", "secondary SDG 0 dropped")
        secondaries = [(n, r) for n, r in secondaries if n != 0]
    if main_number == 0 and secondaries:
        if not lenient:
            raise ParseError("main SDG 0 admits no secondaries", "assignment")
        _warn(warnings, "assignment", "secondaries dropped because main SDG is 0")
        secondaries = []
    return SdgAssignment(main_number, main_reason, tuple(secondaries))


# --- Interlinkage records (stage-2 output) ---------------------------------

_PAIR_STRICT = re.compile(r"^(?:- )?SDG Pair: (?:SDG )+(\d{1,2}) - (?:SDG )*(\d{1,2})$")
_RELATIONSHIP_STRICT = re.compile(r"^(?:- )?Relationship: (.+)$")
_DIRECTIONALITY_STRICT = re.compile(r"^(?:- )?Directionality: (.+)$")
_EXPLANATION_STRICT = re.compile(r"^(?:- )?Explanation: (.*)$")

_PAIR_LENIENT = re.compile(
    r"^SDG Pair\s*:\s*(?:SDG\s*)+(\d{1,2})\s*-\s*(?:SDG\s*)*(\d{1,2})\s*$", re.IGNORECASE
)
_RELATIONSHIP_LENIENT = re.compile(r"^Relationship\s*:\s*(.+)$", re.IGNORECASE)
_DIRECTIONALITY_LENIENT = re.compile(r"^Directionality\s*:\s*(.+)$", re.IGNORECASE)
_EXPLANATION_LENIENT = re.compile(r"^Explanation\s*:\s*(.*)$", re.IGNORECASE)


def _normalize_relationship(word: str, rule: str) -> str:
    value = _RELATIONSHIP_WORDS.get(word.strip().strip(".").casefold())
    if value is None:
        raise ParseError(f"unknown relationship: {word.strip()!r}", rule)
    return value


def _normalize_directionality(word: str, rule: str) -> str:
    value = _DIRECTIONALITY_WORDS.get(word.strip().strip(".").casefold())
    if value is None:
        raise ParseError(f"unknown directionality: {word.strip()!r}", rule)
    return value


def _finish_record(
    group: dict,
    warnings: list[ParseWarning] | None,
) -> InterlinkageRecord:
    for key in ("pair", "relationship", "directionality", "explanation"):
        if key not in group:
            raise ParseError(f"interlinkage group missing field: {key}", "interlinkage")
    a, b = group["pair"]
    relationship = group["relationship"]
    directionality = group["directionality"]
    if a == b:
        raise ParseError(f"pair members must differ, got SDG {a} twice", "interlinkage")
    if relationship == NEUTRAL and directionality != NONE:
        _warn(
            warnings,
            "interlinkage",
            f"neutral relationship with directionality '{directionality}' normalized to none",
        )
        directionality = NONE
    if relationship != NEUTRAL and directionality == NONE:
        raise ParseError(f"{relationship} relationship requires a directionality", "interlinkage")
    return InterlinkageRecord(a, b, relationship, directionality, group["explanation"])


def parse_interlinkage(
    raw_text: str,
    mode: str = STRICT,
    warnings: list[ParseWarning] | None = None,
) -> list[InterlinkageRecord]:
    """Parse repeated SDG Pair / Relationship / Directionality / Explanation groups.

    Empty input yields an empty list.  In lenient mode, unrecognized lines
    after an Explanation are treated as wrapped explanation text.
    """
    if mode not in (STRICT, LENIENT):
        raise ParseError(f"unknown parse mode: {mode}", "mode")
    lenient = mode == LENIENT
    pair_re = _PAIR_LENIENT if lenient else _PAIR_STRICT
    relationship_re = _RELATIONSHIP_LENIENT if lenient else _RELATIONSHIP_STRICT
    directionality_re = _DIRECTIONALITY_LENIENT if lenient else _DIRECTIONALITY_STRICT
    explanation_re = _EXPLANATION_LENIENT if lenient else _EXPLANATION_STRICT

    records: list[InterlinkageRecord] = []
    group: dict | None = None

    for raw_line in raw_text.splitlines():
        line = _strip_bullet(raw_line) if lenient else raw_line
        if not line.strip():
            if lenient or group is None or len(group) == 4:
                continue
            raise ParseError("blank line inside interlinkage group", "interlinkage")

        m = pair_re.match(line)
        if m:
            if group is not None:
                records.append(_finish_record(group, warnings))
            a = int(m.group(1))
            b = int(m.group(2))
            for n in (a, b):
                if not 1 <= n <= 17:
                    raise ParseError(f"pair SDG outside 1..17: {n}", "interlinkage")
            group = {"pair": (a, b)}
            continue

        if group is None:
            if lenient:
                _warn(warnings, "interlinkage", f"line outside any group skipped: {line[:60]!r}")
                continue
            raise ParseError(f"unrecognized line: {raw_line[:60]!r}", "interlinkage")

        m = relationship_re.match(line)
        if m and "relationship" not in group:
            group["relationship"] = _normalize_relationship(m.group(1), "interlinkage")
            continue
        m = directionality_re.match(line)
        if m and "directionality" not in group:
            group["directionality"] = _normalize_directionality(m.group(1), "interlinkage")
            continue
        m = explanation_re.match(line)
        if m and "explanation" not in group:
            group["explanation"] = m.group(1)
            continue

        if lenient:
            if "explanation" in group:
                group["explanation"] = (group["explanation"] + " " + line.strip()).strip()
            else:
                _warn(warnings, "interlinkage", f"unrecognized line skipped: {line[:60]!r}")
            continue
        raise ParseError(f"unrecognized line: {raw_line[:60]!r}", "interlinkage")

    if group is not None:
        records.append(_finish_record(group, warnings))
    return records


# --- Sentiment label --------------------------------------------------------

_SENTIMENT_TOKEN = re.compile(r"(?<![0-9A-Za-z])([012])(?![0-9A-Za-z])")


def parse_sentiment_label(raw_text: str) -> int:
    """The one-and-only standalone 0/1/2 token in the response."""
    found = {int(m) for m in _SENTIMENT_TOKEN.findall(raw_text)}
    if not found:
        raise ParseError("no sentiment label 0/1/2 found", "sentiment")
    if len(found) > 1:
        raise ParseError(f"ambiguous sentiment label: {sorted(found)}", "sentiment")
    return found.pop()


# --- SDG sets (two-step stage 1, prompt-variant responses) ------------------

_SDG_SET_STRICT = re.compile(r"^\s*\d{1,2}\s*(?:,\s*\d{1,2}\s*)*$")
_NUMBER_TOKEN = re.compile(r"(?<![0-9A-Za-z])(\d{1,2})(?![0-9A-Za-z])")


def parse_sdg_set(
    raw_text: str,
    mode: str = STRICT,
    warnings: list[ParseWarning] | None = None,
) -> list[int]:
    """Standalone SDG numbers, deduplicated, order of first appearance kept."""
    if mode not in (STRICT, LENIENT):
        raise ParseError(f"unknown parse mode: {mode}", "mode")
    if mode == STRICT and not _SDG_SET_STRICT.match(raw_text):
        raise ParseError("response is not a plain number list", "sdg-set")
    numbers: list[int] = []
    for token in _NUMBER_TOKEN.findall(raw_text):
        value = int(token)
        if not is_valid_sdg(value):
            if mode == STRICT:
                raise ParseError(f"SDG number outside 0..17: {value}", "sdg-set")
            _warn(warnings, "sdg-set", f"number outside 0..17 ignored: {value}")
            continue
        if value not in numbers:
            numbers.append(value)
    if not numbers:
        raise ParseError("no SDG numbers found", "sdg-set")
    return numbers


# --- Canonical serialization -------------------------------------------------

def serialize_assignment(assignment: SdgAssignment) -> str:
    n = assignment.main
    lines = [
        f"Main SDG ({n}): {sdg_name(n)}",
        f"Reason main SDG ({n}): {assignment.main_reason}",
    ]
    for number, reason in assignment.secondaries:
        lines.append(f"Secondary SDG ({number}): {sdg_name(number)}")
        lines.append(f"Reason secondary SDG ({number}): {reason}")
    return "\n".join(lines)


def serialize_interlinkage(record: InterlinkageRecord) -> str:
    return "\n".join(
        [
            f"- SDG Pair: SDG {record.sdg_a} - SDG {record.sdg_b}",
            f"- Relationship: {_CANONICAL_RELATIONSHIP[record.relationship]}",
            f"- Directionality: {_CANONICAL_DIRECTIONALITY[record.directionality]}",
            f"- Explanation: {record.explanation}",
        ]
    )


def serialize_interlinkage_list(records: Sequence[InterlinkageRecord]) -> str:
    return "\n".join(serialize_interlinkage(r) for r in records)
