"""Deterministic text segmentation at word, sentence, and paragraph level.

Segments carry half-open character offsets into the original string
(Unicode scalar indices), so any segmentation can be realigned with any
other and the original text can always be reproduced from the segments
plus the gaps between them.

The sentence splitter is rule based: a run of ``.``, ``!`` or ``?``,
optionally followed by closing quotes or brackets and then whitespace,
closes a sentence.  An abbreviation list suppresses splits after tokens
such as ``Dr.`` or ``e.g.``; a single capital letter with a period is
treated as an initial only when a capitalized word follows ("J. Smith").
Decimal numbers never split because the period is not followed by
whitespace.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Collection, Iterator

from .errors import UnknownSegmenter

__all__ = [
    "Segment",
    "Document",
    "split_words",
    "split_sentences",
    "split_paragraphs",
    "segment_text",
    "register_segmenter",
    "get_segmenter",
    "segmenter_names",
    "load_abbreviations",
]

_CHUNK_RE = re.compile(r"\S+")
_TERMINATOR_RUN_RE = re.compile(r"[.!?]+")
_WS_RUN_RE = re.compile(r"\s+")
_INITIAL_RE = re.compile(r"^[^\W\d_]\.$")
_NAME_START_RE = re.compile(r"^[A-Z][a-z]")

# Characters that may trail a terminator yet still belong to the closing
# sentence (quotes, brackets).
_CLOSERS = "\"'’”)\\]}»"
# Characters that may open a sentence in addition to uppercase/digits.
_OPENERS = "\"'‘“(\\[{«"


@dataclass(slots=True, frozen=True)
class Segment:
    """One unit of a segmentation, as offsets into the original text."""

    index: int
    char_start: int
    char_end: int
    kind: str


@dataclass(frozen=True)
class Document:
    """A text together with one segmentation of it."""

    text: str
    segments: tuple[Segment, ...]
    granularity: str

    def __post_init__(self) -> None:
        prev_end = 0
        for pos, seg in enumerate(self.segments):
            if seg.index != pos:
                raise ValueError(f"segment {pos} carries index {seg.index}")
            if not (0 <= seg.char_start < seg.char_end <= len(self.text)):
                raise ValueError(f"segment {pos} offsets out of bounds")
            if seg.char_start < prev_end:
                raise ValueError(f"segment {pos} overlaps its predecessor")
            prev_end = seg.char_end

    @property
    def n_units(self) -> int:
        return len(self.segments)

    def segment_text(self, index: int) -> str:
        seg = self.segments[index]
        return self.text[seg.char_start : seg.char_end]

    def unit_texts(self) -> list[str]:
        return [self.segment_text(i) for i in range(self.n_units)]


def _make_document(text: str, spans: list[tuple[int, int]], kind: str) -> Document:
    segments = tuple(
        Segment(index=i, char_start=a, char_end=b, kind=kind)
        for i, (a, b) in enumerate(spans)
    )
    return Document(text=text, segments=segments, granularity=kind)


def split_words(text: str) -> Document:
    """Split on whitespace, detaching edge punctuation as its own tokens.

    Interior punctuation stays attached, so "don't" and "3.14" survive as
    single tokens while quotes, commas and sentence terminators at token
    edges come off one character at a time.
    """

    spans: list[tuple[int, int]] = []
    for m in _CHUNK_RE.finditer(text):
        start, end = m.start(), m.end()
        left, right = start, end
        while left < right and not text[left].isalnum():
            spans.append((left, left + 1))
            left += 1
        tail: list[tuple[int, int]] = []
        while right > left and not text[right - 1].isalnum():
            tail.append((right - 1, right))
            right -= 1
        if left < right:
            spans.append((left, right))
        spans.extend(reversed(tail))
    return _make_document(text, spans, "word")


_DEFAULT_ABBREVIATIONS: frozenset[str] | None = None


def load_abbreviations(path: str | None = None) -> frozenset[str]:
    """Load an abbreviation list, one lowercase token per line.

    With no path, the bundled list ships with the package.  Lines that
    are empty or start with ``#`` are skipped.
    """

    if path is None:
        raw = (
            resources.files("gutek.data")
            .joinpath("abbreviations.txt")
            .read_text(encoding="utf-8")
        )
    else:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read()
    entries = set()
    for line in raw.splitlines():
        line = line.strip().lower()
        if line and not line.startswith("#"):
            entries.add(line)
    return frozenset(entries)


def _default_abbreviations() -> frozenset[str]:
    global _DEFAULT_ABBREVIATIONS
    if _DEFAULT_ABBREVIATIONS is None:
        _DEFAULT_ABBREVIATIONS = load_abbreviations()
    return _DEFAULT_ABBREVIATIONS


def _chunk_around(text: str, pos: int) -> tuple[int, int]:
    # Maximal non-whitespace run containing text[pos].
    left = pos
    while left > 0 and not text[left - 1].isspace():
        left -= 1
    right = pos + 1
    while right < len(text) and not text[right].isspace():
        right += 1
    return left, right


def _next_nonspace(text: str, pos: int) -> int:
    while pos < len(text) and text[pos].isspace():
        pos += 1
    return pos


def _sentence_breaks(text: str, abbreviations: frozenset[str]) -> Iterator[int]:
    """Yield end offsets (after trailing closers) of sentence boundaries."""

    for m in _TERMINATOR_RUN_RE.finditer(text):
        run = m.group()
        end = m.end()
        while end < len(text) and text[end] in _CLOSERS:
            end += 1
        if end < len(text) and not text[end].isspace():
            continue
        nxt = _next_nonspace(text, end)
        if nxt >= len(text):
            yield end
            continue
        follower = text[nxt]
        if "!" in run or "?" in run:
            yield end
            continue
        if len(run) >= 2:
            # Ellipsis: close only before a clearly new sentence.
            if follower.isupper() or follower.isdigit() or follower in _OPENERS:
                yield end
            continue
        chunk_start, _ = _chunk_around(text, m.start())
        token = text[chunk_start : m.end()].lower()
        while token and not token[0].isalnum():
            token = token[1:]
        if token in abbreviations:
            continue
        raw_token = text[chunk_start : m.end()]
        if _INITIAL_RE.match(raw_token) and raw_token[0].isupper():
            follow_chunk = text[nxt : _chunk_around(text, nxt)[1]]
            if _NAME_START_RE.match(follow_chunk):
                continue
        if follower.islower():
            continue
        yield end


def split_sentences(text: str, abbreviations: Collection[str] | None = None) -> Document:
    """Split into sentences; see the module docstring for the rules."""

    if abbreviations is None:
        abbrev = _default_abbreviations()
    else:
        abbrev = frozenset(a.lower() for a in abbreviations)

    spans: list[tuple[int, int]] = []
    cursor = _next_nonspace(text, 0)
    for brk in _sentence_breaks(text, abbrev):
        if brk <= cursor:
            continue
        spans.append((cursor, brk))
        cursor = _next_nonspace(text, brk)
    if cursor < len(text):
        tail_end = len(text)
        while tail_end > cursor and text[tail_end - 1].isspace():
            tail_end -= 1
        if tail_end > cursor:
            spans.append((cursor, tail_end))
    return _make_document(text, spans, "sentence")


def split_paragraphs(text: str) -> Document:
    """Split on blank lines: whitespace runs containing two or more newlines."""

    separators = [
        (m.start(), m.end())
        for m in _WS_RUN_RE.finditer(text)
        if m.group().count("\n") >= 2
    ]
    spans: list[tuple[int, int]] = []
    region_start = 0
    for sep_start, sep_end in separators + [(len(text), len(text))]:
        a, b = region_start, sep_start
        while a < b and text[a].isspace():
            a += 1
        while b > a and text[b - 1].isspace():
            b -= 1
        if a < b:
            spans.append((a, b))
        region_start = sep_end
    return _make_document(text, spans, "paragraph")


_SEGMENTERS: dict[str, Callable[..., Document]] = {}


def register_segmenter(name: str, fn: Callable[..., Document]) -> None:
    """Add a segmenter to the registry; duplicate names are rejected."""

    if name in _SEGMENTERS:
        raise ValueError(f"segmenter {name!r} is already registered")
    _SEGMENTERS[name] = fn


def get_segmenter(name: str) -> Callable[..., Document]:
    try:
        return _SEGMENTERS[name]
    except KeyError:
        known = ", ".join(sorted(_SEGMENTERS))
        raise UnknownSegmenter(f"unknown segmenter {name!r} (known: {known})") from None


def segmenter_names() -> list[str]:
    return sorted(_SEGMENTERS)


def segment_text(
    text: str, granularity: str, abbreviations: Collection[str] | None = None
) -> Document:
    """Segment with a registered segmenter chosen by name."""

    fn = get_segmenter(granularity)
    if granularity == "sentence":
        return fn(text, abbreviations=abbreviations)
    return fn(text)


register_segmenter("word", split_words)
register_segmenter("sentence", split_sentences)
register_segmenter("paragraph", split_paragraphs)
