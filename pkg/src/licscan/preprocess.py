"""Text folding, tokenization, sentence splitting and official-license matching."""

from __future__ import annotations

import enum
import logging
import re
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import TYPE_CHECKING

import snowballstemmer

if TYPE_CHECKING:
    from licscan.registry import SpdxDb

log = logging.getLogger(__name__)

MAX_SENTENCE_TOKENS = 120
CONTAINMENT_THRESHOLD = 0.95

_QUOTES = str.maketrans(
    {
        "‘": "'", "’": "'", "‚": "'", "‛": "'", "′": "'",
        "“": '"', "”": '"', "„": '"', "‟": '"', "″": '"',
        "«": '"', "»": '"',
        "–": "-", "—": "-", "−": "-",
        " ": " ", " ": " ", " ": " ",
        "©": "(c)",
    }
)


def fold_text(text: str) -> str:
    """NFC-normalize, fold typographic quotes/dashes and drop control characters."""
    text = unicodedata.normalize("NFC", text).translate(_QUOTES)
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    return "".join(ch for ch in text if ch in "\n\t" or unicodedata.category(ch)[0] != "C")


# --------------------------------------------------------------------------- tokens


@dataclass(frozen=True)
class Token:
    surface: str
    stem: str
    position: int  # character offset within the sentence


_TOKEN_RE = re.compile(r"\w+(?:'\w+)*|[^\w\s]")
_stemmer = snowballstemmer.stemmer("english")


@lru_cache(maxsize=65536)
def stem(word: str) -> str:
    """Lowercased Snowball stem; punctuation and clitics pass through."""
    low = word.lower()
    if low == "n't":
        return "not"
    if not low[:1].isalnum():
        return low
    return _stemmer.stemWord(low)


def _split_word(word: str, start: int) -> list[tuple[str, int]]:
    low = word.lower()
    if low == "cannot":
        return [(word[:3], start), (word[3:], start + 3)]
    if low.endswith("n't") and len(word) > 3:
        return [(word[:-3], start), (word[-3:], start + len(word) - 3)]
    if low.endswith("'s") and len(word) > 2:
        return [(word[:-2], start), (word[-2:], start + len(word) - 2)]
    return [(word, start)]


def normalize_tokens(sentence_raw: str) -> list[Token]:
    """Split on whitespace and punctuation, keeping punctuation as tokens."""
    out = []
    for m in _TOKEN_RE.finditer(sentence_raw):
        for surface, pos in _split_word(m.group(), m.start()):
            out.append(Token(surface, stem(surface), pos))
    return out


def tokens_from_surfaces(surfaces: list[str]) -> tuple[str, list[Token]]:
    """Rebuild a raw sentence and its tokens from pre-tokenized surfaces."""
    tokens, pos = [], 0
    for s in surfaces:
        tokens.append(Token(s, stem(s), pos))
        pos += len(s) + 1
    return " ".join(surfaces), tokens


# ------------------------------------------------------------------------ sentences


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    raw: str
    index: int
    start: int = 0  # character offset of ``raw`` in the source text

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def stems(self) -> list[str]:
        return [t.stem for t in self.tokens]

    @classmethod
    def from_text(cls, raw: str, index: int = 0) -> Sentence:
        return cls(tuple(normalize_tokens(raw)), raw, index)

    @classmethod
    def from_surfaces(cls, surfaces: list[str], index: int = 0) -> Sentence:
        raw, tokens = tokens_from_surfaces(surfaces)
        return cls(tuple(tokens), raw, index)


@lru_cache(maxsize=1)
def abbreviations() -> frozenset[str]:
    text = resources.files("licscan.data").joinpath("abbreviations.txt").read_text("utf-8")
    return frozenset(
        line.strip().lower() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )


_LIST_MARKER = re.compile(r"(?:\(?\d{1,3}[.)]|\(?[a-z]\)|\(?[ivx]{1,5}[.)]|[-*•])(?=\s)", re.I)
_ONLY_MARKER = re.compile(r"^\s*(?:\(?\d{1,3}[.)]|\(?[a-z]\)|\(?[ivx]{1,5}[.)]|\d{1,3}(?:\.\d+)+\.?)\s*$", re.I)
_CLOSERS = "\"')]"


def _boundaries(text: str) -> list[int]:
    """Offsets at which a new sentence may start (excluding 0)."""
    cuts = set()
    abbrev = abbreviations()
    n = len(text)
    last = 0
    for i, ch in enumerate(text):
        if ch in ".;!?":
            j = i + 1
            while j < n and text[j] in _CLOSERS:
                j += 1
            if j < n and not text[j].isspace():
                continue
            if ch == ".":
                k = i
                while k > 0 and not text[k - 1].isspace():
                    k -= 1
                word = text[k : i + 1].lower().lstrip("(\"'")
                if word in abbrev:
                    continue
                if _ONLY_MARKER.match(text[last : i + 1]):
                    continue
            cuts.add(j)
            last = j
        elif ch == "\n":
            j = i + 1
            while j < n and text[j] in " \t":
                j += 1
            if j < n and text[j] == "\n":
                cuts.add(j)
                last = j
            elif _LIST_MARKER.match(text, j):
                cuts.add(j)
                last = j
    return sorted(cuts)


def _hard_wrap(raw: str, start: int, warnings: list[str] | None) -> list[tuple[str, int]]:
    tokens = normalize_tokens(raw)
    if len(tokens) <= MAX_SENTENCE_TOKENS:
        return [(raw, start)]
    pieces, piece_start, count = [], 0, 0
    for tok in tokens:
        count += 1
        if tok.surface in ",;" and count >= MAX_SENTENCE_TOKENS // 2:
            end = tok.position + 1
            pieces.append((raw[piece_start:end], piece_start))
            piece_start, count = end, 0
    pieces.append((raw[piece_start:], piece_start))
    msg = f"sentence at offset {start} has {len(tokens)} tokens; wrapped into {len(pieces)} pieces"
    log.warning(msg)
    if warnings is not None:
        warnings.append(msg)
    out = []
    for piece, off in pieces:
        stripped = piece.strip()
        if stripped:
            out.append((stripped, start + off + (len(piece) - len(piece.lstrip()))))
    return out


def split_sentences(text: str, warnings: list[str] | None = None) -> list[Sentence]:
    """Rule-based sentence splitter.

    Sentences end at ``. ; ! ?`` followed by whitespace (unless the word is a
    known abbreviation or a bare list number), at blank lines and before list
    items. Every character of ``text`` lands either in exactly one sentence's
    ``raw`` or in the whitespace between sentences.
    """
    cuts = [0] + _boundaries(text) + [len(text)]
    sentences: list[Sentence] = []
    for a, b in zip(cuts, cuts[1:]):
        chunk = text[a:b]
        stripped = chunk.strip()
        if not stripped:
            continue
        off = a + len(chunk) - len(chunk.lstrip())
        for raw, start in _hard_wrap(stripped, off, warnings):
            sentences.append(Sentence(tuple(normalize_tokens(raw)), raw, len(sentences), start))
    return sentences


# ------------------------------------------------------------------ official match


class MatchKind(str, enum.Enum):
    EXACT = "ExactOfficial"
    CONTAINS = "ContainsOfficial"
    NONE = "NoMatch"


@dataclass(frozen=True)
class MatchResult:
    kind: MatchKind
    spdx_id: str | None = None
    residual: str = ""


_COPYRIGHT_LINE = re.compile(r"^[ \t]*(?:copyright\b|\(c\)).*$", re.I | re.M)


def comparison_form(text: str) -> tuple[str, list[int]]:
    """Case-folded, whitespace-collapsed text with copyright lines and digits masked.

    Returns the folded string and, for each of its characters, the offset of
    the source character it came from.
    """
    text = fold_text(text)
    masked_spans = [(m.start(), m.end()) for m in _COPYRIGHT_LINE.finditer(text)]
    out: list[str] = []
    src: list[int] = []
    span_iter = iter(masked_spans)
    span = next(span_iter, None)
    i, n = 0, len(text)

    def emit(s: str, at: int) -> None:
        for ch in s:
            if ch == " " and (not out or out[-1] == " "):
                continue
            out.append(ch)
            src.append(at)

    while i < n:
        if span and i == span[0]:
            emit(" <copyright> ", i)
            i = span[1]
            span = next(span_iter, None)
            continue
        ch = text[i]
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            emit("0", i)
            i = j
            continue
        emit(" " if ch.isspace() else ch.casefold(), i)
        i += 1
    while out and out[-1] == " ":
        out.pop()
        src.pop()
    if out and out[0] == " ":
        out.pop(0)
        src.pop(0)
    return "".join(out), src


def _collapse(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip()


def match_official(text: str, db: SpdxDb) -> MatchResult:
    """Classify ``text`` as an exact official license, a superset of one, or neither."""
    folded = fold_text(text)
    form, src = comparison_form(folded)
    if not form:
        return MatchResult(MatchKind.NONE)
    best: tuple[int, str, int, int] | None = None
    for spdx_id in sorted(db.entries):
        canon = db.comparison_form(spdx_id)
        if form == canon:
            return MatchResult(MatchKind.EXACT, spdx_id)
        n = len(canon)
        need = -(-n * int(CONTAINMENT_THRESHOLD * 100) // 100)  # ceil(0.95 n)
        if n == 0 or len(form) < need:
            continue
        # any contiguous match of length >= need must cover canon[n-need:need]
        core = canon[n - need : need]
        pos = form.find(core)
        while pos != -1:
            lo, clo = pos, n - need
            while lo > 0 and clo > 0 and form[lo - 1] == canon[clo - 1]:
                lo, clo = lo - 1, clo - 1
            hi, chi = pos + len(core), need
            while hi < len(form) and chi < n and form[hi] == canon[chi]:
                hi, chi = hi + 1, chi + 1
            length = hi - lo
            if best is None or length > best[0]:
                best = (length, spdx_id, lo, hi)
            pos = form.find(core, pos + 1)
    if best is None:
        return MatchResult(MatchKind.NONE)
    _, spdx_id, lo, hi = best
    start = src[lo]
    end = src[hi] if hi < len(src) else len(folded)
    residual = _collapse(folded[:start] + " " + folded[end:])
    return MatchResult(MatchKind.CONTAINS, spdx_id, residual)
