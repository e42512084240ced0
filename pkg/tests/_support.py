"""Shared helpers for the test suite."""

from __future__ import annotations

import re
from pathlib import Path

from licscan.preprocess import Sentence
from licscan.term_id import TermEntity

FIXTURES = Path(__file__).parent / "fixtures"
PROJECTS = FIXTURES / "projects"
ENTITY = re.compile(r"\{(\d{1,2}):([^{}]+)\}")


def marked(text: str, index: int = 0) -> tuple[Sentence, list[TermEntity]]:
    """Parse ``{ID:span}`` markup into a sentence and its gold entities."""
    plain, spans, last, offset = [], [], 0, 0
    for m in ENTITY.finditer(text):
        plain.append(text[last:m.start()])
        offset += m.start() - last
        spans.append((int(m.group(1)), offset, offset + len(m.group(2))))
        plain.append(m.group(2))
        offset += len(m.group(2))
        last = m.end()
    plain.append(text[last:])
    sentence = Sentence.from_text("".join(plain), index)
    entities = []
    for term, lo, hi in spans:
        idx = [i for i, t in enumerate(sentence.tokens) if lo <= t.position < hi]
        entities.append(TermEntity(term, idx[0], idx[-1] + 1, index))
    return sentence, entities


def attitude_cases() -> list[tuple[str, str, str]]:
    """(expected attitude, keyword, marked sentence) rows of the attitude fixture."""
    rows = []
    for line in (FIXTURES / "attitude_sentences.txt").read_text("utf-8").splitlines():
        if line.strip() and not line.startswith("#"):
            expected, keyword, text = line.split("\t")
            rows.append((expected, keyword, text))
    return rows
