"""The 23 license terms, the attitude alphabet and the BIO label alphabet."""

from __future__ import annotations

import enum
from dataclasses import dataclass


class Category(str, enum.Enum):
    RIGHT = "Right"
    OBLIGATION = "Obligation"


class Attitude(str, enum.Enum):
    CAN = "CAN"
    CANNOT = "CANNOT"
    MUST = "MUST"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class Term:
    id: int
    name: str
    category: Category
    description: str


_TABLE = [
    ("Distribute", "Distribute original or modified derivative works"),
    ("Modify", "Modify the software and create derivatives"),
    ("Commercial Use", "Use the software for commercial purposes"),
    ("Relicense", "Add other licenses with the software"),
    ("Hold Liable", "Hold the author responsible for subsequent impacts"),
    ("Use Patent Claims", "Practice patent claims of contributors to the code"),
    ("Sublicense", "Incorporate the work into something that has a more restrictive license"),
    ("Statically Link", "The library can be compiled into the program linked at compile time rather than runtime"),
    ("Private Use", "Use or modify software freely without distributing it"),
    ("Use Trademark", "Use contributors' names, trademarks or logos"),
    ("Place Warranty", "Place warranty on the software licensed"),
    ("Include Copyright", "Retain the copyright notice in all copies or substantial uses of the work"),
    ("Include License", "Include the full text of license in modified software"),
    ("Include Notice", "Include that NOTICE when you distribute if the library has a NOTICE file with attribution notes"),
    ("Disclose Source", "Disclose your source code when you distribute the software and make the source for the library available"),
    ("State Changes", "State significant changes made to software"),
    ("Include Original", "Distribute copies of the original software or instructions to obtain copies with the software"),
    ("Give Credit", "Give explicit credit or acknowledgement to the author with the software"),
    ("Rename", "Change software name as to not misrepresent them as the original software"),
    ("Contact Author", "Get permission from author or contact the author about the module you are using"),
    ("Include Install Instructions", "Include the installation information necessary to modify and reinstall the software"),
    ("Compensate for Damages", "Compensate the author for any damages cased by your work"),
    ("Pay Above Use Threshold", "Pay the licensor after a certain amount of use"),
]

NUM_TERMS = len(_TABLE)
NUM_RIGHTS = 11

TERMS: tuple[Term, ...] = tuple(
    Term(i, name, Category.RIGHT if i < NUM_RIGHTS else Category.OBLIGATION, desc)
    for i, (name, desc) in enumerate(_TABLE)
)
_BY_NAME = {t.name.lower(): t for t in TERMS}


def term(key: int | str) -> Term:
    """Look a term up by id or (case-insensitive) name."""
    if isinstance(key, int):
        if not 0 <= key < NUM_TERMS:
            raise KeyError(key)
        return TERMS[key]
    return _BY_NAME[key.lower()]


def is_right(term_id: int) -> bool:
    return term_id < NUM_RIGHTS


# BIO alphabet. "O" comes first so that ties in decoding resolve to O.
LABELS: tuple[str, ...] = ("O",) + tuple(f"B-{i}" for i in range(NUM_TERMS)) + tuple(
    f"I-{i}" for i in range(NUM_TERMS)
)
NUM_LABELS = len(LABELS)
LABEL_INDEX = {lab: i for i, lab in enumerate(LABELS)}


def label_term(label: str) -> int | None:
    """Term id of a B-/I- label, ``None`` for O."""
    if label == "O":
        return None
    prefix, _, num = label.partition("-")
    if prefix not in ("B", "I") or not num.isdigit() or int(num) >= NUM_TERMS:
        raise ValueError(f"invalid BIO label {label!r}")
    return int(num)


def is_valid_transition(prev: str | None, cur: str) -> bool:
    """I-t may only follow B-t or I-t; everything else is free."""
    if not cur.startswith("I-"):
        return True
    if prev is None or prev == "O":
        return False
    return prev[2:] == cur[2:]


def is_valid_sequence(labels: list[str]) -> bool:
    prev = None
    for lab in labels:
        if lab not in LABEL_INDEX or not is_valid_transition(prev, lab):
            return False
        prev = lab
    return True
