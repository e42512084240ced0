import pytest

from licscan.terms import (
    LABEL_INDEX, LABELS, NUM_LABELS, NUM_RIGHTS, NUM_TERMS, TERMS, Attitude, Category, is_right,
    is_valid_sequence, is_valid_transition, label_term, term,
)

# term names in id order
TERM_NAMES = [
    "Distribute", "Modify", "Commercial Use", "Relicense", "Hold Liable", "Use Patent Claims", "Sublicense",
    "Statically Link", "Private Use", "Use Trademark", "Place Warranty", "Include Copyright", "Include License",
    "Include Notice", "Disclose Source", "State Changes", "Include Original", "Give Credit", "Rename",
    "Contact Author", "Include Install Instructions", "Compensate for Damages", "Pay Above Use Threshold",
]


def test_table_matches_names_and_categories():
    assert NUM_TERMS == 23 and NUM_RIGHTS == 11
    assert [t.name for t in TERMS] == TERM_NAMES
    assert [t.id for t in TERMS] == list(range(23))
    assert all(t.category is (Category.RIGHT if t.id <= 10 else Category.OBLIGATION) for t in TERMS)
    assert all(is_right(k) == (k <= 10) for k in range(23))


def test_lookup_by_id_and_name():
    assert term(0).name == "Distribute"
    assert term("give credit").id == 17
    with pytest.raises(KeyError):
        term(23)
    with pytest.raises(KeyError):
        term("Fly")


def test_attitude_values():
    assert [a.value for a in Attitude] == ["CAN", "CANNOT", "MUST", "UNKNOWN"]


def test_label_alphabet():
    assert NUM_LABELS == 47 and len(set(LABELS)) == 47
    assert LABELS[0] == "O"
    assert {f"B-{k}" for k in range(23)} | {f"I-{k}" for k in range(23)} | {"O"} == set(LABELS)
    assert all(LABEL_INDEX[lab] == i for i, lab in enumerate(LABELS))
    assert label_term("O") is None and label_term("B-7") == 7 and label_term("I-22") == 22


@pytest.mark.parametrize("prev, cur, ok", [
    (None, "O", True), (None, "B-3", True), (None, "I-3", False),
    ("O", "I-3", False), ("B-3", "I-3", True), ("I-3", "I-3", True),
    ("B-3", "I-4", False), ("I-4", "B-3", True), ("B-3", "O", True),
])
def test_transitions(prev, cur, ok):
    assert is_valid_transition(prev, cur) is ok


def test_sequence_validity():
    assert is_valid_sequence(["B-0", "I-0", "O", "B-1"])
    assert is_valid_sequence([])
    assert not is_valid_sequence(["O", "I-0"])
    assert not is_valid_sequence(["B-0", "I-1"])
