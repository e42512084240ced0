"""Pairwise license compatibility from attitude summaries.

Absent terms are filled from a default policy, each term is checked against
the project-vs-component or component-vs-component matrix, and conditional
terms ("you can modify if you state changes") are evaluated under both the
condition holding and not holding.
"""

from __future__ import annotations

import enum
import itertools
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

from licscan.attitude import LicenseSummary
from licscan.extraction import LicenseInstance, Role
from licscan.terms import NUM_TERMS, Attitude, is_right

log = logging.getLogger(__name__)

CAN, CANNOT, MUST, UNKNOWN = Attitude.CAN, Attitude.CANNOT, Attitude.MUST, Attitude.UNKNOWN


class CompatError(Exception):
    pass


class UnknownAttitude(CompatError, ValueError):
    pass


class NoConditions(CompatError, ValueError):
    pass


class Rule(str, enum.Enum):
    PL_VS_CL = "PLvsCL"
    CL_VS_CL = "CLvsCL"


class ConditionCase(str, enum.Enum):
    UNCONDITIONAL = "Unconditional"
    TRUE = "ConditionTrue"
    FALSE = "ConditionFalse"
    BOTH = "BothCases"


@dataclass(frozen=True)
class DefaultPolicy:
    absent_right: Attitude = CANNOT
    absent_obligation: Attitude = CAN

    def __post_init__(self):
        for a in (self.absent_right, self.absent_obligation):
            if a not in (CAN, CANNOT):
                raise ValueError(f"default attitudes must be CAN or CANNOT, got {a}")

    def for_term(self, term_id: int) -> Attitude:
        return self.absent_right if is_right(term_id) else self.absent_obligation


# ------------------------------------------------------------------- matrices

_PL_CL_OK = frozenset({(CAN, CAN), (CANNOT, CAN), (CANNOT, CANNOT), (MUST, CAN), (MUST, MUST)})
_CL_CL_BAD = frozenset({(CANNOT, MUST), (MUST, CANNOT)})
_CONCRETE = (CAN, CANNOT, MUST)


def _check_concrete(*atts: Attitude) -> None:
    for a in atts:
        if a not in _CONCRETE:
            raise UnknownAttitude(f"attitude {a!r} must be CAN, CANNOT or MUST; fill defaults first")


def pair_ok_pl_cl(pl: Attitude, cl: Attitude) -> bool:
    """Can one follow the project license's attitude without breaking the component's?"""
    _check_concrete(pl, cl)
    return (pl, cl) in _PL_CL_OK


def pair_ok_cl_cl(a: Attitude, b: Attitude) -> bool:
    """Two component licenses clash only when one forbids what the other requires."""
    _check_concrete(a, b)
    return (a, b) not in _CL_CL_BAD


# ---------------------------------------------------------------- summaries


@dataclass(frozen=True)
class ConcreteSummary:
    """Default-filled attitudes of one license, plus its conditions as term pairs."""

    ref: str
    role: Role
    attitudes: tuple[Attitude, ...]
    defaulted: frozenset[int] = frozenset()
    conditions: tuple[tuple[int, int], ...] = ()  # (antecedent term, consequent term)
    policy: DefaultPolicy = DefaultPolicy()

    def __post_init__(self):
        if len(self.attitudes) != NUM_TERMS:
            raise ValueError(f"need {NUM_TERMS} attitudes")
        _check_concrete(*self.attitudes)

    def with_attitudes(self, updates: dict[int, Attitude]) -> ConcreteSummary:
        att = list(self.attitudes)
        defaulted = set(self.defaulted)
        for k, v in updates.items():
            att[k] = v
            defaulted.discard(k)
        return ConcreteSummary(self.ref, self.role, tuple(att), frozenset(defaulted), self.conditions, self.policy)


def license_ref(instance: LicenseInstance | None) -> str:
    if instance is None:
        return "<text>"
    ref = f"{instance.origin} [{instance.kind.value}]"
    return f"{ref} {instance.spdx_id}" if instance.spdx_id else ref


def default_fill(summary: LicenseSummary | ConcreteSummary, policy: DefaultPolicy = DefaultPolicy(),
                 ref: str | None = None, role: Role | None = None) -> ConcreteSummary:
    """Replace UNKNOWN attitudes: rights get ``absent_right``, obligations ``absent_obligation``."""
    if isinstance(summary, ConcreteSummary):
        return summary  # already concrete; filling again changes nothing
    att = []
    defaulted = set()
    for k, a in enumerate(summary.attitudes):
        if a is UNKNOWN:
            att.append(policy.for_term(k))
            defaulted.add(k)
        else:
            att.append(a)
    conds = tuple(dict.fromkeys((c.antecedent.term, c.consequent.term) for c in summary.conditions))
    inst = summary.license
    return ConcreteSummary(
        ref if ref is not None else license_ref(inst),
        role if role is not None else (inst.role if inst is not None else Role.CL),
        tuple(att), frozenset(defaulted), conds, policy,
    )


# ------------------------------------------------------------------ checking


@dataclass(frozen=True)
class Side:
    ref: str
    attitude: Attitude
    defaulted: bool = False


@dataclass(frozen=True)
class ConflictRecord:
    term: int
    left: Side
    right: Side
    rule: Rule
    condition_case: ConditionCase = ConditionCase.UNCONDITIONAL

    def __post_init__(self):
        ok = pair_ok_pl_cl if self.rule is Rule.PL_VS_CL else pair_ok_cl_cl
        if ok(self.left.attitude, self.right.attitude):
            raise ValueError(f"{self.left.attitude.value}/{self.right.attitude.value} is not a conflict under {self.rule.value}")


@dataclass(frozen=True)
class ResultPair:
    r_true: bool
    r_false: bool
    owner: str = ""
    antecedent: int = -1
    consequent: int = -1


@dataclass
class Verdict:
    incompatible: bool
    conflicts: list[ConflictRecord]
    result_pairs: list[ResultPair] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _orient(l1: ConcreteSummary, l2: ConcreteSummary, roles: tuple[Role, Role] | None):
    """Put a project license on the left and pick the matrix."""
    r1, r2 = roles if roles is not None else (l1.role, l2.role)
    if r1 is Role.PL and r2 is Role.PL:
        return l1, l2, Rule.CL_VS_CL, True
    if r2 is Role.PL:
        return l2, l1, Rule.PL_VS_CL, False
    if r1 is Role.PL:
        return l1, l2, Rule.PL_VS_CL, False
    return l1, l2, Rule.CL_VS_CL, False


def check_incomp(l1: ConcreteSummary, l2: ConcreteSummary, roles: tuple[Role, Role] | None = None,
                 terms: Sequence[int] | None = None,
                 case: ConditionCase = ConditionCase.UNCONDITIONAL) -> list[ConflictRecord]:
    """One record per term whose attitudes the governing matrix rejects."""
    left, right, rule, _ = _orient(l1, l2, roles)
    ok = pair_ok_pl_cl if rule is Rule.PL_VS_CL else pair_ok_cl_cl
    out = []
    for k in range(NUM_TERMS) if terms is None else sorted(set(terms)):
        a, b = left.attitudes[k], right.attitudes[k]
        if not ok(a, b):
            out.append(ConflictRecord(
                k, Side(left.ref, a, k in left.defaulted), Side(right.ref, b, k in right.defaulted), rule, case,
            ))
    return out


def _conditions(l1: ConcreteSummary, l2: ConcreteSummary) -> list[tuple[int, int, int]]:
    """(owner 0/1, antecedent, consequent) in condition order, l1's first."""
    return [(0, a, c) for a, c in l1.conditions] + [(1, a, c) for a, c in l2.conditions]


def _case_summaries(l1, l2, owner: int, a: int, c: int, holds: bool):
    target = (l1, l2)[owner]
    if holds:
        updated = target.with_attitudes({a: MUST})
    else:
        # the consequent is lost and the condition term falls back to its default
        updated = target.with_attitudes({a: target.policy.for_term(a), c: CANNOT})
    return (updated, l2) if owner == 0 else (l1, updated)


def _condi_records(l1, l2, roles) -> list[tuple[ResultPair, list[ConflictRecord], list[ConflictRecord]]]:
    out = []
    for owner, a, c in _conditions(l1, l2):
        t1, t2 = _case_summaries(l1, l2, owner, a, c, True)
        f1, f2 = _case_summaries(l1, l2, owner, a, c, False)
        rec_t = check_incomp(t1, t2, roles, (a, c), ConditionCase.TRUE)
        rec_f = check_incomp(f1, f2, roles, (a, c), ConditionCase.FALSE)
        ref = (l1, l2)[owner].ref
        out.append((ResultPair(bool(rec_t), bool(rec_f), ref, a, c), rec_t, rec_f))
    return out


def condi_check(l1: ConcreteSummary, l2: ConcreteSummary, roles: tuple[Role, Role] | None = None) -> list[ResultPair]:
    """Incompatibility under each condition assumed true, then false."""
    if not l1.conditions and not l2.conditions:
        raise NoConditions("neither license carries a condition")
    return [rp for rp, _, _ in _condi_records(l1, l2, roles)]


def detect(l1: ConcreteSummary, l2: ConcreteSummary, roles: tuple[Role, Role] | None = None) -> Verdict:
    """Verdict for one license pair.

    Terms outside every condition are checked directly. Between two component
    licenses a condition makes the pair incompatible only if both of its cases
    conflict; once a project license is involved, either case suffices.
    """
    _, _, rule, both_pl = _orient(l1, l2, roles)
    warnings = []
    if both_pl:
        warnings.append(f"two project licenses ({l1.ref}, {l2.ref}) checked with the component matrix")
    conds = _conditions(l1, l2)
    cond_terms = {t for _, a, c in conds for t in (a, c)}
    plain = [k for k in range(NUM_TERMS) if k not in cond_terms]
    conflicts = check_incomp(l1, l2, roles, plain)
    pairs = []
    if conds:
        for rp, rec_t, rec_f in _condi_records(l1, l2, roles):
            pairs.append(rp)
            if rule is Rule.CL_VS_CL:
                if rp.r_true and rp.r_false:
                    conflicts += [
                        ConflictRecord(r.term, r.left, r.right, r.rule, ConditionCase.BOTH) for r in rec_t + rec_f
                    ]
            else:
                conflicts += rec_t + rec_f
    conflicts = list(dict.fromkeys(conflicts))
    return Verdict(bool(conflicts), conflicts, pairs, warnings)


# ------------------------------------------------------------------- projects


@dataclass
class PairVerdict:
    left: str
    right: str
    rule: Rule
    verdict: Verdict


@dataclass
class ProjectReport:
    project: str
    pairs_checked: int
    conflicts: list[ConflictRecord]
    incompatible: bool
    summaries: list[LicenseSummary]
    concrete: list[ConcreteSummary] = field(default_factory=list)
    pairs: list[PairVerdict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.incompatible != bool(self.conflicts):
            raise ValueError("incompatible must be true exactly when conflicts exist")


def _sort_key(s: LicenseSummary):
    inst = s.license
    if inst is None:
        return (1, "", "", "")
    return (0 if inst.role is Role.PL else 1, inst.origin, inst.kind.value, inst.text)


def analyze_project(project: str, summaries: Sequence[LicenseSummary],
                    policy: DefaultPolicy = DefaultPolicy()) -> ProjectReport:
    """Check every project-vs-component pair and every unordered component pair."""
    ordered = sorted(summaries, key=_sort_key)
    concrete = [default_fill(s, policy) for s in ordered]
    pls = [c for c in concrete if c.role is Role.PL]
    cls = [c for c in concrete if c.role is not Role.PL]
    warnings = []
    todo: list[tuple[ConcreteSummary, ConcreteSummary]] = []
    todo += list(itertools.combinations(pls, 2))
    todo += [(p, c) for p in pls for c in cls]
    todo += list(itertools.combinations(cls, 2))
    pair_results = []
    conflicts: list[ConflictRecord] = []
    for a, b in todo:
        v = detect(a, b)
        warnings.extend(v.warnings)
        left, right, rule, _ = _orient(a, b, None)
        pair_results.append(PairVerdict(left.ref, right.ref, rule, v))
        conflicts.extend(v.conflicts)
    conflicts.sort(key=lambda r: (r.left.ref, r.right.ref, r.term, r.condition_case.value))
    return ProjectReport(project, len(todo), conflicts, bool(conflicts), list(ordered), concrete, pair_results, warnings)
