"""How a conditional grant is checked.

License A lets you modify the code as long as you state your changes.
License B forbids stating changes (a contrived clause, but it makes the
effect visible). Each condition is evaluated twice: once assuming it holds
(the antecedent becomes an obligation) and once assuming it does not (the
conditional right is withdrawn). Two component licenses only clash if both
cases clash; a project license clashes if either case does.

Run:  python3 demos/03_conditions.py
"""

from licscan.compat import ConcreteSummary, DefaultPolicy, condi_check, detect
from licscan.extraction import Role
from licscan.terms import NUM_TERMS, Attitude, term

MODIFY, STATE_CHANGES = term("Modify").id, term("State Changes").id


def license(ref: str, role: Role, attitudes: dict, conditions=()) -> ConcreteSummary:
    policy = DefaultPolicy()
    att = [attitudes.get(k, policy.for_term(k)) for k in range(NUM_TERMS)]
    return ConcreteSummary(ref, role, tuple(att), conditions=tuple(conditions))


def report(a: ConcreteSummary, b: ConcreteSummary) -> None:
    print(f"{a.ref} ({a.role.value}) vs {b.ref} ({b.role.value})")
    for rp in condi_check(a, b):
        print(f"    condition {term(rp.antecedent).name} -> {term(rp.consequent).name}:"
              f" clash if it holds {rp.r_true}, clash if it fails {rp.r_false}")
    verdict = detect(a, b)
    print(f"    verdict: {'incompatible' if verdict.incompatible else 'compatible'}")
    for c in verdict.conflicts:
        print(f"      {term(c.term).name}: {c.left.attitude.value} vs {c.right.attitude.value} ({c.condition_case.value})")
    print()


def main() -> None:
    b = license("B", Role.CL, {STATE_CHANGES: Attitude.CANNOT})
    for role in (Role.CL, Role.PL):
        a = license("A", role, {MODIFY: Attitude.CAN}, [(STATE_CHANGES, MODIFY)])
        report(a, b)


if __name__ == "__main__":
    main()
