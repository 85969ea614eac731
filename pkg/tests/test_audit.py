from fractions import Fraction

import pytest

from cfraj.audit import (
    ENTRY_ORDER,
    REFERENCE_ALPHA,
    exponent_audit,
    format_audit,
)
from cfraj.errors import PreconditionViolated


def test_reference_alpha_recomputed_column():
    audit = exponent_audit()
    assert audit.alpha == Fraction(50, 358)
    got = {k: r.recomputed for k, r in audit.entries.items()}
    assert got == {
        "deriv_sup": Fraction(259, 358),
        "l2_mass": Fraction(-97, 358),
        "sum_shared_q": Fraction(-200, 358),
        "sum_distinct_q": Fraction(-97, 358),
        "sum_diagonal": Fraction(-97, 358),
        "decay": Fraction(-8, 895),
    }


def test_reference_alpha_recorded_column_and_flags():
    audit = exponent_audit(REFERENCE_ALPHA)
    rec = {k: r.recorded for k, r in audit.entries.items()}
    assert rec == {
        "deriv_sup": Fraction(244, 358),
        "l2_mass": Fraction(-99, 358),
        "sum_shared_q": Fraction(-200, 358),
        "sum_distinct_q": Fraction(-97, 358),
        "sum_diagonal": Fraction(-97, 358),
        "decay": Fraction(-1, 100),
    }
    assert audit.flags == ("deriv_sup", "l2_mass", "decay")
    assert not audit.entries["sum_distinct_q"].flagged
    assert not audit.entries["sum_diagonal"].flagged


def test_internal_consistency_across_alphas():
    for alpha in (Fraction(1, 100), Fraction(1, 10), Fraction(50, 358),
                  Fraction(3, 10)):
        audit = exponent_audit(alpha)
        sums = [audit.entries[k].recomputed
                for k in ("sum_shared_q", "sum_distinct_q", "sum_diagonal")]
        assert audit.entries["l2_mass"].recomputed == max(sums)


def test_hand_recomputation_at_quarter():
    audit = exponent_audit(Fraction(1, 4))
    e = {k: r.recomputed for k, r in audit.entries.items()}
    assert e["sum_shared_q"] == Fraction(-21, 100)
    assert e["sum_distinct_q"] == Fraction(-9, 100)
    assert e["sum_diagonal"] == Fraction(-97, 200)
    assert e["l2_mass"] == Fraction(-9, 100)
    assert e["deriv_sup"] == Fraction(101, 200)
    assert e["decay"] == Fraction(47, 2000)
    assert all(r.recorded is None for r in audit.entries.values())
    assert audit.flags == ()


def test_small_alpha_diagonal_dominates():
    audit = exponent_audit(Fraction(1, 100))
    assert audit.entries["l2_mass"].recomputed == \
        audit.entries["sum_diagonal"].recomputed == Fraction(-97, 5000)


def test_domain_endpoints():
    with pytest.raises(PreconditionViolated):
        exponent_audit(0)
    with pytest.raises(PreconditionViolated):
        exponent_audit(Fraction(-1, 10))
    with pytest.raises(PreconditionViolated):
        exponent_audit(Fraction(100, 328))
    just_inside = Fraction(100, 328) - Fraction(1, 10**9)
    audit = exponent_audit(just_inside)
    assert audit.entries["sum_distinct_q"].recomputed < 0


def test_entry_order_stable():
    audit = exponent_audit()
    assert tuple(audit.entries) == ENTRY_ORDER == (
        "deriv_sup", "l2_mass", "sum_shared_q", "sum_distinct_q",
        "sum_diagonal", "decay")


def test_format_table():
    text = format_audit(exponent_audit())
    lines = text.splitlines()
    assert len(lines) == 8
    assert "alpha = 25/179" in lines[0]
    assert "recorded" in lines[1] and "recomputed" in lines[1]
    flagged = [ln for ln in lines if ln.rstrip().endswith("*")]
    assert len(flagged) == 3
    assert any("-97/358" in ln for ln in lines)
    generic = format_audit(exponent_audit(Fraction(1, 10)))
    assert generic.count(" -") >= 6
