"""Finite continued-fraction words and exact continuant arithmetic.

A word is an integer part (head, >= 0) plus a tuple of partial quotients
(tail, each >= 1). Denominator continuants follow the usual three-term
recurrence seeded (0, 1) over the tail only; the head enters numerators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import PreconditionViolated
from .numeric import LogFloat, guard_int, ln_fraction, ln_int


def continuant(entries: Sequence[int]) -> int:
    """K(entries): K() = 1, K(x) = x, K_i = a_i K_{i-1} + K_{i-2}."""
    prev, cur = 0, 1
    for a in entries:
        prev, cur = cur, a * cur + prev
    return cur


def continuant_pair_of(entries: Sequence[int]) -> tuple[int, int]:
    """(K(entries), K(entries without last)) in one pass."""
    # seeded so that an empty sequence gives (1, 0)
    prev, cur = 0, 1
    for a in entries:
        prev, cur = cur, a * cur + prev
    return cur, prev


@dataclass(frozen=True)
class Word:
    head: int
    tail: tuple[int, ...] = ()

    def __post_init__(self):
        if self.head < 0:
            raise PreconditionViolated(f"head must be >= 0, got {self.head}")
        for a in self.tail:
            if a < 1:
                raise PreconditionViolated(f"tail entries must be >= 1, got {a}")
        object.__setattr__(self, "tail", tuple(int(a) for a in self.tail))

    @property
    def length(self) -> int:
        return 1 + len(self.tail)

    def extend(self, digits: Iterable[int]) -> "Word":
        return Word(self.head, self.tail + tuple(digits))

    def digits(self) -> tuple[int, ...]:
        return (self.head,) + self.tail

    def serialize(self) -> str:
        return ",".join(str(d) for d in self.digits())

    @classmethod
    def parse(cls, text: str) -> "Word":
        parts = [int(tok) for tok in text.split(",") if tok.strip() != ""]
        if not parts:
            raise PreconditionViolated("empty word string")
        return cls(parts[0], tuple(parts[1:]))


@dataclass(frozen=True)
class ContinuantPair:
    q: int
    q_prev: int


@dataclass(frozen=True)
class CylinderInterval:
    lo: Fraction
    hi: Fraction
    parity: int

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2


def continuant_pair(w: Word) -> ContinuantPair:
    q, q_prev = continuant_pair_of(w.tail)
    guard_int(q, "continuant")
    return ContinuantPair(q, q_prev)


def _convergents(w: Word) -> tuple[int, int, int, int]:
    """(p, q, p_prev, q_prev) for the word, head included in numerators."""
    p_prev, p = 1, w.head
    q_prev, q = 0, 1
    for a in w.tail:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
    return p, q, p_prev, q_prev


def evaluate(w: Word) -> Fraction:
    """Value of the finite continued fraction as a reduced rational."""
    p, q, _, _ = _convergents(w)
    guard_int(q, "denominator")
    return Fraction(p, q)


def cylinder_interval(w: Word) -> CylinderInterval:
    """Interval spanned by all infinite expansions extending the word.

    Endpoints are p/q and (p+p')/(q+q'); orientation flips with each
    extra partial quotient. Words with an empty tail are rejected: the
    corresponding interval is a full unit interval keyed by the head
    alone, and callers should extend the word first.
    """
    if not w.tail:
        raise PreconditionViolated(
            "cylinder_interval needs at least one partial quotient"
        )
    p, q, p_prev, q_prev = _convergents(w)
    guard_int(q, "denominator")
    a = Fraction(p, q)
    b = Fraction(p + p_prev, q + q_prev)
    parity = 1 if a < b else -1
    lo, hi = (a, b) if parity == 1 else (b, a)
    return CylinderInterval(lo, hi, parity)


def continuant_identity_check(u: Sequence[int], v: Sequence[int]) -> bool:
    """K(u~v) == K(u) K(v) + K(u minus last) K(v minus first), exactly."""
    if not u or not v:
        raise PreconditionViolated("both sequences must be nonempty")
    joined = continuant(tuple(u) + tuple(v))
    return joined == continuant(u) * continuant(v) + continuant(
        u[:-1]
    ) * continuant(v[1:])


def joining_defect(a: Word, b: Word, n_bound: int) -> LogFloat:
    """log q(a~b) - log q(a) - log q(b), guaranteed in [0, log(2(N+1))].

    The words join by concatenating a's digits with all of b's entries:
    b's head becomes an ordinary partial quotient of the joined word, so
    it must lie in [1, n_bound]. q(b) keeps the head-drop convention.
    """
    if not (1 <= b.head <= n_bound):
        raise PreconditionViolated(
            f"joined first entry must be in [1, {n_bound}], got {b.head}"
        )
    joined_tail = a.tail + (b.head,) + b.tail
    k_join = continuant(joined_tail)
    k_a = continuant(a.tail)
    k_b = continuant(b.tail)
    guard_int(k_join, "joined continuant")
    # K(a~b) >= K(a) K(b) holds as an exact integer inequality, so the
    # sign is decided exactly and float rounding cannot push it negative.
    ratio = Fraction(k_join, k_a * k_b)
    if ratio == 1:
        return LogFloat(0, float("-inf"))
    defect = ln_fraction(ratio)
    if defect <= 0.0:
        defect = math.log1p(max(float(ratio - 1), 5e-324))
    return LogFloat.from_float(defect)
