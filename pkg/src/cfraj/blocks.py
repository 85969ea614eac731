"""Uniform block measures on continuant windows.

The measure lives on p-tuples of partial quotients over {1..N} whose
block continuant K (all p entries, no head-drop) satisfies
|log K - sigma| <= eps * sigma. Atoms are uniform. Window membership is
certified exactly: integer power comparisons when sigma is anchored as
log(m)/k, interval arithmetic otherwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iter_product
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AtomTooHeavy,
    BudgetExceeded,
    EmptyWindow,
    NotInSupport,
    PreconditionViolated,
)
from .numeric import LogFloat, cert_ln_ge, cert_ln_le, ln_fraction, ln_int
from .words import Word, continuant, continuant_pair

DEFAULT_ENUM_BUDGET = 10**7

Block = tuple[int, ...]


@dataclass(frozen=True)
class NuMeasure:
    n_bound: int
    p: int
    sigma: float
    eps_window: Fraction
    support: tuple[Block, ...]
    beta_achieved: float
    sigma_anchor: Optional[tuple[int, int]] = None

    @property
    def atom(self) -> Fraction:
        return Fraction(1, len(self.support))

    def __post_init__(self):
        object.__setattr__(self, "_index", {b: i for i, b in enumerate(self.support)})

    def block_index(self, block: Block) -> int:
        idx = self._index.get(tuple(block))
        if idx is None:
            raise NotInSupport(f"block {block} not in support", index=-1)
        return idx

    def __contains__(self, block) -> bool:
        return tuple(block) in self._index

    def to_json_doc(self) -> dict:
        return {
            "N": self.n_bound,
            "p": self.p,
            "sigma": self.sigma,
            "eps_window": f"{self.eps_window.numerator}/{self.eps_window.denominator}",
            "support": [list(b) for b in self.support],
            "beta_achieved": self.beta_achieved,
        }

    def serialize(self) -> str:
        return json.dumps(self.to_json_doc(), sort_keys=True)

    @classmethod
    def from_json_doc(cls, doc: dict) -> "NuMeasure":
        support = tuple(tuple(int(d) for d in b) for b in doc["support"])
        nu = cls(
            n_bound=int(doc["N"]),
            p=int(doc["p"]),
            sigma=float(doc["sigma"]),
            eps_window=Fraction(doc["eps_window"]),
            support=support,
            beta_achieved=float(doc["beta_achieved"]),
        )
        return nu


def _window_bounds(sigma: float, eps: Fraction,
                   anchor: Optional[tuple[int, int]]) -> tuple[Fraction, Fraction]:
    if anchor is not None:
        m, k = anchor
        # symbolic sigma = ln(m)/k; bounds returned only for float prefilter
        s = math.log(m) / k
    else:
        s = sigma
    s_frac = Fraction(s)
    return (1 - eps) * s_frac, (1 + eps) * s_frac


def _certify_in_window(k_val: int, sigma: float, eps: Fraction,
                       anchor: Optional[tuple[int, int]]) -> bool:
    """Exact decision of |ln K - sigma| <= eps * sigma."""
    if anchor is not None:
        m, kk = anchor
        a, b = eps.numerator, eps.denominator
        # ln K >= (1 - a/b) ln(m)/kk   <=>   K^(kk b) >= m^(b - a)
        lhs = k_val ** (kk * b)
        return m ** (b - a) <= lhs <= m ** (b + a)
    lo, hi = _window_bounds(sigma, eps, None)
    return cert_ln_ge(k_val, lo) and cert_ln_le(k_val, hi)


def _continuant_grids(n_bound: int, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays of shape (N,)*p holding K and K-minus-last for all tuples."""
    digits = np.arange(1, n_bound + 1, dtype=np.int64)
    q = digits.copy()
    qp = np.ones(n_bound, dtype=np.int64)
    for _ in range(p - 1):
        d = digits.reshape((1,) * q.ndim + (-1,))
        q_new = d * q[..., None] + qp[..., None]
        qp = np.broadcast_to(q[..., None], q_new.shape).copy()
        q = q_new
    return q, qp


def build_nu(n_bound: int, p: int, sigma: Optional[float], eps_window,
             *, sigma_anchor: Optional[tuple[int, int]] = None,
             budget: int = DEFAULT_ENUM_BUDGET) -> NuMeasure:
    """Uniform measure on the p-tuples inside the continuant window.

    sigma_anchor = (m, k) pins sigma = log(m)/k symbolically, making the
    window test a pure integer comparison. Without an anchor the float
    sigma is taken at its exact binary value and certified by interval
    arithmetic.
    """
    eps = Fraction(eps_window)
    if n_bound < 2 or p < 1:
        raise PreconditionViolated("need N >= 2 and p >= 1")
    if not (0 < eps < 1):
        raise PreconditionViolated("eps_window must be in (0, 1)")
    if sigma_anchor is not None:
        sigma = math.log(sigma_anchor[0]) / sigma_anchor[1]
    if sigma is None or sigma <= 0:
        raise PreconditionViolated("sigma must be positive")
    if n_bound**p > budget:
        raise BudgetExceeded(
            f"N^p = {n_bound}^{p} exceeds the enumeration budget {budget}"
        )

    k_grid, _ = _continuant_grids(n_bound, p)
    flat = k_grid.reshape(-1)
    lo, hi = _window_bounds(sigma, eps, sigma_anchor)
    logs = np.log(flat.astype(np.float64))
    mask = (logs >= float(lo) - 1e-9) & (logs <= float(hi) + 1e-9)
    candidates = np.nonzero(mask)[0]

    strides = [n_bound ** (p - 1 - j) for j in range(p)]
    support = []
    for idx in candidates:
        k_val = int(flat[idx])
        if not _certify_in_window(k_val, sigma, eps, sigma_anchor):
            continue
        rem = int(idx)
        tup = []
        for s in strides:
            tup.append(rem // s + 1)
            rem %= s
        support.append(tuple(tup))
    if not support:
        raise EmptyWindow(
            f"no {p}-tuple over [1,{n_bound}] has log-continuant within "
            f"{float(eps):.4g} of {sigma:.6g}"
        )
    support.sort()
    beta = ln_int(len(support)) / sigma
    return NuMeasure(
        n_bound=n_bound,
        p=p,
        sigma=sigma,
        eps_window=eps,
        support=tuple(support),
        beta_achieved=beta,
        sigma_anchor=sigma_anchor,
    )


def verify_window(nu: NuMeasure) -> bool:
    """Re-certify every support atom from scratch (not trusted from build)."""
    for block in nu.support:
        if not _certify_in_window(
            continuant(block), nu.sigma, nu.eps_window, nu.sigma_anchor
        ):
            return False
    return True


def median_log_continuant(n_bound: int, p: int, weighting: str = "lebesgue",
                          budget: int = DEFAULT_ENUM_BUDGET) -> tuple[float, tuple[int, int]]:
    """Median of the block log-continuant, with its integer anchor.

    "lebesgue" weights each tuple by its cylinder width (the probability
    that a uniformly random real starts with those partial quotients);
    "uniform" counts tuples equally. Returns (sigma, (K_med, 1)) so the
    window can be certified exactly.
    """
    if n_bound**p > budget:
        raise BudgetExceeded("enumeration budget exceeded")
    k_grid, kp_grid = _continuant_grids(n_bound, p)
    k = k_grid.reshape(-1).astype(np.float64)
    if weighting == "lebesgue":
        kp = kp_grid.reshape(-1).astype(np.float64)
        w = 1.0 / (k * (k + kp))
    elif weighting == "uniform":
        w = np.ones_like(k)
    else:
        raise PreconditionViolated(f"unknown weighting {weighting!r}")
    order = np.argsort(k, kind="stable")
    cum = np.cumsum(w[order])
    total = cum[-1]
    pos = int(np.searchsorted(cum, total / 2.0))
    k_med = int(k[order[min(pos, len(k) - 1)]])
    return math.log(k_med), (k_med, 1)


@dataclass(frozen=True)
class TopHalfSplit:
    level: int
    count: int
    mass: Fraction
    members: Optional[tuple[tuple[Block, ...], ...]]
    support_size: int

    def contains(self, blocks: Sequence[Block], nu: NuMeasure) -> bool:
        """Lexicographic rank test against the greedy cutoff."""
        if len(blocks) != self.level:
            raise PreconditionViolated(
                f"expected {self.level} blocks, got {len(blocks)}"
            )
        rank = 0
        for b in blocks:
            rank = rank * self.support_size + nu.block_index(b)
        return rank < self.count


def greedy_half(masses: Sequence[Fraction]) -> tuple[int, Fraction]:
    """Accumulate in the given order until mass >= 1/2 - max_atom/2.

    The stopping rule guarantees |mass - 1/2| <= max_atom / 2.
    """
    masses = [Fraction(m) for m in masses]
    if not masses:
        raise PreconditionViolated("no atoms")
    max_atom = max(masses)
    if max_atom > Fraction(1, 2):
        raise AtomTooHeavy(f"atom {max_atom} exceeds 1/2")
    threshold = Fraction(1, 2) - max_atom / 2
    acc = Fraction(0)
    for i, m in enumerate(masses):
        acc += m
        if acc >= threshold:
            return i + 1, acc
    return len(masses), acc


MATERIALIZE_LIMIT = 100_000


def top_half_split(nu: NuMeasure, j: int) -> TopHalfSplit:
    """Deterministic near-half subset of the j-fold product support.

    Equal atoms collapse the greedy scan to a closed-form count
    ceil((s^j - 1)/2), evaluated in exact big-integer arithmetic, so
    the split is available at levels where s^j is astronomically large.
    Members are materialized only for small products.
    """
    if j < 1:
        raise PreconditionViolated("level must be >= 1")
    s = len(nu.support)
    if s == 1:
        raise AtomTooHeavy("single-atom measure: product atom is 1 > 1/2")
    total = s**j
    count = (total - 1) // 2 + (1 if (total - 1) % 2 else 0)
    mass = Fraction(count, total)
    members = None
    if total <= MATERIALIZE_LIMIT:
        members = tuple(
            tup for _, tup in zip(range(count), iter_product(nu.support, repeat=j))
        )
    return TopHalfSplit(
        level=j, count=count, mass=mass, members=members, support_size=s
    )


def product_mass(nu: NuMeasure, blocks: Sequence[Block]) -> Fraction:
    for i, b in enumerate(blocks):
        if tuple(b) not in nu:
            raise NotInSupport(f"block {tuple(b)} at index {i} not in support", i)
    return nu.atom ** len(blocks)


def blocks_to_word(blocks: Sequence[Block]) -> Word:
    digits: list[int] = []
    for b in blocks:
        digits.extend(b)
    return Word(0, tuple(digits))


def qnu_exponent_check(nu: NuMeasure, blocks: Sequence[Block]) -> LogFloat:
    """log(product mass) / log q for the zero-head concatenation.

    Negative for every nonempty in-support list; a profile check passes
    when the ratio is at most -beta_prime.
    """
    if not blocks:
        raise PreconditionViolated("blocks must be nonempty")
    mass = product_mass(nu, blocks)
    q = continuant_pair(blocks_to_word(blocks)).q
    ratio = ln_fraction(mass) / ln_int(q)
    return LogFloat.from_float(ratio)


@dataclass(frozen=True)
class FrostmanScan:
    depth: int
    widths: tuple[float, ...]
    omega: tuple[float, ...]
    fitted_exponent: float


def product_convergent_matrices(nu: NuMeasure, depth: int,
                                budget: int = DEFAULT_ENUM_BUDGET) -> np.ndarray:
    """[[q, q'], [p, p']] for every depth-level word, head 0, C order.

    Row order matches lexicographic order over support-block sequences.
    """
    s = len(nu.support)
    if s**depth > budget:
        raise BudgetExceeded(f"{s}^{depth} cylinders exceed budget {budget}")
    base = np.empty((s, 2, 2), dtype=np.int64)
    for i, b in enumerate(nu.support):
        m = np.eye(2, dtype=np.int64)
        for d in b:
            m = m @ np.array([[d, 1], [1, 0]], dtype=np.int64)
        base[i] = m
    # entries of a product of nonnegative 2x2 matrices are bounded by
    # prod(row sums); keep everything inside int64
    row_sum_max = int(base.sum(axis=2).max())
    if row_sum_max**depth >= 2**62:
        raise BudgetExceeded(
            f"depth-{depth} continuants would overflow 64-bit integers"
        )
    mats = base
    for _ in range(depth - 1):
        mats = np.einsum("aij,bjk->abik", mats, base).reshape(-1, 2, 2)
    return mats


def cylinder_geometry(mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(midpoints, widths) as float arrays from convergent matrices."""
    q = mats[:, 0, 0].astype(np.float64)
    qp = mats[:, 0, 1].astype(np.float64)
    pn = mats[:, 1, 0].astype(np.float64)
    pp = mats[:, 1, 1].astype(np.float64)
    mids = (2 * pn * q + pn * qp + pp * q) / (2 * q * (q + qp))
    widths = 1.0 / (q * (q + qp))
    return mids, widths


def sliding_max_mass(mids_sorted: np.ndarray, atom_mass: float,
                     widths: Sequence[float]) -> list[float]:
    """Max captured mass of a width-u window, per width.

    A window captures an atom when the atom's midpoint lies inside it;
    left edges at atom midpoints suffice for the max.
    """
    out = []
    n = len(mids_sorted)
    idx = np.arange(n)
    for u in widths:
        right = np.searchsorted(mids_sorted, mids_sorted + float(u), side="right")
        out.append(float((right - idx).max()) * atom_mass)
    return out


def frostman_scan(nu: NuMeasure, depth: int, widths: Sequence[float],
                  budget: int = DEFAULT_ENUM_BUDGET) -> FrostmanScan:
    """Ball-mass growth scan of the depth-level product pushforward."""
    if depth < 1:
        raise PreconditionViolated("depth must be >= 1")
    mats = product_convergent_matrices(nu, depth, budget)
    mids, _ = cylinder_geometry(mats)
    mids = np.sort(mids)
    atom = 1.0 / float(len(nu.support)) ** depth
    widths_f = tuple(float(u) for u in widths)
    omega = sliding_max_mass(mids, atom, widths_f)
    log_u = np.log(np.array(widths_f))
    log_o = np.log(np.array(omega))
    fitted = float(np.polyfit(log_u, log_o, 1)[0]) if len(widths_f) >= 2 else float("nan")
    return FrostmanScan(
        depth=depth, widths=widths_f, omega=tuple(omega), fitted_exponent=fitted
    )
