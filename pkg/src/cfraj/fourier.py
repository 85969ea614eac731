"""Fourier transforms of the constructed measures, with rigorous errors.

Both estimators evaluate e(xi x) = exp(2 pi i xi x) at cylinder
midpoints; replacing the integrand by its midpoint value costs at most
pi |xi| width per cylinder (mean value theorem), which is exactly the
error bound carried on every estimate. Negative frequencies are served
by conjugating the positive-frequency estimate, so conjugate symmetry
holds to the last bit.

Phases are folded modulo 1 in exact rational arithmetic whenever the
frequency is an int or Fraction and large enough for float products to
lose the fractional part.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__
from .blocks import NuMeasure, cylinder_geometry, product_convergent_matrices
from .cascade import (
    ALPHA_DEFAULT,
    LambdaMeasure,
    _sample_with_chain,
    split_typ_exc,
)
from .errors import BudgetExceeded, DepthExceeded, PreconditionViolated
from .rules import rho_value

Measure = Union[NuMeasure, LambdaMeasure]

CYLINDER_BUDGET = 10**6
# above this, float(xi) * float(mid) has absolute error comparable to 1
EXACT_FOLD_THRESHOLD = 2**40

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FourierEstimate:
    xi: Union[int, float, Fraction]
    value: complex
    err_bound: float
    method: str
    depth: int
    samples: Optional[int] = None


def _fold_phase(xi, pn: int, pp: int, q: int, qp: int) -> float:
    """Fractional part of xi * midpoint, exact when xi is rational."""
    num = 2 * pn * q + pn * qp + pp * q
    den = 2 * q * (q + qp)
    if isinstance(xi, (int, Fraction)):
        ph = Fraction(xi) * Fraction(num, den)
        return float(ph - math.floor(ph))
    return (xi * (num / den)) % 1.0


def _unit(frac: float) -> complex:
    a = TWO_PI * frac
    return complex(math.cos(a), math.sin(a))


def _xi_times(xi, frac: Fraction) -> float:
    """float(xi * frac) without overflowing intermediate floats."""
    if isinstance(xi, (int, Fraction)):
        return float(Fraction(xi) * frac)
    return xi * float(frac)


# --------------------------------------------------------------- leaves


@dataclass(frozen=True)
class _Leaf:
    mass: Fraction
    pn: int
    pp: int
    q: int
    qp: int
    chain: tuple[int, ...]

    def phase(self, xi) -> float:
        return _fold_phase(xi, self.pn, self.pp, self.q, self.qp)

    @property
    def width(self) -> Fraction:
        return Fraction(1, self.q * (self.q + self.qp))


def _lambda_leaves(lm: LambdaMeasure, depth: int,
                   budget: int = CYLINDER_BUDGET) -> list[_Leaf]:
    """Every positive-mass depth-block prefix, in lexicographic order."""
    if depth < 1:
        raise PreconditionViolated("depth must be >= 1")
    if depth > lm.horizon:
        raise DepthExceeded(f"depth {depth} beyond horizon {lm.horizon}")
    nu, sch = lm.nu, lm.schedule
    p, sdepth = sch.p, sch.depth
    s = len(nu.support)
    out: list[_Leaf] = []

    def emit(mass, q, qp, pn, pp, chain):
        if len(out) >= budget:
            raise BudgetExceeded(f"cylinder count exceeds budget {budget}")
        out.append(_Leaf(mass, pn, pp, q, qp, tuple(chain)))

    def walk(b, label, chain, seg_rank, mass, q, qp, pn, pp, dsum):
        while True:
            # order matters: a prefix ending exactly at i_label keeps
            # label unrefined, matching the classify walker
            if b == depth:
                emit(mass, q, qp, pn, pp, chain)
                return
            if label <= sdepth and b == sch.i[label - 1]:
                split = lm.stage_split(label)
                child = 2 * label + (0 if seg_rank < split.count else 1)
                chain = chain + [child]
                for _ in range(sch.r[label - 1]):
                    if b == depth:
                        break
                    for _j in range(p):
                        d = rho_value(lm.rule, q, dsum)
                        q, qp = d * q + qp, q
                        pn, pp = d * pn + pp, pn
                        dsum += d
                    b += 1
                label = child
                seg_rank = 0
                continue
            for idx in range(s):
                blk = nu.support[idx]
                q2, qp2, pn2, pp2, d2 = q, qp, pn, pp, dsum
                for d in blk:
                    q2, qp2 = d * q2 + qp2, q2
                    pn2, pp2 = d * pn2 + pp2, pn2
                    d2 += d
                walk(b + 1, label, chain, seg_rank * s + idx,
                     mass * nu.atom, q2, qp2, pn2, pp2, d2)
            return

    walk(0, 1, [1], 0, Fraction(1), 1, 0, 0, 1, 0)
    return out


def _sum_estimate(xi, terms) -> complex:
    """Fixed-order compensated sum of (weight, phase) contributions."""
    res = math.fsum(w * math.cos(TWO_PI * f) for w, f in terms)
    ims = math.fsum(w * math.sin(TWO_PI * f) for w, f in terms)
    return complex(res, ims)


def _leaf_value(xi, leaves) -> complex:
    return _sum_estimate(xi, [(float(lf.mass), lf.phase(xi)) for lf in leaves])


# summing mass * width as exact rationals is quadratic in the leaf count
# (denominators share no structure), so the error integral is accumulated
# in floats and inflated to stay an upper bound
_FLOAT_SLACK = 1.0 + 1e-9


def _leaf_mass_width(leaves) -> float:
    return math.fsum(
        float(lf.mass) * float(lf.width) for lf in leaves
    ) * _FLOAT_SLACK


# ------------------------------------------------------ cylinder method


def fourier_cylinder_sum(measure: Measure, xi, depth: int,
                         budget: int = CYLINDER_BUDGET) -> FourierEstimate:
    """Exact-decomposition estimate: sum of mass * e(xi mid) per cylinder.

    err_bound = sum of mass * pi |xi| width. At xi = 0 the value is the
    total mass exactly and the bound is zero.
    """
    if xi == 0:
        return FourierEstimate(xi=xi, value=complex(1.0), err_bound=0.0,
                               method="cylinder", depth=depth)
    if xi < 0:
        pos = fourier_cylinder_sum(measure, -xi, depth, budget)
        return FourierEstimate(xi=xi, value=pos.value.conjugate(),
                               err_bound=pos.err_bound,
                               method="cylinder", depth=depth)

    if isinstance(measure, LambdaMeasure):
        leaves = _lambda_leaves(measure, depth, budget)
        value = _leaf_value(xi, leaves)
        err = math.pi * float(xi) * _leaf_mass_width(leaves)
        return FourierEstimate(xi=xi, value=value, err_bound=err,
                               method="cylinder", depth=depth)

    nu = measure
    mats = product_convergent_matrices(nu, depth, budget)
    atom = nu.atom**depth
    if isinstance(xi, (int, Fraction)) and abs(xi) >= EXACT_FOLD_THRESHOLD:
        w = float(atom)
        pairs = (
            (w, _fold_phase(xi, int(m[1, 0]), int(m[1, 1]),
                            int(m[0, 0]), int(m[0, 1])))
            for m in mats
        )
        value = _sum_estimate(xi, list(pairs))
        widths = 1.0 / (mats[:, 0, 0].astype(float)
                        * (mats[:, 0, 0] + mats[:, 0, 1]).astype(float))
        err = math.pi * float(xi * atom) * float(widths.sum())
    else:
        mids, widths = cylinder_geometry(mats)
        phases = (float(xi) * mids) % 1.0
        vals = np.exp(2j * math.pi * phases)
        value = complex(float(atom) * vals.sum())
        err = math.pi * abs(float(xi)) * float(atom) * float(widths.sum())
    return FourierEstimate(xi=xi, value=value, err_bound=err,
                           method="cylinder", depth=depth)


# --------------------------------------------------- monte carlo method


def _min_block_continuant(nu: NuMeasure) -> int:
    best = None
    for blk in nu.support:
        q, qp = 1, 0
        for d in blk:
            q, qp = d * q + qp, q
        best = q if best is None else min(best, q)
    return best


def _width_ceiling(measure: Measure, depth: int) -> Fraction:
    """Sound upper bound for the width of any depth-level cylinder.

    Concatenation never shrinks a continuant product, so q is at least
    (min block continuant)^(number of typical blocks); forced blocks
    only count for >= 1.
    """
    if isinstance(measure, LambdaMeasure):
        kmin = _min_block_continuant(measure.nu)
        typical_floor = max(depth - sum(measure.schedule.r), 0)
        qmin = kmin**typical_floor
    else:
        qmin = _min_block_continuant(measure)**depth
    return Fraction(1, qmin * qmin)


def _nu_sample_matrices(nu: NuMeasure, samples: int, depth: int,
                        seed: int) -> np.ndarray:
    s = len(nu.support)
    base = np.empty((s, 2, 2), dtype=np.int64)
    for i, b in enumerate(nu.support):
        m = np.eye(2, dtype=np.int64)
        for d in b:
            m = m @ np.array([[d, 1], [1, 0]], dtype=np.int64)
        base[i] = m
    row_sum_max = int(base.sum(axis=2).max())
    if row_sum_max**depth >= 2**62:
        raise BudgetExceeded(
            f"depth-{depth} sampled continuants would overflow 64-bit integers"
        )
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, s, size=(samples, depth))
    mats = np.broadcast_to(np.eye(2, dtype=np.int64), (samples, 2, 2)).copy()
    for k in range(depth):
        mats = mats @ base[idx[:, k]]
    return mats


def _lambda_sample_leaves(lm: LambdaMeasure, samples: int, depth: int,
                          seed: int) -> list[_Leaf]:
    rng = random.Random(seed)
    out = []
    for _ in range(samples):
        blocks, chain = _sample_with_chain(lm, depth, rng)
        q, qp, pn, pp = 1, 0, 0, 1
        for blk in blocks:
            for d in blk:
                q, qp = d * q + qp, q
                pn, pp = d * pn + pp, pn
        out.append(_Leaf(Fraction(0), pn, pp, q, qp, chain))
    return out


def fourier_monte_carlo(measure: Measure, xi, samples: int, depth: int,
                        seed: int = 0) -> FourierEstimate:
    """Sampled estimate: mean of e(xi mid) over drawn depth-level paths.

    err_bound = 3 / sqrt(samples) + pi |xi| * (worst cylinder width at
    the depth); deterministic in the seed.
    """
    if samples < 1:
        raise PreconditionViolated("samples must be >= 1")
    if xi < 0:
        pos = fourier_monte_carlo(measure, -xi, samples, depth, seed)
        return FourierEstimate(xi=xi, value=pos.value.conjugate(),
                               err_bound=pos.err_bound, method="montecarlo",
                               depth=depth, samples=samples)
    stat = 3.0 / math.sqrt(samples)
    geo = math.pi * _xi_times(abs(xi), _width_ceiling(measure, depth))

    if isinstance(measure, LambdaMeasure):
        if depth > measure.horizon:
            raise DepthExceeded(
                f"depth {depth} beyond horizon {measure.horizon}"
            )
        leaves = _lambda_sample_leaves(measure, samples, depth, seed)
        if xi == 0:
            value = complex(1.0)
        else:
            w = 1.0 / samples
            value = _sum_estimate(xi, [(w, lf.phase(xi)) for lf in leaves])
    else:
        mats = _nu_sample_matrices(measure, samples, depth, seed)
        if xi == 0:
            value = complex(1.0)
        else:
            mids, _ = cylinder_geometry(mats)
            if isinstance(xi, (int, Fraction)) and abs(xi) >= EXACT_FOLD_THRESHOLD:
                w = 1.0 / samples
                pairs = [
                    (w, _fold_phase(xi, int(m[1, 0]), int(m[1, 1]),
                                    int(m[0, 0]), int(m[0, 1])))
                    for m in mats
                ]
                value = _sum_estimate(xi, pairs)
            else:
                phases = (float(xi) * mids) % 1.0
                value = complex(np.exp(2j * math.pi * phases).mean())
    return FourierEstimate(xi=xi, value=value, err_bound=stat + geo,
                           method="montecarlo", depth=depth, samples=samples)


# ------------------------------------------------------------ decay scan


@dataclass(frozen=True)
class DecayRow:
    xi: Union[int, float, Fraction]
    full: FourierEstimate
    typ: FourierEstimate
    n_index: int
    exc_tv: Fraction


@dataclass(frozen=True)
class DecayTable:
    rows: tuple[DecayRow, ...]
    method: str
    depth: int
    config: dict

    @property
    def config_hash(self) -> str:
        digest = hashlib.sha256(
            json.dumps(self.config, sort_keys=True,
                       separators=(",", ":")).encode()
        )
        return digest.hexdigest()[:16]

    def serialize_csv(self) -> str:
        lines = [
            f"# cfraj_version={__version__} config_hash={self.config_hash}",
            "xi,re,im,abs,err,n_index,exc_tv",
        ]
        for row in self.rows:
            v = row.full.value
            lines.append(
                f"{float(row.xi):.17g},{v.real:.17g},{v.imag:.17g},"
                f"{abs(v):.17g},{row.full.err_bound:.17g},"
                f"{row.n_index},{float(row.exc_tv):.17g}"
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str) -> None:
        tmp = f"{path}.tmp"
        with open(tmp, "w") as fh:
            fh.write(self.serialize_csv())
        os.replace(tmp, path)


def _scan_config(measure: Measure, xi_list, method, depth, samples, seed,
                 alpha) -> dict:
    if isinstance(measure, LambdaMeasure):
        mdoc = measure.config_doc()
    else:
        mdoc = measure.to_json_doc()
    return {
        "measure": mdoc,
        "method": method,
        "depth": depth,
        "samples": samples if method == "montecarlo" else None,
        "seed": seed if method == "montecarlo" else None,
        "alpha": str(Fraction(alpha)),
        "xi": [f"{float(x):.17g}" for x in xi_list],
    }


def decay_scan(measure: Measure, xi_list: Sequence, method: str, depth: int,
               *, samples: int = 20000, seed: int = 0,
               alpha=ALPHA_DEFAULT,
               budget: int = CYLINDER_BUDGET) -> DecayTable:
    """Per-frequency estimates with the typical/exceptional decomposition.

    One cylinder enumeration (or one sample draw) is shared by all
    frequencies, so a fixed seed gives a byte-reproducible table. For a
    plain product measure there is no exceptional part: n_index = 0 and
    exc_tv = 0 on every row.
    """
    if method not in ("cylinder", "montecarlo"):
        raise PreconditionViolated(f"unknown method {method!r}")
    xs = list(xi_list)
    if any(xs[k] >= xs[k + 1] for k in range(len(xs) - 1)):
        raise PreconditionViolated("xi_list must be strictly ascending")

    is_lambda = isinstance(measure, LambdaMeasure)
    if is_lambda:
        if method == "cylinder":
            leaves = _lambda_leaves(measure, depth, budget)
            mass_width = _leaf_mass_width(leaves)
        else:
            leaves = _lambda_sample_leaves(measure, samples, depth, seed)
    else:
        if method == "cylinder":
            mats = product_convergent_matrices(measure, depth, budget)
        else:
            mats = _nu_sample_matrices(measure, samples, depth, seed)
        mids, widths = cylinder_geometry(mats)
        atom = (float(measure.atom)**depth if method == "cylinder"
                else 1.0 / samples)
        err_geo_cyl = float(measure.atom)**depth * float(widths.sum())

    rows = []
    count = samples if method == "montecarlo" else None
    for xi in xs:
        if is_lambda:
            try:
                split = split_typ_exc(measure, abs(xi), alpha) if abs(xi) > 1 \
                    else None
            except PreconditionViolated:
                split = None
            if method == "cylinder":
                full_v = _leaf_value(xi, leaves) if xi != 0 else complex(1.0)
                err_full = math.pi * abs(float(xi)) * mass_width
                if split is None:
                    typ_v, err_typ = full_v, err_full
                else:
                    typ_leaves = [lf for lf in leaves
                                  if not split.is_exceptional(lf.chain)]
                    typ_v = _leaf_value(xi, typ_leaves) if xi != 0 \
                        else complex(float(sum(
                            (lf.mass for lf in typ_leaves), Fraction(0))))
                    err_typ = math.pi * abs(float(xi)) * _leaf_mass_width(
                        typ_leaves)
            else:
                w = 1.0 / samples
                geo = math.pi * _xi_times(abs(xi),
                                          _width_ceiling(measure, depth))
                err_full = 3.0 / math.sqrt(samples) + geo
                if xi == 0:
                    full_v = complex(1.0)
                else:
                    full_v = _sum_estimate(
                        xi, [(w, lf.phase(xi)) for lf in leaves])
                if split is None:
                    typ_v, err_typ = full_v, err_full
                else:
                    sel = [lf for lf in leaves
                           if not split.is_exceptional(lf.chain)]
                    typ_v = _sum_estimate(
                        xi, [(w, lf.phase(xi)) for lf in sel]) \
                        if xi != 0 else complex(len(sel) * w)
                    err_typ = err_full
            n_idx = split.n_index if split is not None else 0
            exc = split.exc_mass if split is not None else Fraction(0)
        else:
            if xi == 0:
                full_v, err_full = complex(1.0), (
                    0.0 if method == "cylinder" else 3.0 / math.sqrt(samples))
            else:
                phases = (float(xi) * mids) % 1.0
                vals = np.exp(2j * math.pi * phases)
                full_v = complex(atom * vals.sum())
                if method == "cylinder":
                    err_full = math.pi * abs(float(xi)) * err_geo_cyl
                else:
                    err_full = 3.0 / math.sqrt(samples) + math.pi * _xi_times(
                        abs(xi), _width_ceiling(measure, depth))
            typ_v, err_typ = full_v, err_full
            n_idx, exc = 0, Fraction(0)
        rows.append(DecayRow(
            xi=xi,
            full=FourierEstimate(xi=xi, value=full_v, err_bound=err_full,
                                 method=method, depth=depth, samples=count),
            typ=FourierEstimate(xi=xi, value=typ_v, err_bound=err_typ,
                                method=method, depth=depth, samples=count),
            n_index=n_idx,
            exc_tv=exc,
        ))
    cfg = _scan_config(measure, xs, method, depth, samples, seed, alpha)
    return DecayTable(rows=tuple(rows), method=method, depth=depth, config=cfg)


def decay_slope(table: DecayTable) -> float:
    """Least-squares slope of log |estimate| against log xi.

    Rows with xi <= 1 or a zero estimate are skipped.
    """
    xs, ys = [], []
    for row in table.rows:
        a = abs(row.full.value)
        if row.xi > 1 and a > 0:
            xs.append(math.log(float(row.xi)))
            ys.append(math.log(a))
    if len(xs) < 2:
        raise PreconditionViolated("need at least two usable rows for a fit")
    return float(np.polyfit(np.array(xs), np.array(ys), 1)[0])
