"""Boundary comparison between two samples with Fisher's combined p-value."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import stats

from .evaluate import match_positions
from .null import P_FLOOR

CONSERVED = "conserved"
CHANGED_A = "changed_in_a"
CHANGED_B = "changed_in_b"
UNCONFIRMED = "unconfirmed"  # co-localized but combined p not below the cutoff


@dataclass(frozen=True)
class BoundaryMatch:
    pos_a: int | None
    pos_b: int | None
    p_a: float | None
    p_b: float | None
    p_fisher: float | None
    classification: str


def fisher_combine(p1: float, p2: float) -> float:
    """Upper tail of chi-square(4) at -2 ln p1 - 2 ln p2.

    Floored at the smallest positive double so the result stays in (0, 1].
    """
    for p in (p1, p2):
        if not 0 < p <= 1:
            raise ValueError(f"p-values must lie in (0, 1], got {p}")
    stat = -2.0 * (math.log(p1) + math.log(p2))
    return max(float(stats.chi2.sf(stat, df=4)), P_FLOOR)


def match_and_classify(a, b, tol_bins: int = 2, conserved_alpha: float = 0.01):
    """Pair boundaries of two samples and label them.

    ``a`` and ``b`` are sequences of (position, p_value) sorted by position.
    Pairs within ``tol_bins`` are matched greedily, nearest first, ties to
    the smaller position; each boundary is used at most once.
    """
    a = list(a)
    b = list(b)
    pairs = match_positions([x[0] for x in a], [x[0] for x in b], tol_bins)
    out = []
    seen_a, seen_b = set(), set()
    for i, j in pairs:
        (pa, qa), (pb, qb) = a[i], b[j]
        pf = fisher_combine(qa, qb)
        label = CONSERVED if pf < conserved_alpha else UNCONFIRMED
        out.append(BoundaryMatch(pa, pb, qa, qb, pf, label))
        seen_a.add(i)
        seen_b.add(j)
    out += [BoundaryMatch(p, None, q, None, None, CHANGED_A) for i, (p, q) in enumerate(a) if i not in seen_a]
    out += [BoundaryMatch(None, p, None, q, None, CHANGED_B) for j, (p, q) in enumerate(b) if j not in seen_b]
    out.sort(key=lambda m: (m.pos_a if m.pos_a is not None else m.pos_b, m.pos_b is None))
    return out


def summary_counts(matches):
    counts = {CONSERVED: 0, UNCONFIRMED: 0, CHANGED_A: 0, CHANGED_B: 0}
    for m in matches:
        counts[m.classification] += 1
    counts["matched"] = counts[CONSERVED] + counts[UNCONFIRMED]
    return counts
