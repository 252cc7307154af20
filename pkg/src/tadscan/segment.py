"""Top-down candidate search and reverse-order pruning.

A boundary at bin ``m`` means ``m`` is the last bin of the TAD on its left,
so the TADs cut by boundaries b1 < ... < bK are [1, b1], [b1+1, b2], ...,
[bK+1, n].
"""

from __future__ import annotations

import logging
from bisect import bisect_left
from collections import deque
from dataclasses import dataclass, replace

from .glr import admissible_splits, scan_window, sigma0_from_sums, z_m
from .matrix import ContactMatrix, window_sums

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChangePoint:
    position: int
    discovery_order: int
    z_value: float
    p_value: float = 1.0
    layer: int = 0


def binary_segment(matrix: ContactMatrix, xi: int, first_split: int | None = None):
    """Split diagonal blocks breadth-first until every block is smaller than 2*xi.

    Each scanned block contributes its argmax split, numbered in discovery
    order. ``first_split`` forces the first cut (it must be admissible for
    the whole matrix). Returns candidates sorted by position.
    """
    n = matrix.n
    if n < 2 * xi:
        return []
    found = []
    queue = deque([(1, n)])
    while queue:
        lo, hi = queue.popleft()
        if hi - lo + 1 < 2 * xi:
            continue
        sums = window_sums(matrix, lo, hi)
        if not found and first_split is not None:
            if first_split not in admissible_splits(lo, hi, xi):
                raise ValueError(f"forced first split {first_split} is not admissible")
            m = int(first_split)
            z = z_m(sums, m, sigma0_from_sums(sums))
        else:
            res = scan_window(matrix, lo, hi, xi, sums=sums)
            m, z = res.best_m, res.z_tilde
        found.append(ChangePoint(position=m, discovery_order=len(found) + 1, z_value=z))
        queue.append((lo, m))
        queue.append((m + 1, hi))
    return sorted(found, key=lambda c: c.position)


def boundary_test(matrix: ContactMatrix, left: int, position: int, right: int, xi: int, null):
    """Z and p-value for a boundary at ``position`` between neighbours ``left`` and ``right``.

    The window runs from ``left + 1`` to ``right``; ``left`` = 0 and
    ``right`` = n stand for the matrix ends.
    """
    lo, hi = left + 1, right
    sums = window_sums(matrix, lo, hi)
    z = z_m(sums, position, sigma0_from_sums(sums))
    return z, null.p_value(z, xi, hi - lo + 1)


def prune(matrix: ContactMatrix, candidates, xi: int, alpha0: float, null):
    """Drop candidates whose neighbour-window p-value exceeds ``alpha0``.

    Candidates are tested in reverse discovery order against the window
    spanned by their current neighbours; a removal takes effect at once. The
    sweep repeats until a full pass removes nothing, so every survivor's
    p-value is computed against its final neighbours.
    """
    alive = {c.position: c for c in candidates}
    positions = sorted(alive)
    sweeps = 0
    while True:
        sweeps += 1
        removed = False
        for cp in sorted(alive.values(), key=lambda c: -c.discovery_order):
            idx = bisect_left(positions, cp.position)
            left = positions[idx - 1] if idx > 0 else 0
            right = positions[idx + 1] if idx + 1 < len(positions) else matrix.n
            z, p = boundary_test(matrix, left, cp.position, right, xi, null)
            if p > alpha0:
                del positions[idx]
                del alive[cp.position]
                removed = True
            else:
                alive[cp.position] = replace(cp, z_value=z, p_value=p)
        if not removed:
            break
    log.debug("pruning kept %d of %d candidates in %d sweeps", len(alive), len(candidates), sweeps)
    return [alive[p] for p in positions]
