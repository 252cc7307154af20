from __future__ import annotations

import logging
from dataclasses import dataclass

from .hierarchy import TadTree, build_hierarchy
from .matrix import ContactMatrix, default_min_tad_bins
from .null import NullProvider
from .segment import ChangePoint, binary_segment, prune

log = logging.getLogger(__name__)

DEFAULT_ALPHA0 = 0.05
DEFAULT_ALPHA1 = 1e-5


@dataclass
class Detection:
    xi: int
    candidates: list[ChangePoint]
    boundaries: list[ChangePoint]
    tree: TadTree

    @property
    def positions(self) -> list[int]:
        return [c.position for c in self.boundaries]


def detect(
    matrix: ContactMatrix,
    null: NullProvider,
    xi: int | None = None,
    alpha0: float = DEFAULT_ALPHA0,
    alpha1: float = DEFAULT_ALPHA1,
    first_split: int | None = None,
) -> Detection:
    """Candidate search, pruning at ``alpha0`` and hierarchy merging at ``alpha1``."""
    if not 0 < alpha1 <= alpha0 < 1:
        raise ValueError("need 0 < alpha1 <= alpha0 < 1")
    if xi is None:
        xi = default_min_tad_bins(matrix.resolution)
    if matrix.n < 2 * xi:
        raise ValueError(
            f"matrix has {matrix.n} bins, fewer than twice the minimum TAD size {xi}"
        )
    candidates = binary_segment(matrix, xi, first_split=first_split)
    kept = prune(matrix, candidates, xi, alpha0, null)
    tree = build_hierarchy(matrix, kept, alpha1, null, xi)
    log.info(
        "%d candidates, %d boundaries, %d TADs", len(candidates), len(kept), len(tree.nodes())
    )
    return Detection(xi=xi, candidates=candidates, boundaries=tree.boundaries, tree=tree)
