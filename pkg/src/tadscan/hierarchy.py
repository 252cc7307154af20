"""Bottom-up merging of neighbouring TADs into a hierarchy.

Starting from the TADs cut by the pruned boundaries, neighbouring blocks
whose inner boundary is weak (p > alpha1) are merged pass by pass. A
merged boundary gets layer = merge depth of the block it creates (1 for a
merge of two leaves); boundaries never merged keep layer 0 and separate
root TADs. The merges are recorded as a binary tree whose roots have order 1.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

from .matrix import ContactMatrix
from .segment import ChangePoint, boundary_test


@dataclass(eq=False)
class TadNode:
    start: int
    end: int
    order: int = 1
    children: list["TadNode"] = field(default_factory=list)
    height: int = 0  # merges below this node; 0 for leaves

    @property
    def size(self) -> int:
        return self.end - self.start + 1

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(eq=False)
class TadTree:
    n: int
    roots: list[TadNode]
    boundaries: list[ChangePoint] = field(default_factory=list)

    def nodes(self):
        """All TADs, parents before children, left to right within an order."""
        out = []
        level = list(self.roots)
        while level:
            out.extend(level)
            level = [c for node in level for c in node.children]
        return sorted(out, key=lambda t: (t.order, t.start))

    def leaves(self):
        return sorted((t for t in self.nodes() if t.is_leaf), key=lambda t: t.start)

    @property
    def depth(self) -> int:
        return max((t.order for t in self.nodes()), default=0)

    def partition(self, order: int) -> np.ndarray:
        """Cluster label per bin (0-based array of length n) at the given order.

        Each bin goes to the deepest TAD of order <= ``order`` containing it,
        so leaves of shallower subtrees keep their own cluster.
        """
        labels = np.full(self.n, -1, dtype=np.int64)
        for label, node in enumerate(self.nodes()):
            if node.order <= order:
                labels[node.start - 1 : node.end] = label
        return labels


def _assign_orders(roots):
    stack = [(r, 1) for r in roots]
    while stack:
        node, order = stack.pop()
        node.order = order
        stack.extend((c, order + 1) for c in node.children)


def build_hierarchy(
    matrix: ContactMatrix,
    boundaries,
    alpha1: float,
    null,
    xi: int,
) -> TadTree:
    """Merge weak neighbours bottom-up and return the TAD tree.

    Each pass ranks the current inner boundaries by p-value (descending,
    ties by position) and merges a boundary's two blocks when p > alpha1 and
    neither block was merged earlier in the same pass. Boundaries next to a
    new block are re-tested on the window made of their two flanking blocks.
    Passes stop when no inner boundary has p > alpha1.
    """
    boundaries = sorted(boundaries, key=lambda c: c.position)
    cuts = [0] + [c.position for c in boundaries] + [matrix.n]
    blocks = [TadNode(start=a + 1, end=b) for a, b in itertools.pairwise(cuts)]
    layers = {c.position: 0 for c in boundaries}

    def test(i):
        left, right = blocks[i], blocks[i + 1]
        _, p = boundary_test(matrix, left.start - 1, left.end, right.end, xi, null)
        return p

    pvals = [test(i) for i in range(len(blocks) - 1)]
    while pvals and max(pvals) > alpha1:
        ranked = sorted(
            (i for i, p in enumerate(pvals) if p > alpha1),
            key=lambda i: (-pvals[i], blocks[i].end),
        )
        taken = set()
        merges = []
        for i in ranked:
            if i in taken or i + 1 in taken:
                continue
            taken.update((i, i + 1))
            merges.append(i)
        for i in sorted(merges, reverse=True):
            left, right = blocks[i], blocks[i + 1]
            parent = TadNode(
                start=left.start,
                end=right.end,
                children=[left, right],
                height=max(left.height, right.height) + 1,
            )
            layers[left.end] = parent.height
            blocks[i : i + 2] = [parent]
            del pvals[i]
            # boundaries now touching the merged block need re-testing
            if i > 0:
                pvals[i - 1] = None
            if i < len(pvals):
                pvals[i] = None
        pvals = [test(i) if p is None else p for i, p in enumerate(pvals)]

    _assign_orders(blocks)
    labelled = [replace(c, layer=layers[c.position]) for c in boundaries]
    return TadTree(n=matrix.n, roots=blocks, boundaries=labelled)


def tree_from_levels(n: int, positions, levels) -> TadTree:
    """Nested tree where a boundary of level L cuts TADs of order L and deeper.

    Used for ground truth: level-1 boundaries separate roots, level-2
    boundaries split those roots into order-2 children, and so on. A TAD
    with no boundary of the next level inside stays a leaf.
    """
    pairs = sorted(zip(positions, levels))

    def build(start, end, level):
        inner = [p for p, lv in pairs if lv == level and start <= p < end]
        if not inner:
            return None
        cuts = [start - 1] + inner + [end]
        nodes = []
        for a, b in itertools.pairwise(cuts):
            node = TadNode(start=a + 1, end=b)
            node.children = build(a + 1, b, level + 1) or []
            nodes.append(node)
        return nodes

    roots = build(1, n, 1) or [TadNode(start=1, end=n)]
    _assign_orders(roots)
    bps = [ChangePoint(position=p, discovery_order=i + 1, z_value=0.0, layer=lv) for i, (p, lv) in enumerate(pairs)]
    return TadTree(n=n, roots=roots, boundaries=bps)


def order_distribution(tree: TadTree) -> dict[int, int]:
    """Number of TADs of each order."""
    return dict(sorted(Counter(t.order for t in tree.nodes()).items()))


def order_percentages(tree: TadTree) -> dict[int, float]:
    counts = order_distribution(tree)
    total = sum(counts.values())
    return {k: 100.0 * v / total for k, v in counts.items()}
