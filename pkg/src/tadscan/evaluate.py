"""Scoring detected boundaries and hierarchies against ground truth."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Scorecard:
    tpr: float
    fdr: float
    k_diff: int
    b_k: dict[int, float] = field(default_factory=dict)
    b_k_control: dict[int, float] = field(default_factory=dict)


def match_positions(a, b, tol: int):
    """Greedy nearest-first one-to-one matching of two sorted position lists.

    Candidate pairs within ``tol`` are accepted in order of distance, then
    smaller ``a`` position, then smaller ``b`` position. Returns a list of
    (index_in_a, index_in_b).
    """
    a = list(a)
    b = list(b)
    pairs = []
    j0 = 0
    for i, x in enumerate(a):
        while j0 < len(b) and b[j0] < x - tol:
            j0 += 1
        j = j0
        while j < len(b) and b[j] <= x + tol:
            pairs.append((abs(x - b[j]), x, b[j], i, j))
            j += 1
    pairs.sort()
    used_a, used_b, out = set(), set(), []
    for _, _, _, i, j in pairs:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        out.append((i, j))
    return sorted(out)


def score_boundaries(detected, truth, tol_bins: int = 1):
    """(tpr, fdr, k_diff) with one-to-one matching within ``tol_bins``."""
    matched = len(match_positions(truth, detected, tol_bins))
    tpr = matched / len(truth) if truth else 1.0
    fdr = (len(detected) - matched) / len(detected) if detected else 0.0
    return tpr, fdr, len(detected) - len(truth)


def _pair_counts(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("partitions cover different universes")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    n = a.size
    m = float((table**2).sum() - n)
    p = float((table.sum(axis=1) ** 2).sum() - n)
    q = float((table.sum(axis=0) ** 2).sum() - n)
    return m, p, q


def fowlkes_mallows(partition_a, partition_b) -> float:
    """Fowlkes-Mallows index of two label arrays over the same items.

    Two all-singleton partitions agree perfectly (1.0); if exactly one side
    has no co-clustered pair the index is 0.
    """
    m, p, q = _pair_counts(partition_a, partition_b)
    if p == 0 and q == 0:
        return 1.0
    if p == 0 or q == 0:
        return 0.0
    return m / np.sqrt(p * q)


def chance_fowlkes_mallows(partition_a, partition_b) -> float:
    """Expected index when the items of ``partition_a`` are randomly permuted."""
    _, p, q = _pair_counts(partition_a, partition_b)
    n = np.asarray(partition_a).size
    pairs = n * (n - 1)
    if p == 0 or q == 0:
        return 0.0
    return float(np.sqrt(p * q) / pairs)


def relabel_control(detected_partitions, truth_partitions, trials: int = 1000, seed=0):
    """Mean index per level after randomly reassigning detected labels to items.

    Both arguments map level -> label array. Each trial permutes the
    detected label array (which items share a cluster), keeping cluster
    sizes. ``trials=0`` returns the unshuffled indices.
    """
    rng = np.random.default_rng(seed)
    out = {}
    for level in sorted(truth_partitions):
        det = np.asarray(detected_partitions[level])
        tru = np.asarray(truth_partitions[level])
        if trials == 0:
            out[level] = fowlkes_mallows(det, tru)
            continue
        scores = [fowlkes_mallows(rng.permutation(det), tru) for _ in range(trials)]
        out[level] = float(np.mean(scores))
    return out


def hierarchy_scores(detected_tree, truth_tree, levels, trials=1000, seed=0):
    """B_k per order k plus relabelled controls."""
    det = {k: detected_tree.partition(k) for k in levels}
    tru = {k: truth_tree.partition(k) for k in levels}
    b_k = {k: fowlkes_mallows(det[k], tru[k]) for k in levels}
    control = relabel_control(det, tru, trials=trials, seed=seed)
    return b_k, control


def summarize(rows, key, fields=("tpr", "fdr", "k_diff")):
    """Mean and standard deviation of each field grouped by ``key``.

    ``rows`` are dicts; returns a list of dicts ``{key, n, <f>_mean, <f>_sd}``.
    """
    groups = {}
    for row in rows:
        groups.setdefault(row[key], []).append(row)
    out = []
    for value in sorted(groups):
        items = groups[value]
        rec = {key: value, "n": len(items)}
        for f in fields:
            x = np.array([r[f] for r in items], dtype=np.float64)
            rec[f + "_mean"] = float(x.mean())
            rec[f + "_sd"] = float(x.std(ddof=1)) if x.size > 1 else 0.0
        out.append(rec)
    return out
