"""Synthetic contact matrices with known TAD boundaries.

Block means are Gamma(shape 4, scale 18) (mean 72). Within-block cells
follow either a Gaussian or a negative binomial with mean mu and variance
mu + nu * mu^2, where sqrt(nu) is the biological coefficient of variation.
Cells between blocks are background noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .matrix import ContactMatrix

GAMMA_SHAPE = 4.0
GAMMA_SCALE = 18.0
MEAN_BLOCK = GAMMA_SHAPE * GAMMA_SCALE
MIN_BLOCK = 5  # blocks are larger than 4 bins
SIM_RESOLUTION = 20_000  # default minimum TAD size then equals MIN_BLOCK


@dataclass
class GroundTruth:
    matrix: ContactMatrix
    true_boundaries: list[int]
    true_hierarchy: list[int] | None = None  # level per boundary, 1 = outermost
    params: dict = field(default_factory=dict)

    @property
    def K(self) -> int:
        return len(self.true_boundaries)


def draw_boundaries(n: int, K: int, rng, min_size: int = MIN_BLOCK) -> np.ndarray:
    """K boundaries cutting [1, n] into K+1 blocks of at least ``min_size`` bins.

    Uniform over all admissible configurations. A boundary is the last bin
    of the block to its left.
    """
    spare = n - (K + 1) * (min_size - 1)
    if K < 0 or spare < K + 1:
        raise ValueError(f"cannot fit {K + 1} blocks of size >= {min_size} into {n} bins")
    cuts = np.sort(rng.choice(np.arange(1, spare), size=K, replace=False))
    sizes = np.diff(np.concatenate(([0], cuts, [spare]))) + (min_size - 1)
    return np.cumsum(sizes)[:-1]


def block_means(K: int, rng) -> np.ndarray:
    return rng.gamma(GAMMA_SHAPE, GAMMA_SCALE, size=K + 1)


def nb_draw(rng, mean, nu: float, size=None):
    """Negative binomial via Gamma-Poisson: mean ``mean``, variance mean + nu*mean^2."""
    if nu == 0:
        return rng.poisson(mean, size=size).astype(np.float64)
    rate = rng.gamma(1.0 / nu, nu * np.asarray(mean, dtype=np.float64), size=size)
    return rng.poisson(rate).astype(np.float64)


def _assemble(n, blocks, cell_sampler, background_sampler, rng, resolution, chrom):
    """Collect upper-triangle entries block by block, then background row by row.

    ``blocks`` is a list of (start, end) top-level blocks (1-based, inclusive)
    tiling [1, n]; ``cell_sampler(start, end, rows, cols)`` draws values for
    within-block cells and ``background_sampler(count)`` for cells whose
    bins lie in different blocks.
    """
    rows, cols, vals = [], [], []
    for start, end in blocks:
        iu = np.triu_indices(end - start + 1)
        r, c = iu[0] + start, iu[1] + start
        rows.append(r)
        cols.append(c)
        vals.append(cell_sampler(start, end, r, c))
    for start, end in blocks:
        if end == n:
            continue
        width = n - end
        for i in range(start, end + 1):
            v = background_sampler(width)
            nz = np.flatnonzero(v)
            rows.append(np.full(nz.size, i))
            cols.append(nz + end + 1)
            vals.append(v[nz])
    rows, cols, vals = (np.concatenate(a) for a in (rows, cols, vals))
    keep = vals > 0
    return ContactMatrix.from_entries(
        n, rows[keep], cols[keep], vals[keep], resolution=resolution, chrom=chrom
    )


def _blocks(n, bounds):
    edges = np.concatenate(([0], bounds, [n]))
    return [(int(a) + 1, int(b)) for a, b in zip(edges[:-1], edges[1:])]


def gen_gaussian(n=500, K=31, sqrt_nu=0.0, seed=0, resolution=SIM_RESOLUTION, chrom="sim"):
    """Gaussian blocks N(mu_k, s2) on a background max(N(0, s2), 0), s2 = 72 + 72^2 nu.

    Within-block draws below zero are clipped to zero so the result is a
    valid count matrix.
    """
    rng = np.random.default_rng(seed)
    nu = float(sqrt_nu) ** 2
    var = MEAN_BLOCK + MEAN_BLOCK**2 * nu
    sd = np.sqrt(var)
    bounds = draw_boundaries(n, K, rng)
    means = block_means(K, rng)
    blocks = _blocks(n, bounds)
    index = {b: k for k, b in enumerate(blocks)}

    def cells(start, end, r, c):
        return np.maximum(rng.normal(means[index[(start, end)]], sd, size=r.size), 0.0)

    def background(count):
        return np.maximum(rng.normal(0.0, sd, size=count), 0.0)

    matrix = _assemble(n, blocks, cells, background, rng, resolution, chrom)
    return GroundTruth(
        matrix=matrix,
        true_boundaries=[int(b) for b in bounds],
        params=dict(kind="gaussian", n=n, K=K, sqrt_nu=sqrt_nu, variance=var, seed=seed, means=means.tolist()),
    )


def gen_nb(
    n=500,
    K=31,
    sqrt_nu=0.0,
    seed=0,
    background_nonzero=0.5,
    resolution=SIM_RESOLUTION,
    chrom="sim",
):
    """Negative-binomial blocks with mean mu_k on a zero-inflated NB background.

    Background cells are 0 with probability 1 - ``background_nonzero`` and
    otherwise NB with mean min_k mu_k. ``sqrt_nu`` = 0 gives Poisson cells.
    """
    rng = np.random.default_rng(seed)
    nu = float(sqrt_nu) ** 2
    bounds = draw_boundaries(n, K, rng)
    means = block_means(K, rng)
    blocks = _blocks(n, bounds)
    index = {b: k for k, b in enumerate(blocks)}
    floor_mean = means.min()

    def cells(start, end, r, c):
        return nb_draw(rng, means[index[(start, end)]], nu, size=r.size)

    def background(count):
        on = rng.random(count) < background_nonzero
        out = np.zeros(count)
        out[on] = nb_draw(rng, floor_mean, nu, size=int(on.sum()))
        return out

    matrix = _assemble(n, blocks, cells, background, rng, resolution, chrom)
    return GroundTruth(
        matrix=matrix,
        true_boundaries=[int(b) for b in bounds],
        params=dict(kind="nb", n=n, K=K, sqrt_nu=sqrt_nu, seed=seed, means=means.tolist()),
    )


def gen_nested(
    n=2000,
    levels=3,
    sqrt_nu=0.04,
    seed=0,
    top_size=(40, 80),
    split_prob=0.8,
    min_child=10,
    increment_sd=1.0,
    background_nonzero=0.5,
    resolution=SIM_RESOLUTION,
    chrom="sim",
):
    """Nested TADs: top-level blocks recursively split in two, ``levels`` deep.

    Top-level block sizes are uniform on ``top_size``; each TAD above the
    deepest level splits into two children (each at least ``min_child``
    bins) with probability ``split_prob``. A child's mean is its parent's
    mean plus ``increment_sd`` parent standard deviations, so inner TADs are
    always stronger. Cells take the mean of the deepest TAD holding both
    bins; cells across top-level blocks are background as in ``gen_nb``.
    Boundary levels: 1 separates top-level TADs, L separates siblings of
    order L.
    """
    if levels < 2:
        raise ValueError("levels must be at least 2")
    rng = np.random.default_rng(seed)
    nu = float(sqrt_nu) ** 2

    tops, pos = [], 0
    while n - pos > 0:
        size = int(rng.integers(top_size[0], top_size[1] + 1))
        if n - pos - size < top_size[0]:
            size = n - pos
        tops.append((pos + 1, pos + size))
        pos += size

    boundaries, blevels = [], []
    segments = []  # (start, end, depth, mean)

    def sd(mu):
        return np.sqrt(mu + nu * mu * mu)

    def split(start, end, depth, mean):
        segments.append((start, end, depth, mean))
        if depth >= levels or end - start + 1 < 2 * min_child:
            return
        # the first split at each level is guaranteed so every level is planted
        if rng.random() >= split_prob and planted[depth]:
            return
        planted[depth] = True
        cut = int(rng.integers(start + min_child - 1, end - min_child + 1))
        boundaries.append(cut)
        blevels.append(depth + 1)
        child_mean = mean + increment_sd * sd(mean)
        split(start, cut, depth + 1, child_mean)
        split(cut + 1, end, depth + 1, child_mean)

    planted = {d: False for d in range(1, levels)}
    top_means = block_means(len(tops) - 1, rng)
    for (start, end), mu in zip(tops, top_means):
        split(start, end, 1, float(mu))
    boundaries.extend(end for _, end in tops[:-1])
    blevels.extend([1] * (len(tops) - 1))

    floor_mean = float(top_means.min())

    def cells(start, end, r, c):
        # mean of the deepest segment holding both bins of a cell
        mu = np.zeros(r.size)
        best = np.zeros(r.size, dtype=np.int64)
        for s, e, depth, mean in segments:
            if s < start or e > end:
                continue
            inside = (r >= s) & (c <= e) & (depth > best)
            mu[inside] = mean
            best[inside] = depth
        return nb_draw(rng, mu, nu, size=r.size)

    def background(count):
        on = rng.random(count) < background_nonzero
        out = np.zeros(count)
        out[on] = nb_draw(rng, floor_mean, nu, size=int(on.sum()))
        return out

    matrix = _assemble(n, tops, cells, background, rng, resolution, chrom)
    order = np.argsort(boundaries)
    return GroundTruth(
        matrix=matrix,
        true_boundaries=[int(boundaries[i]) for i in order],
        true_hierarchy=[int(blevels[i]) for i in order],
        params=dict(
            kind="nested",
            n=n,
            levels=levels,
            sqrt_nu=sqrt_nu,
            seed=seed,
            increment_sd=increment_sd,
            segments=[(int(s), int(e), int(d), float(m)) for s, e, d, m in segments],
        ),
    )


def write_truth(truth: GroundTruth, path) -> None:
    """TSV sidecar: boundary bin and hierarchy level (1 when not nested)."""
    levels = truth.true_hierarchy or [1] * truth.K
    with Path(path).open("w") as fh:
        fh.write("# bin\tlevel\n")
        for b, lv in zip(truth.true_boundaries, levels):
            fh.write(f"{b}\t{lv}\n")


def read_truth(path):
    """Return (boundaries, levels) from a truth sidecar."""
    data = np.loadtxt(path, comments="#", dtype=np.int64, ndmin=2)
    if data.size == 0:
        return [], []
    return data[:, 0].tolist(), data[:, 1].tolist()
