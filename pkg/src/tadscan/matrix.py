"""Sparse symmetric contact matrices and window block sums.

Bins are 1-based throughout. Only the upper triangle (i <= j) is stored, as
a CSR matrix of shape (n, n) whose lower triangle is empty.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

log = logging.getLogger(__name__)

SYMMETRY_RTOL = 1e-6


class MatrixFormatError(ValueError):
    """Raised when a matrix file or array cannot be turned into a ContactMatrix."""


@dataclass(frozen=True, eq=False)
class ContactMatrix:
    """Symmetric n x n contact counts, upper triangle stored sparsely.

    Parameters
    ----------
    n : int
        Number of bins.
    resolution : int
        Base pairs per bin.
    upper : scipy.sparse.csr_matrix
        Upper-triangular non-zero entries with 0-based indices.
    chrom : str, optional
        Chromosome label carried into outputs.
    """

    n: int
    resolution: int
    upper: sparse.csr_matrix = field(repr=False)
    chrom: str | None = None

    def __post_init__(self):
        if self.n <= 0:
            raise MatrixFormatError("bin count must be positive")
        if self.resolution <= 0:
            raise MatrixFormatError("resolution must be positive")
        if self.upper.shape != (self.n, self.n):
            raise MatrixFormatError("storage shape does not match n")
        data = self.upper.data
        if data.size and (not np.all(np.isfinite(data)) or data.min() < 0):
            raise MatrixFormatError("counts must be finite and non-negative")
        self.upper.data.setflags(write=False)

    # -- construction ---------------------------------------------------

    @classmethod
    def from_entries(cls, n, rows, cols, counts, resolution=1, chrom=None):
        """Build from 1-based (row, col, count) triples.

        Entries given below the diagonal are mirrored. When a pair appears in
        both orientations the upper-triangle value wins (the lower one is
        treated as its symmetric duplicate); repeats in the same orientation
        are summed. Zero counts are dropped.
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        counts = np.asarray(counts, dtype=np.float64)
        if not (rows.shape == cols.shape == counts.shape):
            raise MatrixFormatError("rows, cols and counts differ in length")
        if counts.size and (not np.all(np.isfinite(counts)) or counts.min() < 0):
            raise MatrixFormatError("counts must be finite and non-negative")
        if rows.size and (min(rows.min(), cols.min()) < 1 or max(rows.max(), cols.max()) > n):
            raise MatrixFormatError(f"bin index outside 1..{n}")

        lower = rows > cols
        up = _coo(n, rows[~lower], cols[~lower], counts[~lower])
        mirrored = _coo(n, cols[lower], rows[lower], counts[lower])
        # mirrored entries only fill pairs absent from the upper orientation
        present = up.copy()
        present.data = np.ones_like(present.data)
        mirrored = mirrored - mirrored.multiply(present)
        upper = (up + mirrored).tocsr()
        upper.eliminate_zeros()
        upper.sort_indices()
        return cls(n=int(n), resolution=int(resolution), upper=upper, chrom=chrom)

    @classmethod
    def from_dense(cls, array, resolution=1, chrom=None):
        """Build from a full symmetric array; zeros and the lower triangle are dropped."""
        a = np.asarray(array, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise MatrixFormatError(f"dense matrix is not square: shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise MatrixFormatError("dense matrix has non-finite values")
        if a.size and a.min() < 0:
            raise MatrixFormatError("negative counts in dense matrix")
        scale = max(float(np.abs(a).max()) if a.size else 0.0, 1.0)
        if np.abs(a - a.T).max(initial=0.0) > SYMMETRY_RTOL * scale:
            raise MatrixFormatError("dense matrix is not symmetric")
        upper = sparse.csr_matrix(np.triu(a))
        upper.eliminate_zeros()
        return cls(n=a.shape[0], resolution=int(resolution), upper=upper, chrom=chrom)

    # -- queries ----------------------------------------------------------

    @property
    def nnz(self) -> int:
        return int(self.upper.nnz)

    def value(self, i: int, j: int) -> float:
        """Count at 1-based (i, j); symmetric."""
        if i > j:
            i, j = j, i
        return float(self.upper[i - 1, j - 1])

    def entries(self):
        """Stored entries as a list of 1-based (i, j, count) tuples sorted by (i, j)."""
        coo = self.upper.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [
            (int(coo.row[k]) + 1, int(coo.col[k]) + 1, float(coo.data[k])) for k in order
        ]

    def to_dense(self) -> np.ndarray:
        up = self.upper.toarray()
        return up + np.triu(up, 1).T

    def genomic_start(self, bin_index):
        return (np.asarray(bin_index) - 1) * self.resolution

    def window_sums(self, lo: int, hi: int) -> "RegionSums":
        return window_sums(self, lo, hi)


def _coo(n, rows, cols, vals):
    return sparse.coo_matrix((vals, (rows - 1, cols - 1)), shape=(n, n)).tocsr()


@dataclass(frozen=True, eq=False)
class RegionSums:
    """Cumulative row/column sums of the upper triangle of one window.

    For a split at bin ``m`` (last bin of the left block) the three regions
    are A1 = {lo <= i <= j <= m}, A2 = {m < i <= j <= hi} and the rectangle
    R = {lo <= i <= m < j <= hi}. Diagonal cells always belong to A1 or A2.
    All accessors accept scalars or integer arrays of split positions.
    """

    lo: int
    hi: int
    col_cumsum: np.ndarray  # [k] = S_A1 for m = lo + k - 1, length T + 1
    row_cumsum: np.ndarray  # [k] = S_A2 for m = lo + k - 1, length T + 1
    sum_sq: float

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    @property
    def total(self) -> float:
        return float(self.col_cumsum[-1])

    @property
    def n_cells(self) -> int:
        t = self.size
        return t * (t + 1) // 2

    def _k(self, m):
        return np.asarray(m) - self.lo + 1

    def s_a1(self, m):
        return self.col_cumsum[self._k(m)]

    def s_a2(self, m):
        return self.row_cumsum[self._k(m)]

    def s_r(self, m):
        return self.total - self.s_a1(m) - self.s_a2(m)

    def card_a1(self, m):
        k = self._k(m)
        return k * (k + 1) // 2

    def card_a2(self, m):
        k = self.size - self._k(m)
        return k * (k + 1) // 2

    def card_r(self, m):
        k = self._k(m)
        return k * (self.size - k)


def window_sums(matrix: ContactMatrix, lo: int, hi: int) -> RegionSums:
    """Row and column cumulative sums for the window [lo, hi] (1-based, inclusive).

    One pass over the stored entries of the window; every block sum for
    every split is then an O(1) lookup.
    """
    if lo >= hi:
        raise ValueError(f"window needs lo < hi, got [{lo}, {hi}]")
    if lo < 1 or hi > matrix.n:
        raise ValueError(f"window [{lo}, {hi}] outside 1..{matrix.n}")
    sub = matrix.upper[lo - 1 : hi, lo - 1 : hi]
    # column c of the upper-triangular window holds rows lo..c only
    col = np.asarray(sub.sum(axis=0)).ravel()
    row = np.asarray(sub.sum(axis=1)).ravel()
    col_cumsum = np.concatenate(([0.0], np.cumsum(col)))
    row_cumsum = np.concatenate((np.cumsum(row[::-1])[::-1], [0.0]))
    return RegionSums(
        lo=lo,
        hi=hi,
        col_cumsum=col_cumsum,
        row_cumsum=row_cumsum,
        sum_sq=float(np.dot(sub.data, sub.data)),
    )


# -- file IO ------------------------------------------------------------------


def load_matrix(path, format="dense", resolution=1, chrom=None) -> ContactMatrix:
    """Read a dense grid or a ``pos_i pos_j count`` triplet list.

    Triplet positions are bin indices unless some position exceeds ten times
    the number of distinct positions (or a position is 0), in which case they
    are genomic interval starts and must be multiples of ``resolution``.
    """
    path = Path(path)
    if format == "dense":
        try:
            rows = [
                [float(v) for v in line.split()]
                for line in path.read_text().splitlines()
                if line.strip() and not line.lstrip().startswith("#")
            ]
        except ValueError as exc:
            raise MatrixFormatError(f"{path}: non-numeric value ({exc})") from None
        if not rows:
            raise MatrixFormatError(f"{path}: matrix has no entries")
        if any(len(r) != len(rows) for r in rows):
            raise MatrixFormatError(f"{path}: dense matrix is not square")
        return ContactMatrix.from_dense(np.array(rows), resolution=resolution, chrom=chrom)
    if format == "triplet":
        return _load_triplet(path, resolution, chrom)
    raise ValueError(f"unknown matrix format {format!r}")


def _load_triplet(path, resolution, chrom):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)  # empty input is reported below
            data = np.loadtxt(path, comments="#", ndmin=2)
    except ValueError as exc:
        raise MatrixFormatError(f"{path}: unreadable triplet file ({exc})") from None
    if data.size == 0:
        raise MatrixFormatError(f"{path}: matrix has no entries")
    if data.shape[1] != 3:
        raise MatrixFormatError(f"{path}: expected 3 columns, got {data.shape[1]}")
    pos = data[:, :2]
    if np.any(pos != np.round(pos)) or pos.min() < 0:
        raise MatrixFormatError(f"{path}: positions must be non-negative integers")
    pos = pos.astype(np.int64)
    # distinct positions approximate the bin count; genomic starts overshoot it
    expected_bins = np.unique(pos).size
    genomic = resolution > 1 and (int(pos.max()) > 10 * expected_bins or pos.min() == 0)
    if genomic:
        if np.any(pos % resolution):
            raise MatrixFormatError(
                f"{path}: genomic coordinate not divisible by resolution {resolution}"
            )
        bins = pos // resolution + 1
    else:
        if pos.min() < 1:
            raise MatrixFormatError(f"{path}: bin indices are 1-based")
        bins = pos
    n = int(bins.max())
    log.debug("triplet %s: %s coordinates, n=%d", path, "genomic" if genomic else "bin", n)
    return ContactMatrix.from_entries(
        n, bins[:, 0], bins[:, 1], data[:, 2], resolution=resolution, chrom=chrom
    )


def write_matrix(matrix: ContactMatrix, path, format="dense") -> None:
    path = Path(path)
    if format == "dense":
        np.savetxt(path, matrix.to_dense(), fmt="%.17g")
    elif format == "triplet":
        with path.open("w") as fh:
            fh.write(f"# n={matrix.n} resolution={matrix.resolution}\n")
            for i, j, c in matrix.entries():
                fh.write(f"{i}\t{j}\t{c:.17g}\n")
    else:
        raise ValueError(f"unknown matrix format {format!r}")


def default_min_tad_bins(resolution: int) -> int:
    """Minimum TAD size in bins: 100 kb rounded up to whole bins, at least 2."""
    return max(2, math.ceil(100_000 / resolution))
