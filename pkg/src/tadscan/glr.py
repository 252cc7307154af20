"""Change-point scan statistic over a diagonal window.

``z_values`` evaluates, for splits m of a window, the two-contrast
statistic

    Z_m = 1/(2 s0) * [ (S1 - a1/a1r * S1r)^2 / (a1 (1 - a1/a1r))
                     + (S1r - a1r/a * S)^2 / (a1r (1 - a1r/a)) ]

with S1 the left block sum, S1r the left block plus rectangle, S the window
sum, a1, a1r, a the matching cell counts and s0 the null cell variance. It
equals the Gaussian likelihood ratio for a block-mean change at m and is the
large-sample form of the negative-binomial ratio computed by ``glr_nb``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrix import ContactMatrix, RegionSums, window_sums

SIGMA0_FLOOR = 1e-8


class DegenerateWindowError(ValueError):
    """The window is too small for the requested split."""


@dataclass(frozen=True, eq=False)
class ScanResult:
    lo: int
    hi: int
    best_m: int
    z_tilde: float
    sigma0_sq: float
    splits: np.ndarray | None = None
    z_profile: np.ndarray | None = None


@dataclass(frozen=True)
class NbParams:
    r: float
    mu: float

    def __post_init__(self):
        if not (self.r > 0 and self.mu > 0):
            raise ValueError("negative-binomial r and mu must be positive")

    @property
    def variance(self) -> float:
        return self.mu + self.mu**2 / self.r


def admissible_splits(lo: int, hi: int, xi: int) -> np.ndarray:
    """Splits m leaving at least ``xi`` bins on each side: lo+xi-1 <= m <= hi-xi."""
    return np.arange(lo + xi - 1, hi - xi + 1)


def sigma0_from_sums(sums: RegionSums) -> float:
    """Sample variance of every upper-triangular cell of the window, zeros included."""
    n = sums.n_cells
    total = sums.total
    var = (sums.sum_sq - total * total / n) / (n - 1)
    return max(float(var), SIGMA0_FLOOR)


def estimate_sigma0(matrix: ContactMatrix, lo: int, hi: int) -> float:
    return sigma0_from_sums(window_sums(matrix, lo, hi))


def z_values(sums: RegionSums, m, sigma0_sq: float) -> np.ndarray:
    """Vectorised Z_m for an array of split positions (no geometry checks)."""
    m = np.asarray(m)
    a1 = sums.card_a1(m).astype(np.float64)
    a1r = a1 + sums.card_r(m)
    a = float(sums.n_cells)
    s1 = sums.s_a1(m)
    s1r = s1 + sums.s_r(m)
    f1 = a1 / a1r
    f2 = a1r / a
    first = (s1 - f1 * s1r) ** 2 / (a1 * (1.0 - f1))
    second = (s1r - f2 * sums.total) ** 2 / (a1r * (1.0 - f2))
    return (first + second) / (2.0 * sigma0_sq)


def z_m(sums: RegionSums, m: int, sigma0_sq: float) -> float:
    """Scan statistic at a single split; raises if the split leaves an empty region."""
    if sigma0_sq <= 0:
        raise ValueError("sigma0_sq must be positive")
    if not (sums.lo <= m < sums.hi):
        raise DegenerateWindowError(
            f"split {m} leaves an empty block in window [{sums.lo}, {sums.hi}]"
        )
    return float(z_values(sums, m, sigma0_sq))


def scan_window(
    matrix: ContactMatrix,
    lo: int,
    hi: int,
    xi: int,
    sigma0_sq: float | None = None,
    keep_profile: bool = False,
    sums: RegionSums | None = None,
) -> ScanResult:
    """Maximise Z_m over the admissible splits of [lo, hi].

    Ties go to the smallest split. ``sigma0_sq`` defaults to the pooled
    window variance.
    """
    if hi - lo + 1 < 2 * xi:
        raise DegenerateWindowError(
            f"window [{lo}, {hi}] is smaller than twice the minimum TAD size {xi}"
        )
    if sums is None:
        sums = window_sums(matrix, lo, hi)
    if sigma0_sq is None:
        sigma0_sq = sigma0_from_sums(sums)
    splits = admissible_splits(lo, hi, xi)
    z = z_values(sums, splits, sigma0_sq)
    best = int(np.argmax(z))
    return ScanResult(
        lo=lo,
        hi=hi,
        best_m=int(splits[best]),
        z_tilde=float(z[best]),
        sigma0_sq=sigma0_sq,
        splits=splits if keep_profile else None,
        z_profile=z if keep_profile else None,
    )


def _nb_term(s, n, r):
    mean = s / n
    with np.errstate(divide="ignore", invalid="ignore"):
        first = np.where(s > 0, s * np.log(mean / (r + mean)), 0.0)
    return first + r * n * np.log(r / (r + mean))


def glr_nb(sums: RegionSums, m, r: float = 1.0):
    """Log generalized likelihood ratio for a negative-binomial mean change at m.

    ``r`` is the (known) dispersion, i.e. the NB size parameter. Regions
    with zero sum contribute through the limit S log S -> 0.
    """
    if r <= 0:
        raise ValueError("dispersion r must be positive")
    m = np.asarray(m)
    out = (
        _nb_term(sums.s_a1(m), sums.card_a1(m), r)
        + _nb_term(sums.s_a2(m), sums.card_a2(m), r)
        + _nb_term(sums.s_r(m), sums.card_r(m), r)
        - _nb_term(sums.total, sums.n_cells, r)
    )
    return float(out) if out.ndim == 0 else out
