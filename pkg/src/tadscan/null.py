"""Monte-Carlo null distribution of the max scan statistic.

Under no change the window sums behave like integrals of a Gaussian random
field over the upper triangle of the unit square, so the max statistic
converges to a limit that depends only on delta = (minimum TAD size) /
(window size). We simulate that limit on a discrete grid, store the sorted
draws and read p-values off the empirical survival function.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

DELTA_GRID = (0.01, 0.02, 0.025, 0.05, 0.1)
DEFAULT_GRID_N = 400
DEFAULT_REPLICATES = 10_000
CHUNK = 250  # replicates per independent random stream
BATCH = 25  # replicates held in memory at once
CACHE_ENV = "TADSCAN_NULL_CACHE"
P_FLOOR = np.finfo(np.float64).tiny


@dataclass(frozen=True, eq=False)
class NullTable:
    delta: float
    grid_n: int
    replicates: int
    seed: int
    sorted_samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = self.sorted_samples
        if s.ndim != 1 or s.size != self.replicates or s.size == 0:
            raise ValueError("sorted_samples must hold one draw per replicate")
        s.setflags(write=False)

    def p_value(self, z, extrapolate=False):
        """Add-one empirical survival probability (1 + #{draws >= z}) / (B + 1).

        With ``extrapolate=True`` statistics beyond the top ``tail_size``
        draws get an exponential tail fitted to those draws, so p-values can
        fall below 1/(B + 1); the result is floored at the smallest positive
        double. Works on scalars and arrays.
        """
        z = np.asarray(z, dtype=np.float64)
        b = self.replicates
        count = b - np.searchsorted(self.sorted_samples, z, side="left")
        p = (1.0 + count) / (b + 1.0)
        if extrapolate:
            k, u, scale = self._tail()
            over = z > u
            if np.any(over):
                log_p = np.log((k + 1.0) / (b + 1.0)) - (z - u) / scale
                p = np.where(over, np.maximum(np.exp(log_p), P_FLOOR), p)
        return float(p) if p.ndim == 0 else p

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.sorted_samples, q))

    @property
    def tail_size(self) -> int:
        return max(20, self.replicates // 100)

    def _tail(self):
        k = min(self.tail_size, self.replicates - 1)
        s = self.sorted_samples
        u = s[-k - 1]
        scale = max(float(np.mean(s[-k:] - u)), 1e-12)
        return k, float(u), scale


def snap_delta(delta: float) -> float:
    """Nearest value on the fixed delta grid (ties go to the smaller value)."""
    if not 0 < delta:
        raise ValueError(f"delta must be positive, got {delta}")
    grid = np.asarray(DELTA_GRID)
    return float(grid[np.argmin(np.abs(grid - delta))])


def grid_min_size(delta: float, grid_n: int) -> int:
    return max(1, int(round(delta * grid_n)))


def simulate_null(delta, grid_n=DEFAULT_GRID_N, replicates=DEFAULT_REPLICATES, seed=0, workers=1):
    """Simulate the max-statistic null for one delta."""
    return simulate_null_tables([delta], grid_n, replicates, seed, workers)[0]


def simulate_null_tables(deltas, grid_n=DEFAULT_GRID_N, replicates=DEFAULT_REPLICATES, seed=0, workers=1):
    """Simulate tables for several deltas from the same random grids.

    Each replicate fills the upper triangle of a grid_n x grid_n array with
    independent normals (variance 1 off the diagonal, 1/2 on it), evaluates
    the scan statistic with unit null variance at every split, and keeps the
    max over the splits admissible for each delta. Replicates are drawn in
    chunks with their own seed-derived streams, so results do not depend on
    ``workers``.
    """
    deltas = [float(d) for d in deltas]
    for d in deltas:
        if not 0 < d < 0.5:
            raise ValueError(f"delta must lie in (0, 0.5), got {d}")
    if grid_n < 50:
        raise ValueError("grid_n must be at least 50")
    if replicates < 1000:
        raise ValueError("replicates must be at least 1000")

    sizes = [min(CHUNK, replicates - start) for start in range(0, replicates, CHUNK)]
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    xis = [grid_min_size(d, grid_n) for d in deltas]
    jobs = [(s, size, grid_n, xis) for s, size in zip(streams, sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: _null_chunk(*job), jobs))
    else:
        parts = [_null_chunk(*job) for job in jobs]
    maxima = np.concatenate(parts, axis=1)
    return [
        NullTable(delta=d, grid_n=grid_n, replicates=replicates, seed=seed, sorted_samples=np.sort(row))
        for d, row in zip(deltas, maxima)
    ]


def _null_chunk(seed_seq, size, grid_n, xis):
    rng = np.random.default_rng(seed_seq)
    iu = np.triu_indices(grid_n)
    diag = iu[0] == iu[1]
    buf = np.zeros((min(BATCH, size), grid_n, grid_n))

    k = np.arange(grid_n + 1, dtype=np.float64)  # bins in the left block
    with np.errstate(divide="ignore", invalid="ignore"):
        a1 = k * (k + 1) / 2
        a1r = a1 + k * (grid_n - k)
        a = grid_n * (grid_n + 1) / 2
        f1 = a1 / a1r
        f2 = a1r / a
    out = np.empty((len(xis), size))
    for start in range(0, size, BATCH):
        b = min(BATCH, size - start)
        draws = rng.standard_normal((b, iu[0].size))
        draws[:, diag] *= np.sqrt(0.5)
        cells = buf[:b]
        cells[:, iu[0], iu[1]] = draws
        col = np.concatenate((np.zeros((b, 1)), np.cumsum(cells.sum(axis=1), axis=1)), axis=1)
        row = cells.sum(axis=2)
        row = np.concatenate((np.cumsum(row[:, ::-1], axis=1)[:, ::-1], np.zeros((b, 1))), axis=1)
        total = col[:, -1:]
        s1 = col
        s1r = total - row
        with np.errstate(divide="ignore", invalid="ignore"):
            z = 0.5 * (
                (s1 - f1 * s1r) ** 2 / (a1 * (1 - f1))
                + (s1r - f2 * total) ** 2 / (a1r * (1 - f2))
            )
        for i, xi in enumerate(xis):
            # left block of k bins is admissible for xi <= k <= grid_n - xi
            out[i, start : start + b] = z[:, xi : grid_n - xi + 1].max(axis=1)
    return out


# -- on-disk cache --------------------------------------------------------------


def cache_key(delta, grid_n, replicates, seed=0) -> str:
    return f"null_d{float(delta):.6g}_g{int(grid_n)}_r{int(replicates)}_s{int(seed)}"


def store_table(table: NullTable, path) -> None:
    """Write a JSON header line followed by the raw little-endian float64 draws."""
    payload = np.ascontiguousarray(table.sorted_samples, dtype="<f8").tobytes()
    header = {
        "delta": table.delta,
        "grid_n": table.grid_n,
        "replicates": table.replicates,
        "seed": table.seed,
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(payload)
    tmp.replace(path)


def load_table(path) -> NullTable:
    """Read a cache file; raises ValueError when it is corrupt."""
    raw = Path(path).read_bytes()
    head, sep, payload = raw.partition(b"\n")
    if not sep:
        raise ValueError(f"{path}: missing header")
    try:
        header = json.loads(head)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: bad header ({exc})") from None
    if hashlib.sha256(payload).hexdigest() != header.get("sha256"):
        raise ValueError(f"{path}: checksum mismatch")
    samples = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return NullTable(
        delta=float(header["delta"]),
        grid_n=int(header["grid_n"]),
        replicates=int(header["replicates"]),
        seed=int(header["seed"]),
        sorted_samples=samples,
    )


def default_cache_dir():
    env = os.environ.get(CACHE_ENV)
    return Path(env) if env else None


class NullProvider:
    """Serves null tables by delta, simulating on first use and caching on disk.

    A miss simulates every delta on the grid in one pass (they share the
    same random grids), so ``simulations`` counts passes, not tables.
    """

    def __init__(
        self,
        grid_n=DEFAULT_GRID_N,
        replicates=DEFAULT_REPLICATES,
        seed=0,
        cache_dir=None,
        workers=1,
        extrapolate=True,
    ):
        self.grid_n = grid_n
        self.replicates = replicates
        self.seed = seed
        self.cache_dir = Path(cache_dir) if cache_dir is not None else default_cache_dir()
        self.workers = workers
        self.extrapolate = extrapolate
        self.simulations = 0
        self._tables: dict[float, NullTable] = {}

    def _path(self, delta):
        return self.cache_dir / (cache_key(delta, self.grid_n, self.replicates, self.seed) + ".bin")

    def table(self, delta: float) -> NullTable:
        delta = snap_delta(delta)
        if delta in self._tables:
            return self._tables[delta]
        if self.cache_dir is not None:
            path = self._path(delta)
            if path.exists():
                try:
                    table = load_table(path)
                except (ValueError, KeyError) as exc:
                    log.warning("ignoring corrupt null cache %s: %s", path, exc)
                else:
                    self._tables[delta] = table
                    return table
        self._simulate()
        return self._tables[delta]

    def calibrate(self) -> list[NullTable]:
        """Simulate (and cache) the table of every delta on the grid."""
        self._simulate()
        return [self._tables[d] for d in DELTA_GRID]

    def _simulate(self):
        log.info(
            "simulating null tables: grid %d, %d replicates", self.grid_n, self.replicates
        )
        tables = simulate_null_tables(
            DELTA_GRID, self.grid_n, self.replicates, self.seed, self.workers
        )
        self.simulations += 1
        for t in tables:
            self._tables[t.delta] = t
            if self.cache_dir is not None:
                self.cache_dir.mkdir(parents=True, exist_ok=True)
                store_table(t, self._path(t.delta))

    def p_value(self, z: float, xi: int, window_size: int) -> float:
        return self.table(xi / window_size).p_value(z, extrapolate=self.extrapolate)
