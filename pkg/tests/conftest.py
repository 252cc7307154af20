import os
from pathlib import Path

import numpy as np
import pytest

from tadscan.matrix import ContactMatrix
from tadscan.null import CACHE_ENV, NullProvider


@pytest.fixture(scope="session")
def null_cache_dir(request) -> Path:
    """Null tables persist across runs: $TADSCAN_NULL_CACHE or the pytest cache."""
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path(request.config.cache.mkdir("tadscan-null"))


@pytest.fixture(scope="session")
def null(null_cache_dir):
    """Full-size null tables (grid 400, 10000 replicates), simulated once."""
    return NullProvider(cache_dir=null_cache_dir)


@pytest.fixture(scope="session")
def small_null():
    """Coarse in-memory null tables, good enough for unit tests of the plumbing."""
    return NullProvider(grid_n=60, replicates=1000, seed=7, cache_dir=None)


def block_matrix(sizes, means, background=0.0, noise=0.0, seed=0):
    """Dense symmetric matrix of diagonal blocks with optional Gaussian noise.

    Noise is added then clipped at zero so the result is a valid count matrix.
    """
    n = sum(sizes)
    dense = np.full((n, n), float(background))
    start = 0
    for size, mu in zip(sizes, means):
        dense[start : start + size, start : start + size] = mu
        start += size
    if noise:
        rng = np.random.default_rng(seed)
        upper = np.triu(rng.normal(0.0, noise, size=(n, n)))
        dense = dense + upper + np.triu(upper, 1).T
    return ContactMatrix.from_dense(np.maximum(dense, 0.0))


# -- acceptance report ---------------------------------------------------------

_CRITERIA: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    """Remember one acceptance verdict; all verdicts are listed at session end."""
    _CRITERIA[number] = (bool(passed), detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}")
