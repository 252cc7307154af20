"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s``; the verdicts are
also collected in an "acceptance criteria" section at the end of any run.
Tolerances are fixed here and are not to be tuned to the outcome.
"""

import math
import time
import tracemalloc

import numpy as np
import pytest
from scipy import stats

from tadscan.compare import fisher_combine
from tadscan.evaluate import hierarchy_scores, score_boundaries
from tadscan.glr import glr_nb, scan_window, z_m
from tadscan.hierarchy import order_distribution, tree_from_levels
from tadscan.matrix import ContactMatrix, window_sums
from tadscan.null import simulate_null
from tadscan.pipeline import detect
from tadscan.segment import prune
from tadscan.simulate import gen_gaussian, gen_nb, gen_nested, nb_draw

from conftest import record_criterion

pytestmark = pytest.mark.slow

NOISE_LEVELS = (0.0, 0.05, 0.10, 0.15)
SUITE_MATRICES = 200


@pytest.fixture(scope="module")
def robustness_suite(null):
    """Score the pipeline on 200 Gaussian and 200 NB matrices per noise level."""
    rows = []
    started = time.perf_counter()
    for kind, gen in (("gaussian", gen_gaussian), ("nb", gen_nb)):
        for sqrt_nu in NOISE_LEVELS:
            for rep in range(SUITE_MATRICES):
                truth = gen(sqrt_nu=sqrt_nu, seed=10_000 * NOISE_LEVELS.index(sqrt_nu) + rep)
                t0 = time.perf_counter()
                result = detect(truth.matrix, null)
                elapsed = time.perf_counter() - t0
                strict = prune(truth.matrix, result.boundaries, result.xi, 0.01, null)
                row = dict(kind=kind, sqrt_nu=sqrt_nu, seconds=elapsed)
                for tol in (0, 1):
                    tpr, fdr, k_diff = score_boundaries(result.positions, truth.true_boundaries, tol)
                    row.update({f"tpr{tol}": tpr, f"fdr{tol}": fdr, "k_diff": k_diff})
                tpr, fdr, k_diff = score_boundaries([c.position for c in strict], truth.true_boundaries, 1)
                row.update(tpr_a01=tpr, fdr_a01=fdr, k_diff_a01=k_diff)
                rows.append(row)
    return rows, time.perf_counter() - started


def _level_means(rows, kind, sqrt_nu, key):
    return float(np.mean([r[key] for r in rows if r["kind"] == kind and r["sqrt_nu"] == sqrt_nu]))


def test_criterion_1_distribution_robustness(robustness_suite):
    rows, total = robustness_suite
    ok = True
    for kind in ("gaussian", "nb"):
        for sqrt_nu in NOISE_LEVELS:
            tpr = _level_means(rows, kind, sqrt_nu, "tpr1")
            fdr = _level_means(rows, kind, sqrt_nu, "fdr1")
            level_ok = tpr >= 0.99 and fdr <= 0.01
            ok &= level_ok
            print(
                f"  {kind:8s} sqrt_nu={sqrt_nu:.2f} alpha0=0.05: tpr={tpr:.4f} fdr={fdr:.4f}"
                f" (tol0 tpr={_level_means(rows, kind, sqrt_nu, 'tpr0'):.4f}"
                f" fdr={_level_means(rows, kind, sqrt_nu, 'fdr0'):.4f});"
                f" alpha0=0.01: tpr={_level_means(rows, kind, sqrt_nu, 'tpr_a01'):.4f}"
                f" fdr={_level_means(rows, kind, sqrt_nu, 'fdr_a01'):.4f}"
                f" {'ok' if level_ok else 'MISS'}"
            )
    per_matrix = max(r["seconds"] for r in rows)
    runtime_ok = per_matrix < 1.0 and total < 30 * 60
    worst_fdr = max(_level_means(rows, k, s, "fdr1") for k in ("gaussian", "nb") for s in NOISE_LEVELS)
    worst_tpr = min(_level_means(rows, k, s, "tpr1") for k in ("gaussian", "nb") for s in NOISE_LEVELS)
    record_criterion(
        1,
        ok and runtime_ok,
        f"min mean TPR {worst_tpr:.4f} (>= 0.99), max mean FDR {worst_fdr:.4f} (<= 0.01) at alpha0 0.05 tol 1;"
        f" slowest matrix {per_matrix:.2f} s (< 1 s), suite {total:.0f} s (< 1800 s)",
    )
    assert ok and runtime_ok


def test_criterion_2_k_recovery(robustness_suite):
    rows, _ = robustness_suite
    means = {kind: _level_means(rows, kind, 0.0, "k_diff") for kind in ("gaussian", "nb")}
    sds = {
        kind: float(np.std([r["k_diff"] for r in rows if r["kind"] == kind and r["sqrt_nu"] == 0.0], ddof=1))
        for kind in means
    }
    ok = all(abs(v) <= 0.5 for v in means.values())
    record_criterion(
        2,
        ok,
        "mean(K_hat - K) at 0% noise: "
        + ", ".join(f"{k} {means[k]:+.3f} (sd {sds[k]:.3f})" for k in means)
        + " (|mean| <= 0.5)",
    )
    assert ok


def _masks(n, m):
    i, j = np.triu_indices(n)
    i, j = i + 1, j + 1
    return i, j, j <= m, i > m, (i <= m) & (j > m)


def test_criterion_3_oracle_equivalence():
    rng = np.random.default_rng(2024)
    n, xi = 40, 1
    worst = 0.0
    argmax_ok = True
    for _ in range(200):
        upper = np.triu(rng.poisson(rng.gamma(2.0, 10.0), size=(n, n)).astype(float))
        dense = upper + np.triu(upper, 1).T
        res = scan_window(ContactMatrix.from_dense(dense), 1, n, xi, keep_profile=True)
        s0 = res.sigma0_sq
        values = dense[np.triu_indices(n)]
        brute, gauss = [], []
        for m in res.splits:
            _, _, a1, a2, r = _masks(n, m)
            s1, s2, sr, s = values[a1].sum(), values[a2].sum(), values[r].sum(), values.sum()
            c1, c2, cr, c = a1.sum(), a2.sum(), r.sum(), values.size
            s1r, c1r = s1 + sr, c1 + cr
            brute.append(
                ((s1 - c1 / c1r * s1r) ** 2 / (c1 * (1 - c1 / c1r)) + (s1r - c1r / c * s) ** 2 / (c1r * (1 - c1r / c)))
                / (2 * s0)
            )
            gauss.append((s1**2 / c1 + s2**2 / c2 + sr**2 / cr - s**2 / c) / (2 * s0))
        brute = np.array(brute)
        worst = max(worst, float(np.max(np.abs(res.z_profile - brute) / np.maximum(np.abs(brute), 1e-300))))
        argmax_ok &= res.splits[int(np.argmax(gauss))] == res.best_m
    ok = worst <= 1e-9 and argmax_ok
    record_criterion(
        3,
        ok,
        f"200 random 40x40 matrices: max relative error {worst:.2e} (<= 1e-9); Gaussian-GLR argmax agrees: {argmax_ok}",
    )
    assert ok


def test_criterion_4_nb_glr_convergence():
    mu, nu = 20.0, 0.1
    variance = mu + nu * mu * mu
    medians = []
    for n in (100, 200, 400):
        rng = np.random.default_rng(n)
        iu = np.triu_indices(n)
        diffs = []
        for _ in range(200):
            m = ContactMatrix.from_entries(n, iu[0] + 1, iu[1] + 1, nb_draw(rng, mu, nu, size=iu[0].size))
            sums = window_sums(m, 1, n)
            diffs.append(abs(glr_nb(sums, n // 2, r=1 / nu) - z_m(sums, n // 2, variance)))
        medians.append(float(np.median(diffs)))
    ok = medians[0] > medians[1] > medians[2]
    record_criterion(
        4,
        ok,
        "median |GLR_NB - Z_m| for n = 100, 200, 400: " + ", ".join(f"{v:.2e}" for v in medians) + " (decreasing)",
    )
    assert ok


def test_criterion_5_null_calibration(null):
    table = null.table(0.025)
    assert table.replicates == 10_000 and table.grid_n == 400

    fresh = simulate_null(0.025, grid_n=400, replicates=1000, seed=5001).sorted_samples
    p_fresh = table.p_value(fresh, extrapolate=True)
    type_one = float(np.mean(p_fresh <= 0.05))

    ks_draws = simulate_null(0.025, grid_n=400, replicates=2000, seed=5002).sorted_samples
    ks = stats.kstest(table.p_value(ks_draws, extrapolate=True), "uniform").statistic

    samples = table.sorted_samples
    skew = float(stats.skew(samples))
    grid = np.linspace(samples[0], np.quantile(samples, 0.999), 400)
    density = stats.gaussian_kde(samples)(grid)
    modes = int(np.sum((density[1:-1] > density[:-2]) & (density[1:-1] > density[2:])))

    ok = 0.03 <= type_one <= 0.07 and ks < 0.05 and skew > 0 and modes == 1
    record_criterion(
        5,
        ok,
        f"type-I error {type_one:.3f} on 1000 fresh grids (in [0.03, 0.07]); KS {ks:.4f} on 2000 (< 0.05);"
        f" skewness {skew:.2f} (> 0), density modes {modes} (= 1)",
    )
    assert ok


def test_criterion_6_hierarchy_quality(null):
    levels = [1, 2, 3]
    b_rows, c_rows, roots = [], [], []
    for seed in range(10):
        truth = gen_nested(seed=seed)
        result = detect(truth.matrix, null)
        true_tree = tree_from_levels(truth.matrix.n, truth.true_boundaries, truth.true_hierarchy)
        b_k, control = hierarchy_scores(result.tree, true_tree, levels, trials=1000, seed=seed)
        b_rows.append([b_k[k] for k in levels])
        c_rows.append([control[k] for k in levels])
        roots.append((len(result.tree.roots), order_distribution(true_tree)[1]))
    b_mean = np.mean(b_rows, axis=0)
    c_mean = np.mean(c_rows, axis=0)
    ok = bool(np.all(b_mean >= 0.8) and np.all(c_mean <= 0.05))
    det_roots, true_roots = np.mean(roots, axis=0)
    record_criterion(
        6,
        ok,
        "B_1..B_3 = " + ", ".join(f"{v:.3f}" for v in b_mean) + " (>= 0.8); controls "
        + ", ".join(f"{v:.4f}" for v in c_mean) + " (<= 0.05);"
        f" mean roots detected {det_roots:.1f} vs true {true_roots:.1f}",
    )
    assert ok


def test_criterion_7_fisher_combination():
    def closed(x):
        return math.exp(-x / 2) * (1 + x / 2)

    half = fisher_combine(0.5, 0.5)
    small = fisher_combine(0.01, 0.01)
    grid = np.linspace(0.001, 1.0, 100)
    row = np.array([fisher_combine(p, 0.3) for p in grid])
    diag = np.array([fisher_combine(p, p) for p in grid])
    ok = (
        abs(half - 0.5966) <= 1e-4
        and abs(small - 1.03e-3) <= 1e-5
        and abs(half - closed(-4 * math.log(0.5))) <= 1e-12
        and bool(np.all(np.diff(row) >= 0) and np.all(np.diff(diag) >= 0))
    )
    record_criterion(
        7, ok, f"S(0.5, 0.5) = {half:.5f} (0.5966 +- 1e-4); S(0.01, 0.01) = {small:.3e} (1.03e-3 +- 1e-5); monotone on 100 points"
    )
    assert ok


def test_criterion_8_first_split_robustness(null):
    truth = gen_nb(sqrt_nu=0.10, seed=0)
    n, xi = truth.matrix.n, 5
    rng = np.random.default_rng(77)
    tprs = []
    for _ in range(200):
        first = int(rng.integers(xi, n - xi + 1))
        result = detect(truth.matrix, null, first_split=first)
        tprs.append(score_boundaries(result.positions, truth.true_boundaries, 1)[0])
    ok = min(tprs) >= 0.90
    record_criterion(
        8, ok, f"200 forced first splits: min TPR {min(tprs):.3f} (>= 0.90), mean {np.mean(tprs):.3f}"
    )
    assert ok


def _timed_detect(matrix, null, repeats=1):
    best, peak = math.inf, 0
    for _ in range(repeats):
        tracemalloc.start()
        t0 = time.perf_counter()
        detect(matrix, null)
        best = min(best, time.perf_counter() - t0)
        peak = max(peak, tracemalloc.get_traced_memory()[1])
        tracemalloc.stop()
    return best, peak


def test_criterion_9_scaling(null):
    null.table(0.05)  # load tables before timing
    sizes, times, memory_ok, ratios = (1000, 2000, 4000), [], True, []
    for n in sizes:
        truth = gen_nb(n=n, K=n // 20, sqrt_nu=0.05, seed=n, background_nonzero=0.01)
        seconds, peak = _timed_detect(truth.matrix, null, repeats=3)
        times.append(seconds)
        ratios.append(peak / truth.matrix.nnz)
        memory_ok &= peak <= 32 * truth.matrix.nnz + 2**20
    exponent = float(np.polyfit(np.log(sizes), np.log(times), 1)[0])

    big = gen_nb(n=4500, K=4500 // 20, sqrt_nu=0.05, seed=4500, background_nonzero=0.01)
    fill = big.matrix.nnz / (4500 * 4501 / 2)
    big_seconds, big_peak = _timed_detect(big.matrix, null)
    memory_ok &= big_peak <= 32 * big.matrix.nnz + 2**20
    ok = big_seconds < 300 and exponent <= 2.5 and memory_ok
    record_criterion(
        9,
        ok,
        f"n=4500 ({big.matrix.nnz} non-zeros, {fill:.1%} of the triangle) in {big_seconds:.2f} s (< 300 s); time exponent {exponent:.2f} (<= 2.5);"
        f" peak bytes per non-zero " + ", ".join(f"{r:.1f}" for r in ratios) + " (<= 32 + 1 MiB overhead)",
    )
    assert ok
