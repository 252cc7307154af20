import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import fowlkes_mallows_score

from tadscan.evaluate import (
    chance_fowlkes_mallows,
    fowlkes_mallows,
    match_positions,
    relabel_control,
    score_boundaries,
    summarize,
)


@pytest.mark.parametrize(
    "detected,truth,tol,expected",
    [
        ([10, 50], [10, 50], 1, (1.0, 0.0, 0)),
        ([], [10, 50], 1, (0.0, 0.0, -2)),
        ([11, 49, 80], [10, 50], 1, (1.0, 1 / 3, 1)),
        ([11, 49, 80], [10, 50], 0, (0.0, 1.0, 1)),
    ],
)
def test_score_boundaries_examples(detected, truth, tol, expected):
    assert score_boundaries(detected, truth, tol) == pytest.approx(expected)


def test_one_detection_credits_one_truth():
    # 11 is within one bin of both 10 and 12 but can only be credited once
    tpr, fdr, _ = score_boundaries([11], [10, 12], 1)
    assert (tpr, fdr) == (0.5, 0.0)
    assert match_positions([10, 12], [11], 1) == [(0, 0)]


def test_fowlkes_mallows_hand_example():
    a = [0, 0, 0, 1, 1, 1]
    b = [0, 0, 1, 1, 2, 2]
    # agreeing pairs M = 2 ({1,2} and {5,6}), P = 6, Q = 3, so B = 2/sqrt(18)
    assert fowlkes_mallows(a, b) == pytest.approx(2 / np.sqrt(18), abs=1e-12)
    assert fowlkes_mallows(a, b) == pytest.approx(0.4714, abs=1e-4)
    assert fowlkes_mallows(a, b) == pytest.approx(fowlkes_mallows_score(a, b), abs=1e-12)


def test_fowlkes_mallows_edge_cases():
    assert fowlkes_mallows([1, 1, 2], [5, 5, 7]) == 1.0
    assert fowlkes_mallows([0, 1, 2], [0, 1, 2]) == 1.0
    assert fowlkes_mallows([0, 1, 2], [0, 0, 0]) == 0.0
    with pytest.raises(ValueError):
        fowlkes_mallows([0, 1], [0, 1, 2])


labels = st.lists(st.integers(0, 6), min_size=2, max_size=60)


@settings(max_examples=100, deadline=None)
@given(data=st.data(), a=labels)
def test_fowlkes_mallows_against_sklearn(data, a):
    b = data.draw(st.lists(st.integers(0, 6), min_size=len(a), max_size=len(a)))
    ours = fowlkes_mallows(a, b)
    assert 0.0 <= ours <= 1.0
    assert ours == pytest.approx(fowlkes_mallows(b, a), abs=1e-12)
    if len(set(a)) < len(a) and len(set(b)) < len(b):
        # sklearn agrees whenever both sides co-cluster some pair
        assert ours == pytest.approx(fowlkes_mallows_score(a, b), abs=1e-12)


def test_relabel_control_near_chance():
    rng = np.random.default_rng(0)
    part = np.repeat(np.arange(10), 10)
    other = rng.permutation(np.repeat(np.arange(8), [20, 15, 15, 10, 10, 10, 10, 10]))
    control = relabel_control({1: part}, {1: other}, trials=1000, seed=1)[1]
    assert control <= chance_fowlkes_mallows(part, other) + 0.01


def test_chance_level_matches_permutation_mean():
    a = np.repeat(np.arange(5), 20)
    b = np.repeat(np.arange(4), 25)
    control = relabel_control({1: a}, {1: b}, trials=4000, seed=3)[1]
    assert control == pytest.approx(chance_fowlkes_mallows(a, b), rel=0.03)


def test_relabel_control_seeding():
    a = np.repeat(np.arange(4), 5)
    b = np.repeat(np.arange(5), 4)
    assert relabel_control({1: a}, {1: b}, trials=0) == {1: fowlkes_mallows(a, b)}
    first = relabel_control({1: a, 2: b}, {1: b, 2: a}, trials=50, seed=9)
    assert first == relabel_control({1: a, 2: b}, {1: b, 2: a}, trials=50, seed=9)


@settings(max_examples=60, deadline=None)
@given(
    truth=st.lists(st.integers(1, 200), max_size=20, unique=True).map(sorted),
    detected=st.lists(st.integers(1, 200), max_size=20, unique=True).map(sorted),
    tol=st.integers(0, 3),
)
def test_score_properties(truth, detected, tol):
    tpr, fdr, k_diff = score_boundaries(detected, truth, tol)
    assert 0 <= tpr <= 1 and 0 <= fdr <= 1
    assert k_diff == len(detected) - len(truth)
    assert score_boundaries(detected, truth, tol + 1)[0] >= tpr


def test_summarize():
    rows = [{"nu": 0.1, "tpr": 1.0}, {"nu": 0.1, "tpr": 0.5}, {"nu": 0.0, "tpr": 1.0}]
    table = summarize(rows, "nu", ["tpr"])
    assert [r["nu"] for r in table] == [0.0, 0.1]
    assert table[1]["tpr_mean"] == 0.75
    assert table[1]["tpr_sd"] == pytest.approx(np.std([1.0, 0.5], ddof=1))
    assert table[0]["tpr_sd"] == 0.0
