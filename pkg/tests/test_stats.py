import math

import pytest

from fsnc.stats import accuracy, sample_std, summarize

from oracles import sample_std as oracle_std

# frozen from 1.96 * oracles.sample_std([0.4, 0.6]) / sqrt(2)
CI_40_60 = 0.19599999999999995


def test_identical_repeats_have_zero_width():
    assert summarize([0.5] * 5) == (0.5, 0.0)


def test_two_point_interval():
    mean, ci = summarize([0.4, 0.6])
    assert mean == pytest.approx(0.5, abs=1e-15)
    assert ci == pytest.approx(CI_40_60, abs=1e-12)
    assert 1.96 * oracle_std([0.4, 0.6]) / math.sqrt(2) == pytest.approx(CI_40_60, abs=1e-15)


def test_single_repeat():
    assert summarize([0.7]) == (0.7, 0.0)


def test_empty_series_rejected():
    with pytest.raises(ValueError, match="empty"):
        summarize([])


def test_std_matches_oracle():
    xs = [0.61, 0.63, 0.58, 0.66, 0.6]
    assert sample_std(xs) == pytest.approx(oracle_std(xs), abs=1e-15)


def test_order_and_scaling():
    xs = [0.2, 0.9, 0.55, 0.41]
    m, c = summarize(xs)
    assert summarize(xs[::-1]) == pytest.approx((m, c), abs=1e-15)
    m2, c2 = summarize([x / 2 for x in xs])
    assert m2 == pytest.approx(m / 2, abs=1e-15) and c2 == pytest.approx(c / 2, abs=1e-15)


def test_accuracy():
    assert accuracy([0, 1, 1, 0], [0, 1, 0, 0]) == 0.75
    assert accuracy([2], [2]) == 1.0
    for bad in [([], []), ([0], [0, 1])]:
        with pytest.raises(ValueError):
            accuracy(*bad)
