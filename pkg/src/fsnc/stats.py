"""Accuracy summaries: mean and 95% confidence half-width over repeats."""

from __future__ import annotations

import math
from typing import Sequence

Z_95 = 1.96


def sample_std(series: Sequence[float]) -> float:
    n = len(series)
    if n < 2:
        return 0.0
    mean = math.fsum(series) / n
    return math.sqrt(math.fsum((a - mean) ** 2 for a in series) / (n - 1))


def summarize(series: Sequence[float]) -> tuple[float, float]:
    """``(mean, 1.96 * s / sqrt(n))`` with ``s`` the sample standard deviation."""
    series = [float(a) for a in series]
    if not series:
        raise ValueError("cannot summarize an empty accuracy series")
    n = len(series)
    mean = math.fsum(series) / n
    if n == 1:
        return mean, 0.0
    return mean, Z_95 * sample_std(series) / math.sqrt(n)


def accuracy(predictions, labels) -> float:
    """Fraction of exact matches, counted in integers."""
    predictions, labels = list(predictions), list(labels)
    if len(predictions) != len(labels) or not labels:
        raise ValueError("predictions and labels must be non-empty and equally long")
    return sum(int(p == y) for p, y in zip(predictions, labels)) / len(labels)
