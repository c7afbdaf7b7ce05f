"""Descriptive statistics, histograms and percentile bootstrap intervals."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .sim import SimLog

# resamples are drawn in blocks of about this many indices to bound memory
_BLOCK_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean: float
    median: float
    std: float
    variance: float
    min: float
    max: float


@dataclass(frozen=True)
class BootstrapCI:
    level: float
    resamples: int
    lo: float
    hi: float
    seed: int


def _as_array(samples: Sequence[float]) -> np.ndarray:
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    if arr.size == 0:
        raise ValueError("cannot summarize an empty sample")
    return arr


def summarize(samples: Sequence[float]) -> SummaryStats:
    """Mean, median, sample standard deviation (n - 1), variance, min and max.

    A single-element sample has zero spread.
    """
    arr = _as_array(samples)
    variance = float(arr.var(ddof=1)) if arr.size > 1 else 0.0
    return SummaryStats(
        n=int(arr.size),
        mean=float(arr.mean()),
        median=float(np.median(arr)),
        std=float(np.sqrt(variance)),
        variance=variance,
        min=float(arr.min()),
        max=float(arr.max()),
    )


def bootstrap_ci(
    samples: Sequence[float],
    level: float = 0.95,
    resamples: int = 10_000,
    seed: int = 0,
) -> BootstrapCI:
    """Percentile bootstrap interval for the mean.

    Draws ``resamples`` resamples of size n with replacement, takes the mean
    of each and returns the (1 - level)/2 and (1 + level)/2 empirical
    percentiles. The same (samples, level, resamples, seed) always gives the
    same interval.
    """
    arr = _as_array(samples)
    if arr.size < 2:
        raise ValueError("bootstrap needs at least two samples")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if resamples < 1:
        raise ValueError("resamples must be >= 1")

    rng = np.random.default_rng(seed)
    n = arr.size
    block = max(1, _BLOCK_ELEMENTS // n)
    means = np.empty(resamples)
    for start in range(0, resamples, block):
        stop = min(start + block, resamples)
        idx = rng.integers(0, n, size=(stop - start, n))
        means[start:stop] = arr[idx].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.percentile(means, [100 * alpha, 100 * (1 - alpha)])
    # a constant sample resamples to identical means; keep lo == hi exact
    lo, hi = float(lo), float(hi)
    if np.all(arr == arr[0]):
        lo = hi = float(arr[0])
    return BootstrapCI(level=level, resamples=resamples, lo=lo, hi=hi, seed=seed)


def histogram(samples: Sequence[float], bins: int) -> list[tuple[float, float, int]]:
    """Equal-width bins over [min, max]; the last bin includes its right edge."""
    arr = _as_array(samples)
    if bins < 1:
        raise ValueError("bins must be >= 1")
    counts, edges = np.histogram(arr, bins=bins)
    return [(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(bins)]


def velocity_difference_series(log: SimLog, id_a: int, id_b: int) -> list[float]:
    """Per-tick ``v_a - v_b``."""
    va = log.series(id_a, "v")
    vb = log.series(id_b, "v")
    return [a - b for a, b in zip(va, vb)]


def pooled_std(series: Sequence[Sequence[float]]) -> float:
    """Square root of the mean of the per-series sample variances."""
    variances = [np.var(np.asarray(s, dtype=float), ddof=1) for s in series]
    return float(np.sqrt(np.mean(variances)))
