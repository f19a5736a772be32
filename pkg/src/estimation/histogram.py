"""Distribution of fitted pure dephasing times across molecules."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import ks_2samp

from src.errors import DomainError
from src.estimation.fitter import FitResult


@dataclass
class T2Histogram:
    edges: np.ndarray    # fs, len(counts) + 1
    counts: np.ndarray

    @property
    def empty(self) -> bool:
        return self.counts.size == 0

    def rows(self) -> list[tuple[float, float, int]]:
        return [(float(lo), float(hi), int(c))
                for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts)]


def t2_histogram(results: list, bin_width: float) -> T2Histogram:
    """Left-closed bins of width bin_width from floor(min T2*) upward, converged fits only."""
    if not bin_width > 0:
        raise DomainError(f"bin width must be positive, got {bin_width}")
    values = np.array([r.params.t2_star for r in results
                       if isinstance(r, FitResult) and r.converged], dtype=float)
    if values.size == 0:
        return T2Histogram(edges=np.array([]), counts=np.array([], dtype=int))

    start = math.floor(values.min())
    n_bins = int(math.floor((values.max() - start) / bin_width)) + 1
    edges = start + bin_width * np.arange(n_bins + 1)
    index = np.floor((values - start) / bin_width).astype(int)
    counts = np.bincount(np.clip(index, 0, n_bins - 1), minlength=n_bins)
    return T2Histogram(edges=edges, counts=counts)


def histogram_mode(hist: T2Histogram) -> tuple[float, float]:
    """[lo, hi) of the most populated bin (first one on ties)."""
    if hist.empty:
        raise DomainError("histogram is empty")
    i = int(np.argmax(hist.counts))
    return float(hist.edges[i]), float(hist.edges[i + 1])


def compare_populations(fitted, generated) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and p-value."""
    result = ks_2samp(np.asarray(fitted, dtype=float), np.asarray(generated, dtype=float))
    return float(result.statistic), float(result.pvalue)
