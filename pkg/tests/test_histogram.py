import numpy as np
import pytest

from src.errors import DomainError
from src.estimation.fitter import FitFailure, FitResult
from src.estimation.histogram import compare_populations, histogram_mode, t2_histogram
from src.physics.units import SystemParams


def _result(t2: float, converged: bool = True) -> FitResult:
    return FitResult(params=SystemParams(0.03, t2, 0.0, 31.849), scale=2000.0, sse=1.0,
                     n_evals=100, converged=converged, residuals=np.zeros(3))


def test_single_result_single_bin():
    hist = t2_histogram([_result(60.0)], 10.0)
    np.testing.assert_array_equal(hist.edges, [60.0, 70.0])
    np.testing.assert_array_equal(hist.counts, [1])


def test_bins_are_left_closed():
    hist = t2_histogram([_result(25.0), _result(25.0), _result(35.0)], 10.0)
    np.testing.assert_array_equal(hist.counts, [2, 1])
    assert hist.rows() == [(25.0, 35.0, 2), (35.0, 45.0, 1)]


def test_edges_start_at_floor_of_minimum():
    hist = t2_histogram([_result(25.7), _result(58.2), _result(31.0)], 10.0)
    assert hist.edges[0] == 25.0
    assert hist.counts.sum() == 3
    assert hist.edges[-1] > 58.2


def test_only_converged_fits_counted():
    results = [_result(40.0), _result(90.0, converged=False), FitFailure(2, "no tail"), _result(44.0)]
    hist = t2_histogram(results, 10.0)
    assert hist.counts.sum() == 2


def test_no_converged_fits_gives_empty_histogram():
    hist = t2_histogram([_result(40.0, converged=False), FitFailure(0, "short")], 10.0)
    assert hist.empty
    assert hist.rows() == []
    with pytest.raises(DomainError):
        histogram_mode(hist)


def test_bin_width_must_be_positive():
    with pytest.raises(DomainError):
        t2_histogram([_result(40.0)], 0.0)


def test_mode_bin():
    results = [_result(t) for t in (28.0, 55.0, 61.0, 63.0, 66.0, 90.0)]
    hist = t2_histogram(results, 10.0)
    assert histogram_mode(hist) == (58.0, 68.0)


def test_compare_identical_populations():
    sample = [30.0, 45.0, 60.0, 61.0, 75.0, 100.0]
    statistic, pvalue = compare_populations(sample, sample)
    assert statistic == 0.0
    assert pvalue == pytest.approx(1.0)


def test_compare_disjoint_populations():
    statistic, pvalue = compare_populations(np.linspace(20, 40, 30), np.linspace(80, 100, 30))
    assert statistic == 1.0
    assert pvalue < 0.05
