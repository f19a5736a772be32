import math

import numpy as np
import pytest

from src.config import DelayGridConfig, IntegratorConfig
from src.errors import DomainError
from src.experiment.traces import (
    COHERENCE_V,
    COUNTS,
    MEASURED,
    DelayTrace,
    average_traces,
    coherence_decay_time,
    coherence_trace,
    default_delays,
    delay_trace,
    parse_grid,
    phase_pair,
    rabi_curve,
    simulate_traces,
    trajectory_pair,
)
from src.physics.units import SystemParams, pulse_area, wavenumber_to_angfreq

GRID = default_delays()


def test_default_delays_include_stop():
    assert len(GRID) == 61
    assert GRID[0] == 0.0
    assert GRID[-1] == 600.0
    assert len(default_delays(DelayGridConfig(0.0, 600.0, 20.0))) == 31


def test_parse_grid():
    assert len(parse_grid("0:600:10")) == 61
    np.testing.assert_array_equal(parse_grid("5"), [5.0])
    with pytest.raises(DomainError):
        parse_grid("0:600")
    with pytest.raises(DomainError):
        parse_grid("a:b:c")
    with pytest.raises(DomainError):
        parse_grid("0:600:0")


def test_delay_trace_validation():
    with pytest.raises(DomainError):
        DelayTrace([0.0, 10.0, 10.0], [0.1, 0.2, 0.3])
    with pytest.raises(DomainError):
        DelayTrace([], [])
    with pytest.raises(DomainError):
        DelayTrace([0.0, 10.0], [0.1])
    with pytest.raises(DomainError):
        DelayTrace([0.0, 10.0], [5.0, -1.0], MEASURED, quantity=COUNTS)
    with pytest.raises(DomainError):
        DelayTrace([0.0, 10.0], [0.5, 1.5])
    DelayTrace([0.0, 10.0], [-0.5, 0.5], quantity=COHERENCE_V)


def test_value_at_and_window():
    trace = DelayTrace([0.0, 550.0, 580.0, 600.0], [4.0, 3.0, 2.0, 1.0], MEASURED, quantity=COUNTS)
    assert trace.value_at(580.0) == 2.0
    with pytest.raises(KeyError):
        trace.value_at(590.0)
    np.testing.assert_array_equal(trace.window(550.0, 600.0), [3.0, 2.0, 1.0])
    assert trace.samples[0] == (0.0, 4.0)


def test_simulate_rejects_bad_grids(fig3_params, fast_cfg):
    with pytest.raises(DomainError):
        delay_trace(fig3_params, 0.0, [], fast_cfg)
    with pytest.raises(DomainError):
        delay_trace(fig3_params, 0.0, [10.0, 0.0], fast_cfg)
    with pytest.raises(DomainError):
        delay_trace(fig3_params, 0.0, [-10.0, 0.0], fast_cfg)


def test_zero_drive_stays_in_ground_state(tau_p, fast_cfg):
    trace = delay_trace(SystemParams(0.0, 40.0, 0.0, tau_p), 0.0, GRID, fast_cfg)
    assert np.all(trace.values == 0.0)


def test_weak_drive_trace_decays_for_either_convention(tau_p, fast_cfg):
    trace = delay_trace(SystemParams(0.01, 40.0, 0.0, tau_p), 0.0, GRID, fast_cfg)
    first, last = trace.value_at(0.0), trace.value_at(600.0)
    assert last - first < 0
    assert 1.3 <= first / last <= 2.5


def test_phase_contrast_washes_out(fig3_params, fast_cfg):
    pair = phase_pair(fig3_params, GRID, fast_cfg)
    a, b = pair.in_phase.values, pair.out_of_phase.values
    relative = np.abs(a - b) / np.maximum(a, b)
    early = GRID < 60.0
    late = GRID >= 300.0
    assert relative[early].max() > 0.10
    assert relative[late].max() < 0.02
    assert pair.out_of_phase.phase == pytest.approx(math.pi)


def test_simulate_traces_share_one_integration(fig3_params, fast_cfg):
    rho, coh = simulate_traces(fig3_params, 0.0, GRID, fast_cfg)
    np.testing.assert_array_equal(rho.values, delay_trace(fig3_params, 0.0, GRID, fast_cfg).values)
    np.testing.assert_array_equal(coh.values, coherence_trace(fig3_params, 0.0, GRID, fast_cfg).values)
    assert coh.quantity == COHERENCE_V


def test_coherence_settles_after_dephasing(tau_p, fast_cfg):
    params = SystemParams(0.03, 40.0, 0.0, tau_p)
    coh = coherence_trace(params, 0.0, GRID, fast_cfg)
    # First-pulse coherence is gone after many T2*; only the second pulse's remains
    assert abs(coh.value_at(590.0) - coh.value_at(600.0)) < 1e-4
    with pytest.raises(DomainError):
        coherence_decay_time(delay_trace(params, 0.0, GRID, fast_cfg))


def test_coherence_decay_time_recovers_exponential():
    delays = np.arange(0.0, 401.0, 10.0)
    values = 0.05 + 0.4 * np.exp(-delays / 45.0)
    trace = DelayTrace(delays, values, quantity=COHERENCE_V)
    assert coherence_decay_time(trace) == pytest.approx(45.0, rel=1e-3)


def test_rabi_curve_follows_area_theorem(tau_p):
    cfg = IntegratorConfig(step=0.1, start_offset=8.0, readout_offset=8.0)
    amplitudes = np.linspace(0.0, 0.08, 9)
    curve = rabi_curve(tau_p, math.inf, 0.0, amplitudes, cfg)
    theta = np.array([2 * pulse_area(a, tau_p) for a in amplitudes])
    np.testing.assert_allclose(curve.rho11, np.sin(theta / 2) ** 2, atol=1e-6)


def test_rabi_curve_validates_amplitudes(tau_p, fast_cfg):
    with pytest.raises(DomainError):
        rabi_curve(tau_p, 40.0, 0.0, [], fast_cfg)
    with pytest.raises(DomainError):
        rabi_curve(tau_p, 40.0, 0.0, [0.02, 0.01], fast_cfg)
    with pytest.raises(DomainError):
        rabi_curve(tau_p, 40.0, 0.0, [-0.01, 0.01], fast_cfg)


def test_trajectory_pair_delays(fig3_params, fast_cfg):
    pair = trajectory_pair(fig3_params, fast_cfg)
    assert sorted(pair) == [0.0, 400.0]
    assert pair[400.0].times[-1] > pair[0.0].times[-1]


def test_average_traces():
    a = DelayTrace([0.0, 10.0], [100.0, 200.0], MEASURED, quantity=COUNTS)
    b = DelayTrace([0.0, 10.0], [300.0, 400.0], MEASURED, quantity=COUNTS)
    mean = average_traces([a, b])
    np.testing.assert_array_equal(mean.values, [200.0, 300.0])
    assert mean.kind == MEASURED
    with pytest.raises(DomainError):
        average_traces([])
    with pytest.raises(DomainError):
        average_traces([a, DelayTrace([0.0, 20.0], [1.0, 2.0], MEASURED, quantity=COUNTS)])


def test_drive_strength_flips_trace_slope(lab_tau_p, fast_cfg):
    weak = delay_trace(SystemParams(0.01, 40.0, 0.0, lab_tau_p), 0.0, GRID, fast_cfg)
    strong = delay_trace(SystemParams(0.06, 40.0, 0.0, lab_tau_p), 0.0, GRID, fast_cfg)
    assert weak.value_at(600.0) - weak.value_at(0.0) < 0
    assert 1.3 <= weak.value_at(0.0) / weak.value_at(600.0) <= 2.5
    assert strong.value_at(600.0) - strong.value_at(0.0) > 0


@pytest.mark.parametrize("omega_r0", [0.01, 0.03, 0.06])
@pytest.mark.parametrize("t2_star", [25.0, 40.0, 50.0])
@pytest.mark.parametrize("delta_cm", [0.0, 80.0])
def test_trace_flat_at_long_delay(lab_tau_p, fast_cfg, omega_r0, t2_star, delta_cm):
    params = SystemParams(omega_r0, t2_star, wavenumber_to_angfreq(delta_cm), lab_tau_p)
    trace = delay_trace(params, 0.0, [550.0, 600.0], fast_cfg)
    late = trace.value_at(600.0)
    assert abs(trace.value_at(550.0) - late) < 1e-3 * late


def test_rabi_curve_rises_then_falls_with_dephasing(tau_p, fast_cfg):
    amplitudes = parse_grid("0:0.12:0.0025")
    curve = rabi_curve(tau_p, 40.0, 0.0, amplitudes, fast_cfg)
    rho = curve.rho11
    falls = np.flatnonzero(np.diff(rho) < 0)
    assert falls.size > 0
    peak = int(falls[0])
    assert peak > 0
    assert rho[peak] > 0.5
    assert rho[peak:].min() < rho[peak] - 0.2


def test_coherence_decay_time_of_simulated_trace(tau_p, fast_cfg):
    params = SystemParams(0.02, 40.0, 0.0, tau_p)
    delays = parse_grid("150:450:5")
    decay = coherence_decay_time(coherence_trace(params, 0.0, delays, fast_cfg))
    assert 25.0 <= decay <= 50.0
    assert decay == pytest.approx(40.0, rel=0.1)
