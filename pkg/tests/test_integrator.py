import math
from dataclasses import replace

import numpy as np
import pytest

from src.config import IntegratorConfig
from src.errors import UnderResolvedError
from src.experiment.traces import delay_trace
from src.physics.integrator import (
    bloch_norm_steps,
    evolve,
    integrate_ensemble,
    nutation_angle,
    rhs,
    trajectory,
)
from src.physics.units import (
    GROUND_STATE,
    BlochState,
    PulseProgram,
    SystemParams,
    pulse_area,
    wavenumber_to_angfreq,
)

GRID = np.arange(0.0, 601.0, 10.0)


def test_rhs_at_ground_state():
    params = SystemParams(0.03, math.inf, 0.0, 31.849)
    du, dv, dw = rhs(GROUND_STATE, 0.06, params)
    assert (du, dv, dw) == pytest.approx((0.0, 0.06, 0.0))


def test_rhs_dephasing_and_detuning():
    params = SystemParams(0.0, 50.0, 0.01, 31.849)
    du, dv, dw = rhs(BlochState(0.5, 0.0, 0.0), 0.0, params)
    assert du == pytest.approx(-0.01)
    assert dv == pytest.approx(0.005)
    assert dw == 0.0


def test_step_must_resolve_pulse(tau_p):
    params = SystemParams(0.03, 40.0, 0.0, tau_p)
    with pytest.raises(UnderResolvedError):
        evolve(params, PulseProgram(), IntegratorConfig(step=tau_p / 4))


def test_area_theorem(tau_p, wide_cfg):
    # Coincident in-phase pulses: total area is twice the single-pulse area
    thetas = np.array([math.pi / 4, math.pi / 2, math.pi, 2 * math.pi])
    omegas = thetas / (2 * pulse_area(1.0, tau_p))
    n = len(omegas)
    res = integrate_ensemble(omegas, np.full(n, math.inf), np.zeros(n), tau_p, [0.0], 0.0, wide_cfg)
    expected = np.sin(thetas / 2) ** 2
    assert np.max(np.abs(res.rho11[:, 0] - expected)) < 1e-6


def test_pi_pulse_inverts(tau_p, wide_cfg):
    omega = math.pi / (2 * pulse_area(1.0, tau_p))
    params = SystemParams(omega, math.inf, 0.0, tau_p)
    state = evolve(params, PulseProgram(0.0, 0.0, 8.0), wide_cfg)
    assert state.w == pytest.approx(1.0, abs=1e-6)
    assert state.rho11 == pytest.approx(1.0, abs=1e-6)


def test_delay_invariance_without_dephasing(tau_p, wide_cfg):
    cfg = replace(wide_cfg, step=0.1)
    params = SystemParams(0.02, math.inf, 0.0, tau_p)
    trace = delay_trace(params, 0.0, GRID, cfg)
    assert trace.values.max() - trace.values.min() < 1e-6


def test_pi_phase_cancels(tau_p, wide_cfg):
    cfg = replace(wide_cfg, step=0.1)
    params = SystemParams(0.03, math.inf, 0.0, tau_p)
    trace = delay_trace(params, math.pi, GRID, cfg)
    assert np.all(trace.values < 1e-9)
    assert trace.values[0] == 0.0


def test_fourth_order_convergence(tau_p):
    omegas = [0.06, 0.09, 0.12]
    t2s = [40.0, 30.0, math.inf]
    deltas = [wavenumber_to_angfreq(d) for d in (200.0, 100.0, 300.0)]
    rho = {
        h: integrate_ensemble(omegas, t2s, deltas, tau_p, [0.0], 0.0,
                              IntegratorConfig(step=h)).rho11[:, 0]
        for h in (0.2, 0.1, 0.05)
    }
    coarse = np.abs(rho[0.2] - rho[0.1])
    fine = np.abs(rho[0.1] - rho[0.05])
    ratio = coarse / fine
    assert np.all((ratio >= 12) & (ratio <= 20))


def test_norm_never_grows(tau_p):
    rng = np.random.default_rng(7)
    n = 1000
    omegas = rng.uniform(0.0, 0.12, n)
    t2s = rng.uniform(15.0, 200.0, n)
    deltas = wavenumber_to_angfreq(1.0) * rng.uniform(-300.0, 300.0, n)
    res = integrate_ensemble(omegas, t2s, deltas, tau_p, [0.0], 0.0,
                             IntegratorConfig(step=0.1), record=True)
    assert bloch_norm_steps(res).max() <= 1e-9


def test_detuning_sign_symmetry(tau_p, fast_cfg):
    for phase in (0.0, math.pi):
        plus = delay_trace(SystemParams(0.03, 60.0, 0.015, tau_p), phase, GRID, fast_cfg)
        minus = delay_trace(SystemParams(0.03, 60.0, -0.015, tau_p), phase, GRID, fast_cfg)
        np.testing.assert_allclose(plus.values, minus.values, atol=1e-12)


def test_trajectory_ends_at_evolve(tau_p, fast_cfg):
    params = SystemParams(0.06, 40.0, 0.0, tau_p)
    prog = PulseProgram(0.0, 0.0, fast_cfg.readout_offset)
    traj = trajectory(params, prog, fast_cfg)
    assert traj.final == evolve(params, prog, fast_cfg)
    assert traj.times[0] == pytest.approx(-fast_cfg.start_offset * tau_p)
    assert traj.times[-1] == pytest.approx(fast_cfg.readout_offset * tau_p)


def test_trace_point_matches_evolve_bit_for_bit(tau_p, fast_cfg):
    params = SystemParams(0.06, 40.0, 0.0, tau_p)
    trace = delay_trace(params, 0.0, GRID, fast_cfg)
    for delay in (0.0, 250.0, 600.0):
        state = evolve(params, PulseProgram(delay, 0.0, fast_cfg.readout_offset), fast_cfg)
        assert trace.value_at(delay) == (1.0 + state.w) / 2.0


def test_trajectory_norm_decays_with_dephasing(tau_p, fast_cfg):
    params = SystemParams(0.03, 40.0, 0.0, tau_p)
    traj = trajectory(params, PulseProgram(400.0), fast_cfg)
    lengths = traj.lengths()
    assert lengths[0] == 1.0
    assert np.all(np.diff(lengths) <= 1e-9)
    assert lengths[-1] < 0.9


def test_strong_drive_nutates_full_cycle(tau_p, fast_cfg):
    params = SystemParams(0.06, 40.0, 0.0, tau_p)
    traj = trajectory(params, PulseProgram(0.0), fast_cfg)
    assert nutation_angle(traj) > 2 * math.pi


def test_weak_drive_nutates_less_than_half_cycle(tau_p, fast_cfg):
    params = SystemParams(0.01, 40.0, 0.0, tau_p)
    traj = trajectory(params, PulseProgram(0.0), fast_cfg)
    assert nutation_angle(traj) < math.pi


@pytest.mark.parametrize("phase", [0.0, math.pi])
@pytest.mark.parametrize("delay", [0.0, 120.0])
def test_real_drive_keeps_u_zero(tau_p, fast_cfg, phase, delay):
    params = SystemParams(0.04, math.inf, 0.0, tau_p)
    traj = trajectory(params, PulseProgram(delay, phase), fast_cfg)
    assert np.all(traj.u == 0.0)
    assert np.any(traj.v != 0.0)
