"""Fixed-step RK4 integration of the RWA optical Bloch equations.

Every public entry point is a view of integrate_ensemble(), which advances a
whole (ensemble x delay) array of Bloch vectors at once. A single evolve()
call is the same kernel on a 1x1 array, so a trace point and the matching
evolve() agree bit for bit.

Population relaxation is not modelled: only the coherences (u, v) decay.
"""

import logging
from dataclasses import dataclass

import numpy as np

from src.config import IntegratorConfig
from src.errors import IntegrationError, UnderResolvedError
from src.physics.drive import envelope_shape, phase_factor
from src.physics.units import NORM_EPS, BlochState, PulseProgram, SystemParams

log = logging.getLogger("coherence-lab")

# Steps of envelope table computed at a time
_BLOCK_STEPS = 4096


@dataclass
class EnsembleResult:
    """Readout of integrate_ensemble(); arrays are shaped (ensemble, delay)."""
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    n_steps: np.ndarray
    step: np.ndarray
    # Only filled when record=True: times (n+1, delay), path_* (n+1, ensemble, delay)
    times: np.ndarray | None = None
    path_u: np.ndarray | None = None
    path_v: np.ndarray | None = None
    path_w: np.ndarray | None = None

    @property
    def rho11(self) -> np.ndarray:
        return (1.0 + self.w) / 2.0


@dataclass
class Trajectory:
    """Sampled Bloch vector at every integration step of one pulse program."""
    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self):
        for t, u, v, w in zip(self.times, self.u, self.v, self.w):
            yield float(t), BlochState(float(u), float(v), float(w))

    @property
    def final(self) -> BlochState:
        return BlochState(float(self.u[-1]), float(self.v[-1]), float(self.w[-1]))

    def lengths(self) -> np.ndarray:
        return np.sqrt(self.u ** 2 + self.v ** 2 + self.w ** 2)


def _derivs(u, v, w, re, im, rate, delta):
    du = im * w - delta * v - rate * u
    dv = delta * u - re * w - rate * v
    dw = re * v - im * u
    return du, dv, dw


def rhs(state: BlochState, omega: complex, params: SystemParams) -> tuple[float, float, float]:
    """(du/dt, dv/dt, dw/dt) for drive omega (rad/fs) in the laser frame."""
    omega = complex(omega)
    return _derivs(state.u, state.v, state.w, omega.real, omega.imag,
                   params.dephasing_rate, params.delta)


def _as_column(values) -> np.ndarray:
    return np.atleast_1d(np.asarray(values, dtype=float))[:, None]


def integrate_ensemble(omega_r0, t2_star, delta, tau_p: float, delays, phase: float,
                       cfg: IntegratorConfig, readout_offset: float | None = None,
                       record: bool = False, norm_check: bool = True) -> EnsembleResult:
    """Integrate every (parameter set, delay) pair from the ground state to readout.

    omega_r0, t2_star, delta are equal-length sequences describing the
    ensemble; delays is the delay axis shared by all members. Each delay gets
    its own step h = window / ceil(window / cfg.step) so the readout lands
    exactly at delay + readout_offset * tau_p. norm_check=False skips the
    unit-ball assertion for coarse exploratory steps.
    """
    if cfg.step >= tau_p / 4.0:
        raise UnderResolvedError(
            f"step {cfg.step} fs is too coarse for tau_p = {tau_p:.3f} fs (needs < tau_p/4)")
    if readout_offset is None:
        readout_offset = cfg.readout_offset

    omega = _as_column(omega_r0)
    rate = 1.0 / _as_column(t2_star)
    det = _as_column(delta)
    delays = np.atleast_1d(np.asarray(delays, dtype=float))
    n_members = omega.shape[0]
    n_delays = delays.shape[0]
    if not (rate.shape[0] == n_members and det.shape[0] == n_members):
        raise ValueError("omega_r0, t2_star and delta must have the same length")

    t0 = -cfg.start_offset * tau_p
    window = delays + readout_offset * tau_p - t0
    n_steps = np.maximum(np.ceil(window / cfg.step - 1e-9), 1).astype(np.int64)
    h = window / n_steps
    h2 = 0.5 * h
    h6 = h / 6.0
    n_max = int(n_steps.max())

    finish: dict[int, list[int]] = {}
    for k, n in enumerate(n_steps):
        finish.setdefault(int(n), []).append(k)

    cos_phi, sin_phi = phase_factor(phase)

    u = np.zeros((n_members, n_delays))
    v = np.zeros((n_members, n_delays))
    w = -np.ones((n_members, n_delays))
    out_u = np.empty_like(u)
    out_v = np.empty_like(u)
    out_w = np.empty_like(u)

    path_u, path_v, path_w = [], [], []
    if record:
        path_u.append(u.copy())
        path_v.append(v.copy())
        path_w.append(w.copy())

    for j0 in range(0, n_max, _BLOCK_STEPS):
        j1 = min(j0 + _BLOCK_STEPS, n_max)
        nodes = np.arange(j0, j1 + 1)[:, None]
        t_nodes = t0 + nodes * h
        t_mids = t0 + (nodes[:-1] + 0.5) * h
        re_n, im_n = envelope_shape(t_nodes, tau_p, delays, cos_phi, sin_phi)
        re_m, im_m = envelope_shape(t_mids, tau_p, delays, cos_phi, sin_phi)

        re0 = omega * re_n[0]
        im0 = omega * im_n[0]
        for i in range(j1 - j0):
            rem = omega * re_m[i]
            imm = omega * im_m[i]
            re1 = omega * re_n[i + 1]
            im1 = omega * im_n[i + 1]

            k1u, k1v, k1w = _derivs(u, v, w, re0, im0, rate, det)
            k2u, k2v, k2w = _derivs(u + h2 * k1u, v + h2 * k1v, w + h2 * k1w,
                                    rem, imm, rate, det)
            k3u, k3v, k3w = _derivs(u + h2 * k2u, v + h2 * k2v, w + h2 * k2w,
                                    rem, imm, rate, det)
            k4u, k4v, k4w = _derivs(u + h * k3u, v + h * k3v, w + h * k3w,
                                    re1, im1, rate, det)
            u = u + h6 * (k1u + 2.0 * (k2u + k3u) + k4u)
            v = v + h6 * (k1v + 2.0 * (k2v + k3v) + k4v)
            w = w + h6 * (k1w + 2.0 * (k2w + k3w) + k4w)
            re0, im0 = re1, im1

            done = finish.get(j0 + i + 1)
            if done is not None:
                out_u[:, done] = u[:, done]
                out_v[:, done] = v[:, done]
                out_w[:, done] = w[:, done]
            if record:
                path_u.append(u)
                path_v.append(v)
                path_w.append(w)

    norm2 = out_u ** 2 + out_v ** 2 + out_w ** 2
    if not np.all(np.isfinite(norm2)):
        raise IntegrationError("integration produced non-finite Bloch components")
    if norm_check and np.any(norm2 > 1.0 + NORM_EPS):
        raise IntegrationError(
            f"Bloch vector left the unit ball (max |r|^2 = {norm2.max():.12f})")

    result = EnsembleResult(u=out_u, v=out_v, w=out_w, n_steps=n_steps, step=h)
    if record:
        result.times = t0 + np.arange(n_max + 1)[:, None] * h
        result.path_u = np.stack(path_u)
        result.path_v = np.stack(path_v)
        result.path_w = np.stack(path_w)
    return result


def evolve(params: SystemParams, prog: PulseProgram,
           cfg: IntegratorConfig | None = None) -> BlochState:
    """State at readout, starting from the ground state (0, 0, -1)."""
    cfg = cfg or IntegratorConfig()
    res = integrate_ensemble([params.omega_r0], [params.t2_star], [params.delta],
                             params.tau_p, [prog.delay], prog.phase, cfg,
                             readout_offset=prog.readout_offset)
    return BlochState(float(res.u[0, 0]), float(res.v[0, 0]), float(res.w[0, 0]))


def trajectory(params: SystemParams, prog: PulseProgram,
               cfg: IntegratorConfig | None = None) -> Trajectory:
    """Bloch vector at every step of the evolve() window; last sample is evolve()'s result."""
    cfg = cfg or IntegratorConfig()
    res = integrate_ensemble([params.omega_r0], [params.t2_star], [params.delta],
                             params.tau_p, [prog.delay], prog.phase, cfg,
                             readout_offset=prog.readout_offset, record=True)
    n = int(res.n_steps[0]) + 1
    log.debug(f"trajectory: {n} samples, step {res.step[0]:.5f} fs")
    return Trajectory(
        times=res.times[:n, 0].copy(),
        u=res.path_u[:n, 0, 0].copy(),
        v=res.path_v[:n, 0, 0].copy(),
        w=res.path_w[:n, 0, 0].copy(),
    )


def nutation_angle(traj: Trajectory) -> float:
    """Net rotation (rad) of the Bloch vector in the v-w plane, measured from -w."""
    angles = np.unwrap(np.arctan2(traj.v, -traj.w))
    return float(abs(angles[-1] - angles[0]))


def bloch_norm_steps(res: EnsembleResult) -> np.ndarray:
    """Per-step change of |r| along a recorded ensemble, shaped (n, ensemble, delay)."""
    if res.path_u is None:
        raise ValueError("ensemble was integrated without record=True")
    lengths = np.sqrt(res.path_u ** 2 + res.path_v ** 2 + res.path_w ** 2)
    return np.diff(lengths, axis=0)
