"""Delay, phase-contrast, coherence and Rabi-flopping observables built on the integrator."""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from src.config import DelayGridConfig, IntegratorConfig
from src.errors import DomainError
from src.physics.integrator import Trajectory, integrate_ensemble, trajectory
from src.physics.units import PulseProgram, SystemParams
from src.utils.math_helpers import population

log = logging.getLogger("coherence-lab")

# Trace kinds
SIMULATED = "simulated"
MEASURED = "measured"

# Quantities
RHO11 = "rho11"
COHERENCE_V = "coherence_v"
COUNTS = "counts_per_s"

_SLACK = 1e-9


@dataclass
class DelayTrace:
    """Observable sampled on a strictly increasing delay grid at fixed relative phase."""
    delays: np.ndarray
    values: np.ndarray
    kind: str = SIMULATED
    phase: float = 0.0
    quantity: str = RHO11

    def __post_init__(self):
        self.delays = np.asarray(self.delays, dtype=float).reshape(-1)
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.kind not in (SIMULATED, MEASURED):
            raise DomainError(f"unknown trace kind {self.kind!r}")
        if len(self.delays) != len(self.values):
            raise DomainError(
                f"{len(self.delays)} delays but {len(self.values)} values")
        if len(self.delays) == 0:
            raise DomainError("trace has no samples")
        if np.any(np.diff(self.delays) <= 0):
            raise DomainError("trace delays must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("trace values must be finite")
        if self.kind == MEASURED and np.any(self.values < 0):
            raise DomainError("measured count rates must be non-negative")
        if self.kind == SIMULATED:
            lo = -1.0 if self.quantity == COHERENCE_V else 0.0
            if np.any(self.values < lo - _SLACK) or np.any(self.values > 1.0 + _SLACK):
                raise DomainError(f"simulated {self.quantity} values outside [{lo}, 1]")

    def __len__(self) -> int:
        return len(self.delays)

    @property
    def samples(self) -> list[tuple[float, float]]:
        return [(float(d), float(x)) for d, x in zip(self.delays, self.values)]

    def value_at(self, delay: float) -> float:
        hits = np.flatnonzero(np.isclose(self.delays, delay, rtol=0.0, atol=1e-9))
        if len(hits) == 0:
            raise KeyError(f"delay {delay} fs not on the trace grid")
        return float(self.values[hits[0]])

    def window(self, lo: float, hi: float) -> np.ndarray:
        """Values with lo <= delay <= hi."""
        mask = (self.delays >= lo - 1e-9) & (self.delays <= hi + 1e-9)
        return self.values[mask]


@dataclass
class PhasePair:
    in_phase: DelayTrace       # relative phase 0
    out_of_phase: DelayTrace   # relative phase pi


@dataclass
class RabiCurve:
    amplitudes: np.ndarray     # omega_r0, rad/fs
    rho11: np.ndarray


def default_delays(grid: DelayGridConfig | None = None) -> np.ndarray:
    """Delay grid with inclusive stop (0-600 fs in 10 fs steps by default)."""
    grid = grid or DelayGridConfig()
    if not grid.step > 0:
        raise DomainError(f"delay step must be positive, got {grid.step}")
    count = int(np.floor((grid.stop - grid.start) / grid.step + 1e-9)) + 1
    return grid.start + grid.step * np.arange(count)


def parse_grid(text: str) -> np.ndarray:
    """'start:stop:step' (stop inclusive) or a single number."""
    parts = text.split(":")
    try:
        numbers = [float(p) for p in parts]
    except ValueError:
        raise DomainError(f"grid {text!r} is not numeric") from None
    if len(numbers) == 1:
        return np.array(numbers)
    if len(numbers) != 3:
        raise DomainError(f"grid {text!r} must look like start:stop:step")
    return default_delays(DelayGridConfig(*numbers))


def _check_grid(delays) -> np.ndarray:
    delays = np.atleast_1d(np.asarray(delays, dtype=float))
    if delays.size == 0:
        raise DomainError("delay grid is empty")
    if np.any(np.diff(delays) <= 0):
        raise DomainError("delay grid must be strictly increasing")
    if np.any(delays < 0):
        raise DomainError("delays must be non-negative")
    return delays


def _readout(params: SystemParams, phase: float, delays, cfg: IntegratorConfig):
    return integrate_ensemble([params.omega_r0], [params.t2_star], [params.delta],
                              params.tau_p, delays, phase, cfg)


def _population(w_row: np.ndarray) -> np.ndarray:
    return np.array([population(w) for w in w_row])


def simulate_traces(params: SystemParams, phase: float, delays,
                    cfg: IntegratorConfig | None = None) -> tuple[DelayTrace, DelayTrace]:
    """(rho11 trace, coherence trace) from a single integration over the grid."""
    cfg = cfg or IntegratorConfig()
    delays = _check_grid(delays)
    res = _readout(params, phase, delays, cfg)
    populations = DelayTrace(delays, _population(res.w[0]), SIMULATED, phase, RHO11)
    coherences = DelayTrace(delays, res.v[0].copy(), SIMULATED, phase, COHERENCE_V)
    return populations, coherences


def delay_trace(params: SystemParams, phase: float, delays,
                cfg: IntegratorConfig | None = None) -> DelayTrace:
    """Excited-state population at readout for each delay."""
    return simulate_traces(params, phase, delays, cfg)[0]


def coherence_trace(params: SystemParams, phase: float, delays,
                    cfg: IntegratorConfig | None = None) -> DelayTrace:
    """v = i(rho21 - rho12) at readout for each delay."""
    return simulate_traces(params, phase, delays, cfg)[1]


def phase_pair(params: SystemParams, delays,
               cfg: IntegratorConfig | None = None) -> PhasePair:
    return PhasePair(
        in_phase=delay_trace(params, 0.0, delays, cfg),
        out_of_phase=delay_trace(params, np.pi, delays, cfg),
    )


def rabi_curve(tau_p: float, t2_star: float, delta: float, amplitudes,
               cfg: IntegratorConfig | None = None) -> RabiCurve:
    """rho11 versus peak Rabi frequency for coincident in-phase pulses (delay 0).

    Both pulses stay switched on, so the effective area is twice the
    single-pulse area, as in the single-pulse experiment.
    """
    cfg = cfg or IntegratorConfig()
    amplitudes = np.atleast_1d(np.asarray(amplitudes, dtype=float))
    if amplitudes.size == 0:
        raise DomainError("amplitude grid is empty")
    if np.any(amplitudes < 0):
        raise DomainError("amplitudes must be non-negative")
    if np.any(np.diff(amplitudes) <= 0):
        raise DomainError("amplitudes must be strictly increasing")
    # Validates tau_p, t2_star and delta
    SystemParams(0.0, t2_star, delta, tau_p)

    n = amplitudes.size
    res = integrate_ensemble(amplitudes, np.full(n, t2_star), np.full(n, delta),
                             tau_p, [0.0], 0.0, cfg)
    return RabiCurve(amplitudes=amplitudes, rho11=_population(res.w[:, 0]))


def trajectory_pair(params: SystemParams, cfg: IntegratorConfig | None = None,
                    delays=(0.0, 400.0), phase: float = 0.0) -> dict[float, Trajectory]:
    """Bloch-vector trajectories at a short and a long delay."""
    cfg = cfg or IntegratorConfig()
    return {
        float(d): trajectory(params, PulseProgram(float(d), phase, cfg.readout_offset), cfg)
        for d in delays
    }


def _decay(t, amplitude, tau, floor):
    return floor + amplitude * np.exp(-t / tau)


def coherence_decay_time(trace: DelayTrace, guess: float = 50.0) -> float:
    """Decay constant (fs) of a coherence trace towards its long-delay level."""
    if trace.quantity != COHERENCE_V:
        raise DomainError("coherence_decay_time needs a coherence trace")
    if len(trace) < 4:
        raise DomainError("need at least 4 points to fit a decay")
    t = trace.delays - trace.delays[0]
    y = trace.values
    p0 = (y[0] - y[-1], guess, y[-1])
    try:
        popt, _ = curve_fit(_decay, t, y, p0=p0,
                            bounds=([-2.0, 1e-3, -1.0], [2.0, 1e4, 1.0]), maxfev=5000)
    except RuntimeError as e:
        raise DomainError(f"coherence decay fit failed: {e}") from e
    log.debug(f"coherence decay fit: amplitude={popt[0]:.4g} tau={popt[1]:.4g} fs floor={popt[2]:.4g}")
    return float(popt[1])


def average_traces(traces: list[DelayTrace]) -> DelayTrace:
    """Pointwise mean of repeated measurements of one molecule on a shared grid."""
    if not traces:
        raise DomainError("no traces to average")
    first = traces[0]
    for other in traces[1:]:
        if len(other) != len(first) or not np.allclose(other.delays, first.delays):
            raise DomainError("repeated traces must share the same delay grid")
        if other.phase != first.phase:
            raise DomainError("repeated traces must share the same relative phase")
    mean = np.mean([t.values for t in traces], axis=0)
    return DelayTrace(first.delays.copy(), mean, first.kind, first.phase, first.quantity)
