"""Complex envelope of the phase-locked double pulse in the rotating frame."""

import math
from dataclasses import dataclass

import numpy as np

# Residue left by cos/sin at multiples of pi/2
_PHASE_SNAP = 1e-15


@dataclass(frozen=True)
class DriveEnvelope:
    omega_r0: float   # rad/fs
    tau_p: float      # fs
    delay: float      # fs
    phase: float      # rad


def phase_factor(phase: float) -> tuple[float, float]:
    """(cos, sin) of the relative phase, snapped so that 0 and pi give real factors."""
    c = math.cos(phase)
    s = math.sin(phase)
    if abs(c) < _PHASE_SNAP:
        c = 0.0
    if abs(s) < _PHASE_SNAP:
        s = 0.0
    return c, s


def gaussian(t, tau_p: float):
    return np.exp(-0.5 * (t / tau_p) ** 2)


def envelope_shape(t, tau_p: float, delay, cos_phi: float, sin_phi: float):
    """Real and imaginary parts of the unit-amplitude envelope at time(s) t.

    Multiplying both by omega_r0 gives the drive. All integrator paths go
    through this function so their arithmetic is identical.
    """
    g1 = gaussian(t, tau_p)
    g2 = gaussian(t - delay, tau_p)
    return g1 + cos_phi * g2, sin_phi * g2


def drive_at(env: DriveEnvelope, t):
    """Omega(t) = omega_r0 * [g(t) + exp(i phase) g(t - delay)], rad/fs."""
    c, s = phase_factor(env.phase)
    re, im = envelope_shape(np.asarray(t, dtype=float), env.tau_p, env.delay, c, s)
    value = env.omega_r0 * re + 1j * (env.omega_r0 * im)
    if np.ndim(value) == 0:
        return complex(value)
    return value
