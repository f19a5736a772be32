"""Physical constants, unit conversions and the value types every module shares.

Times are in fs, angular frequencies in rad/fs, detunings on the command line
in cm^-1. The transition dipole, field amplitude and hbar only ever appear
through their product, the peak Rabi frequency omega_r0.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from src.errors import DomainError

# Speed of light in cm/fs
SPEED_OF_LIGHT_CM_PER_FS = constants.c * 100.0 * 1e-15

# Gaussian FWHM / sigma
FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))

# Tolerance on the Bloch vector norm
NORM_EPS = 1e-9

# Which envelope a quoted pulse FWHM refers to
FIELD = "field"
INTENSITY = "intensity"


def wavenumber_to_angfreq(nu_tilde: float) -> float:
    """cm^-1 -> rad/fs."""
    return 2.0 * math.pi * SPEED_OF_LIGHT_CM_PER_FS * nu_tilde


def angfreq_to_wavenumber(omega: float) -> float:
    """rad/fs -> cm^-1."""
    return omega / (2.0 * math.pi * SPEED_OF_LIGHT_CM_PER_FS)


def fwhm_to_tau(fwhm: float, convention: str = FIELD) -> float:
    """Pulse FWHM -> Gaussian width tau_p of the field envelope exp(-t^2 / 2 tau_p^2).

    With convention="intensity" the FWHM is read off |f(t)|^2, which is
    sqrt(2) narrower than the field envelope.
    """
    if not fwhm > 0:
        raise DomainError(f"pulse FWHM must be positive, got {fwhm}")
    if convention == INTENSITY:
        fwhm = fwhm * math.sqrt(2.0)
    elif convention != FIELD:
        raise DomainError(f"FWHM convention must be {FIELD!r} or {INTENSITY!r}, got {convention!r}")
    return fwhm / FWHM_PER_SIGMA


def pulse_area(omega_r0: float, tau_p: float) -> float:
    """Area of one Gaussian pulse, the integral of omega_r0 * exp(-t^2 / 2 tau_p^2)."""
    if omega_r0 < 0:
        raise DomainError(f"omega_r0 must be non-negative, got {omega_r0}")
    if not tau_p > 0:
        raise DomainError(f"tau_p must be positive, got {tau_p}")
    return math.sqrt(2.0 * math.pi) * omega_r0 * tau_p


def linewidth_to_min_dephasing(fwhm_wavenumber: float) -> float:
    """Lower bound on T2* implied by a Lorentzian line of the given FWHM (cm^-1)."""
    if not fwhm_wavenumber > 0:
        raise DomainError(f"line width must be positive, got {fwhm_wavenumber}")
    return 2.0 / wavenumber_to_angfreq(fwhm_wavenumber)


@dataclass(frozen=True)
class SystemParams:
    """One molecule plus its drive. t2_star may be math.inf (no dephasing)."""
    omega_r0: float
    t2_star: float
    delta: float
    tau_p: float

    def __post_init__(self):
        if not (self.omega_r0 >= 0 and math.isfinite(self.omega_r0)):
            raise DomainError(f"omega_r0 must be finite and >= 0, got {self.omega_r0}")
        if not self.tau_p > 0 or not math.isfinite(self.tau_p):
            raise DomainError(f"tau_p must be finite and > 0, got {self.tau_p}")
        if not self.t2_star > 0:
            raise DomainError(f"t2_star must be > 0 or inf, got {self.t2_star}")
        if not math.isfinite(self.delta):
            raise DomainError(f"delta must be finite, got {self.delta}")

    @classmethod
    def from_lab_units(cls, omega_r0: float, t2_star: float, delta_cm: float,
                       fwhm: float, convention: str = FIELD) -> "SystemParams":
        return cls(
            omega_r0=omega_r0,
            t2_star=t2_star,
            delta=wavenumber_to_angfreq(delta_cm),
            tau_p=fwhm_to_tau(fwhm, convention),
        )

    @property
    def dephasing_rate(self) -> float:
        """1/T2*, zero for infinite T2*."""
        return 1.0 / self.t2_star

    @property
    def delta_cm(self) -> float:
        return angfreq_to_wavenumber(self.delta)


@dataclass(frozen=True)
class PulseProgram:
    delay: float = 0.0
    phase: float = 0.0
    readout_offset: float = 3.0

    def __post_init__(self):
        if not (self.delay >= 0 and math.isfinite(self.delay)):
            raise DomainError(f"delay must be finite and >= 0, got {self.delay}")
        if not math.isfinite(self.phase):
            raise DomainError(f"phase must be finite, got {self.phase}")
        if self.readout_offset < 3:
            raise DomainError(f"readout_offset must be >= 3, got {self.readout_offset}")


@dataclass(frozen=True)
class BlochState:
    """Tip of the Bloch vector: u = 2 Re rho21, v = -2 Im rho21, w = rho11 - rho22."""
    u: float
    v: float
    w: float

    def __post_init__(self):
        norm2 = self.u * self.u + self.v * self.v + self.w * self.w
        if not norm2 <= 1.0 + NORM_EPS:
            raise DomainError(f"Bloch vector outside the unit ball: |r|^2 = {norm2}")

    @property
    def length(self) -> float:
        return math.sqrt(self.u * self.u + self.v * self.v + self.w * self.w)

    @property
    def rho11(self) -> float:
        return (1.0 + self.w) / 2.0

    @property
    def rho22(self) -> float:
        return (1.0 - self.w) / 2.0

    @property
    def rho21(self) -> complex:
        return complex(self.u, -self.v) / 2.0

    @property
    def rho12(self) -> complex:
        return complex(self.u, self.v) / 2.0

    def to_density_matrix(self) -> np.ndarray:
        """2x2 density matrix in the basis (|1>, |2>)."""
        return np.array([[self.rho11, self.rho12],
                         [self.rho21, self.rho22]], dtype=complex)

    @classmethod
    def from_density_matrix(cls, rho: np.ndarray) -> "BlochState":
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (2, 2):
            raise DomainError(f"density matrix must be 2x2, got shape {rho.shape}")
        rho21 = rho[1, 0]
        rho12 = rho[0, 1]
        return cls(
            u=float((rho21 + rho12).real),
            v=float((1j * (rho21 - rho12)).real),
            w=float((rho[0, 0] - rho[1, 1]).real),
        )

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.u, self.v, self.w)


GROUND_STATE = BlochState(0.0, 0.0, -1.0)
