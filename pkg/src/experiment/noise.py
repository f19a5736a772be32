"""Poisson photon-counting noise for synthetic fit-validation data."""

import logging
from dataclasses import dataclass

import numpy as np

from src.errors import DomainError
from src.experiment.traces import COUNTS, MEASURED, RHO11, SIMULATED, DelayTrace

log = logging.getLogger("coherence-lab")


@dataclass(frozen=True)
class NoiseModel:
    scale: float = 2000.0   # counts/s at rho11 = 1
    dwell: float = 1.0      # s per delay point
    seed: int = 0

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError(f"noise scale must be positive, got {self.scale}")
        if not self.dwell > 0:
            raise DomainError(f"dwell time must be positive, got {self.dwell}")


def synth_counts(trace: DelayTrace, noise: NoiseModel) -> DelayTrace:
    """Replace each rho11 by Poisson(scale * rho11 * dwell) / dwell counts per second.

    Each call owns its generator, so concurrent calls never share RNG state.
    """
    if trace.kind != SIMULATED or trace.quantity != RHO11:
        raise DomainError("synth_counts needs a simulated rho11 trace")
    rng = np.random.default_rng(noise.seed)
    expected = noise.scale * np.clip(trace.values, 0.0, 1.0) * noise.dwell
    counts = rng.poisson(expected) / noise.dwell
    log.debug(f"synthesised {len(counts)} points, scale={noise.scale} cps, "
              f"dwell={noise.dwell} s, seed={noise.seed}")
    return DelayTrace(trace.delays.copy(), counts, MEASURED, trace.phase, COUNTS)


def noiseless_counts(trace: DelayTrace, scale: float) -> DelayTrace:
    """Simulated rho11 rescaled to count rates without shot noise."""
    if trace.kind != SIMULATED or trace.quantity != RHO11:
        raise DomainError("noiseless_counts needs a simulated rho11 trace")
    if not scale > 0:
        raise DomainError(f"scale must be positive, got {scale}")
    return DelayTrace(trace.delays.copy(), scale * trace.values, MEASURED, trace.phase, COUNTS)
