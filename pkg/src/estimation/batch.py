"""Independent fits over many molecules, fanned out over worker threads."""

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from src.config import FitBounds, FitConfig, IntegratorConfig
from src.errors import CoherenceLabError
from src.estimation.fitter import FitFailure, FitResult, fit_trace
from src.physics.units import SystemParams, wavenumber_to_angfreq

log = logging.getLogger("coherence-lab")


class BatchProgress:
    """Counts finished fits from the worker threads. All public methods are thread-safe."""

    def __init__(self, total: int):
        self._lock = threading.Lock()
        self._total = total
        self._done = 0
        self._failed = 0
        self._not_converged = 0
        self._started = time.monotonic()

    def record(self, outcome):
        with self._lock:
            self._done += 1
            if isinstance(outcome, FitFailure):
                self._failed += 1
            elif not outcome.converged:
                self._not_converged += 1
            done, total = self._done, self._total
        log.info(f"batch: {done}/{total} traces fitted")

    def get_snapshot(self) -> dict:
        with self._lock:
            return {
                "total": self._total,
                "done": self._done,
                "failed": self._failed,
                "not_converged": self._not_converged,
                "elapsed": time.monotonic() - self._started,
            }


def batch_fit(traces: list, bounds: FitBounds | None = None,
              cfg: IntegratorConfig | None = None, settings: FitConfig | None = None,
              jobs: int = 1, progress: BatchProgress | None = None) -> list:
    """fit_trace over every trace; order is preserved and failures become FitFailure entries."""
    if not traces:
        return []
    progress = progress or BatchProgress(len(traces))

    def fit_one(item):
        index, trace = item
        try:
            outcome = fit_trace(trace, bounds, trace.phase, cfg, settings)
        except CoherenceLabError as e:
            log.warning(f"batch: trace {index} failed: {e}")
            outcome = FitFailure(index=index, message=str(e))
        progress.record(outcome)
        return outcome

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        outcomes = list(pool.map(fit_one, enumerate(traces)))

    snap = progress.get_snapshot()
    log.info(f"batch finished in {snap['elapsed']:.1f} s: {snap['failed']} failed, "
             f"{snap['not_converged']} not converged")
    return outcomes


def converged_results(outcomes: list) -> list[FitResult]:
    return [o for o in outcomes if isinstance(o, FitResult) and o.converged]


def synth_population(n: int, rng: np.random.Generator, tau_p: float,
                     t2_range: tuple[float, float] = (25.0, 110.0), t2_mode: float = 60.0,
                     omega_range: tuple[float, float] = (0.01, 0.06),
                     delta_cm_range: tuple[float, float] = (0.0, 100.0)) -> list[SystemParams]:
    """Synthetic molecules with T2* from a triangular law peaked at t2_mode."""
    t2s = rng.triangular(t2_range[0], t2_mode, t2_range[1], size=n)
    omegas = rng.uniform(*omega_range, size=n)
    deltas_cm = rng.uniform(*delta_cm_range, size=n)
    return [
        SystemParams(float(o), float(t2), wavenumber_to_angfreq(float(d)), tau_p)
        for o, t2, d in zip(omegas, t2s, deltas_cm)
    ]
