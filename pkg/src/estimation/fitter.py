"""Recover (omega_r0, T2*, delta) from a measured delay trace.

The simulated rho11 curve is scaled so that its value at the anchor delay
(600 fs) matches the mean count rate of the measured tail (550-600 fs), and
the sum of squared residuals is minimised in two stages: a coarse grid over
the whole bounds box, then a Nelder-Mead simplex started from the best cell.
The grid stage is needed because the residual surface is multimodal in
omega_r0 (pulse areas theta and 2 pi - theta give similar traces).
"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from src.config import FitBounds, FitConfig, IntegratorConfig
from src.errors import DegenerateScaleError, UnfittableTraceError
from src.experiment.traces import MEASURED, DelayTrace, delay_trace
from src.physics.integrator import integrate_ensemble
from src.physics.units import SystemParams, angfreq_to_wavenumber, wavenumber_to_angfreq
from src.utils.math_helpers import from_unit_box, to_unit_box

log = logging.getLogger("coherence-lab")

# Anchor values at or below this count as zero population
_ANCHOR_FLOOR = 1e-12


@dataclass
class FitResult:
    params: SystemParams
    scale: float              # counts/s per unit rho11
    sse: float                # counts^2
    n_evals: int
    converged: bool
    residuals: np.ndarray     # scale * rho11 - counts, per measured point
    phase: float = 0.0
    seed: int | None = None   # seed that synthesised the input, when known

    def to_dict(self) -> dict:
        p = self.params
        return {
            "omega_r0_per_fs": p.omega_r0,
            "t2_star_fs": p.t2_star,
            "delta_cm": p.delta_cm,
            "delta_rad_per_fs": p.delta,
            "tau_p_fs": p.tau_p,
            "phase_rad": self.phase,
            "scale_cps": self.scale,
            "sse": self.sse,
            "n_evals": self.n_evals,
            "converged": self.converged,
            "residuals": [float(r) for r in self.residuals],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FitResult":
        params = SystemParams(
            omega_r0=float(data["omega_r0_per_fs"]),
            t2_star=float(data["t2_star_fs"]),
            delta=wavenumber_to_angfreq(float(data["delta_cm"])),
            tau_p=float(data["tau_p_fs"]),
        )
        return cls(
            params=params,
            scale=float(data["scale_cps"]),
            sse=float(data["sse"]),
            n_evals=int(data["n_evals"]),
            converged=bool(data["converged"]),
            residuals=np.asarray(data.get("residuals", []), dtype=float),
            phase=float(data.get("phase_rad", 0.0)),
            seed=data.get("seed"),
        )


@dataclass
class FitFailure:
    """A batch entry that could not be fit."""
    index: int
    message: str

    def to_dict(self) -> dict:
        return {"index": self.index, "error": self.message}


def scale_factor(measured: DelayTrace, simulated: DelayTrace,
                 tail: tuple[float, float] = (550.0, 600.0)) -> float:
    """Mean measured rate in the tail window divided by simulated rho11 at the window's end."""
    lo, hi = tail
    tail_values = measured.window(lo, hi)
    if tail_values.size == 0:
        raise DegenerateScaleError(f"no measured points between {lo} and {hi} fs")
    try:
        anchor = simulated.value_at(hi)
    except KeyError:
        raise DegenerateScaleError(f"simulated trace has no point at {hi} fs") from None
    tail_mean = float(np.mean(tail_values))
    if anchor <= _ANCHOR_FLOOR:
        raise DegenerateScaleError(f"simulated rho11({hi:g} fs) = {anchor:.3g} is zero")
    if tail_mean <= 0:
        raise DegenerateScaleError("measured tail mean is zero", scale=0.0)
    return tail_mean / anchor


def _simulation_grid(measured: DelayTrace, settings: FitConfig) -> tuple[np.ndarray, np.ndarray]:
    """Measured delays plus the anchor delay, and where the measured ones sit in it."""
    grid = np.union1d(measured.delays, [settings.tail_end])
    return grid, np.searchsorted(grid, measured.delays)


def _evaluate(measured: DelayTrace, candidate: SystemParams, phase: float,
              cfg: IntegratorConfig, settings: FitConfig):
    grid, where = _simulation_grid(measured, settings)
    simulated = delay_trace(candidate, phase, grid, cfg)
    scale = scale_factor(measured, simulated, (settings.tail_start, settings.tail_end))
    residuals = scale * simulated.values[where] - measured.values
    return float(np.sum(residuals ** 2)), scale, residuals


def objective(measured: DelayTrace, candidate: SystemParams, phase: float,
              cfg: IntegratorConfig | None = None, settings: FitConfig | None = None) -> float:
    """Sum of squared residuals of the scaled simulation; inf when the scale is degenerate."""
    cfg = cfg or IntegratorConfig()
    settings = settings or FitConfig()
    try:
        return _evaluate(measured, candidate, phase, cfg, settings)[0]
    except DegenerateScaleError:
        return math.inf


def _check_fittable(measured: DelayTrace, settings: FitConfig):
    if measured.kind != MEASURED:
        raise UnfittableTraceError("only measured traces can be fit")
    if len(measured) < settings.min_points:
        raise UnfittableTraceError(
            f"trace has {len(measured)} points, need at least {settings.min_points}")
    if measured.window(settings.tail_start, settings.tail_end).size == 0:
        raise UnfittableTraceError(
            f"trace has no points between {settings.tail_start:g} and {settings.tail_end:g} fs")
    if measured.delays[-1] < settings.tail_end - 1e-9:
        raise UnfittableTraceError(
            f"trace ends at {measured.delays[-1]:g} fs, before the {settings.tail_end:g} fs anchor")
    if measured.delays[0] > 0:
        log.warning(f"trace starts at {measured.delays[0]:g} fs; fitting the points present")


def _search_cfg(cfg: IntegratorConfig, step: float, tau_p: float) -> IntegratorConfig:
    """cfg with a coarser step for the search stages, if that step is still resolved."""
    if cfg.step < step < tau_p / 4.0:
        return replace(cfg, step=step)
    return cfg


def _grid_stage(measured: DelayTrace, bounds: FitBounds, phase: float,
                cfg: IntegratorConfig, settings: FitConfig):
    """sse of every grid cell, vectorised over cells and delays."""
    axes = [
        np.linspace(*bounds.omega_r0, settings.grid_omega),
        np.linspace(*bounds.t2_star, settings.grid_t2),
        np.linspace(*bounds.delta_cm, settings.grid_delta),
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    omegas, t2s, deltas_cm = (m.reshape(-1) for m in mesh)
    deltas = np.array([wavenumber_to_angfreq(d) for d in deltas_cm])

    grid_cfg = _search_cfg(cfg, settings.grid_step, bounds.tau_p)
    grid, where = _simulation_grid(measured, settings)
    anchor_index = int(np.searchsorted(grid, settings.tail_end))
    tail_mean = float(np.mean(measured.window(settings.tail_start, settings.tail_end)))

    sse = np.full(omegas.size, np.inf)
    chunk = max(1, settings.grid_chunk)
    for start in range(0, omegas.size, chunk):
        sl = slice(start, start + chunk)
        res = integrate_ensemble(omegas[sl], t2s[sl], deltas[sl], bounds.tau_p, grid,
                                 phase, grid_cfg, norm_check=False)
        rho = np.clip(res.rho11, 0.0, 1.0)
        anchor = rho[:, anchor_index]
        ok = (anchor > _ANCHOR_FLOOR) & (tail_mean > 0)
        scale = np.where(ok, tail_mean / np.where(ok, anchor, 1.0), 0.0)
        model = scale[:, None] * rho[:, where]
        cell_sse = np.sum((model - measured.values[None, :]) ** 2, axis=1)
        sse[sl] = np.where(ok, cell_sse, np.inf)
        log.debug(f"grid stage: cells {start}-{min(start + chunk, omegas.size)} of {omegas.size}")

    return axes, (omegas, t2s, deltas_cm), sse


def fit_trace(measured: DelayTrace, bounds: FitBounds | None = None, phase: float | None = None,
              cfg: IntegratorConfig | None = None, settings: FitConfig | None = None) -> FitResult:
    """Best-fit SystemParams for one measured trace (tau_p fixed by bounds.tau_p)."""
    settings = settings or FitConfig()
    bounds = bounds or settings.bounds
    cfg = cfg or IntegratorConfig()
    phase = measured.phase if phase is None else phase
    _check_fittable(measured, settings)

    axes, (omegas, t2s, deltas_cm), sse = _grid_stage(measured, bounds, phase, cfg, settings)
    if not np.any(np.isfinite(sse)):
        raise UnfittableTraceError("every grid cell gives a degenerate scale")
    best = int(np.argmin(sse))
    log.info(f"grid stage: best cell omega_r0={omegas[best]:.4f} rad/fs "
             f"T2*={t2s[best]:.1f} fs delta={deltas_cm[best]:.1f} cm^-1 (sse={sse[best]:.4g})")

    rows = bounds.as_rows()

    def to_params(x) -> SystemParams:
        omega, t2, d_cm = from_unit_box(x, rows)
        return SystemParams(omega, t2, wavenumber_to_angfreq(d_cm), bounds.tau_p)

    search_cfg = _search_cfg(cfg, settings.refine_step, bounds.tau_p)

    def cost(x) -> float:
        value = objective(measured, to_params(x), phase, search_cfg, settings)
        log.debug(f"simplex: x={np.round(x, 5)} sse={value:.6g}")
        return value

    x0 = np.array(to_unit_box((omegas[best], t2s[best], deltas_cm[best]), rows))
    simplex = [x0]
    for axis, values in enumerate(axes):
        spacing = 1.0 / max(len(values) - 1, 1)
        vertex = x0.copy()
        vertex[axis] += spacing if x0[axis] + spacing <= 1.0 else -spacing
        simplex.append(vertex)

    # Convergence is the simplex diameter alone
    result = minimize(cost, x0, method="Nelder-Mead", options={
        "initial_simplex": np.array(simplex),
        "xatol": settings.xatol,
        "fatol": math.inf,
        "maxfev": settings.maxfev,
    })

    params = to_params(result.x)
    try:
        final_sse, scale, residuals = _evaluate(measured, params, phase, cfg, settings)
    except DegenerateScaleError as e:
        raise UnfittableTraceError(f"refined parameters give a degenerate scale: {e}") from e

    converged = bool(result.success)
    n_evals = int(omegas.size + result.nfev + 1)
    if converged:
        log.info(f"fit converged: omega_r0={params.omega_r0:.5f} rad/fs T2*={params.t2_star:.2f} fs "
                 f"delta={params.delta_cm:.2f} cm^-1 sse={final_sse:.4g} ({n_evals} evaluations)")
    else:
        log.warning(f"simplex did not converge after {result.nfev} evaluations: {result.message}")

    return FitResult(params=params, scale=scale, sse=final_sse, n_evals=n_evals,
                     converged=converged, residuals=residuals, phase=phase)


def fit_summary(result: FitResult) -> str:
    p = result.params
    return (f"omega_r0={p.omega_r0:.5f} rad/fs  T2*={p.t2_star:.2f} fs  "
            f"delta={angfreq_to_wavenumber(p.delta):.2f} cm^-1  scale={result.scale:.1f} cps  "
            f"sse={result.sse:.4g}  converged={result.converged}")

