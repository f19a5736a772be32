"""Plot-ready data behind each published figure.

Every recipe takes the loaded Config, an output directory and a seed, writes
its columns there and returns the paths written.
"""

import logging
import math
from pathlib import Path

import numpy as np

from src.config import Config
from src.errors import DomainError
from src.estimation.batch import batch_fit, converged_results, synth_population
from src.estimation.histogram import compare_populations, histogram_mode, t2_histogram
from src.experiment.noise import NoiseModel, synth_counts
from src.experiment.traces import (
    coherence_decay_time,
    default_delays,
    phase_pair,
    rabi_curve,
    simulate_traces,
    trajectory_pair,
)
from src.physics.integrator import nutation_angle
from src.physics.units import SystemParams, pulse_area, wavenumber_to_angfreq
from src.trace_io import write_json, write_table, write_trace_file

log = logging.getLogger("coherence-lab")

# Rabi frequencies of the three delay-trace regimes (rad/fs)
FIG2_OMEGAS = (0.01, 0.03, 0.06)
FIG2_T2 = 40.0
FIG3_PARAMS = (0.03, 60.0, 80.0)     # omega_r0 rad/fs, T2* fs, delta cm^-1
S1_AMPLITUDES = np.linspace(0.0, 0.12, 49)
S2_MOLECULES = 53
S2_BIN_WIDTH = 10.0


def _tau_p(config: Config) -> float:
    return config.pulse.tau_p()


def fig2(config: Config, out_dir: Path, seed: int, jobs: int = 1) -> list[Path]:
    """Delay traces for weak, medium and strong drive, plus trajectories at 0 and 400 fs."""
    tau_p = _tau_p(config)
    delays = default_delays(config.delays)
    written = []
    for omega in FIG2_OMEGAS:
        params = SystemParams(omega, FIG2_T2, 0.0, tau_p)
        rho, coh = simulate_traces(params, 0.0, delays, config.integrator)
        path = out_dir / f"fig2_omega_{omega:g}.csv"
        write_trace_file(rho, path, coh)
        written.append(path)
        log.info(f"fig2: omega_r0={omega} rho11(0)={rho.values[0]:.4f} "
                 f"rho11({delays[-1]:g})={rho.values[-1]:.4f}")

    strong = SystemParams(FIG2_OMEGAS[-1], FIG2_T2, 0.0, tau_p)
    for delay, traj in trajectory_pair(strong, config.integrator).items():
        path = out_dir / f"fig2_trajectory_{delay:g}.csv"
        write_table(path, ["time_fs", "u", "v", "w"], [traj.times, traj.u, traj.v, traj.w])
        written.append(path)
        log.info(f"fig2: trajectory at {delay:g} fs nutates {nutation_angle(traj) / math.pi:.2f} pi")
    return written


def fig3(config: Config, out_dir: Path, seed: int, jobs: int = 1) -> list[Path]:
    """Delay traces at relative phase 0 and pi, and the coherence that separates them."""
    omega, t2, delta_cm = FIG3_PARAMS
    params = SystemParams(omega, t2, wavenumber_to_angfreq(delta_cm), _tau_p(config))
    delays = default_delays(config.delays)
    pair = phase_pair(params, delays, config.integrator)
    _, coh = simulate_traces(params, 0.0, delays, config.integrator)

    path = out_dir / "fig3_phase_pair.csv"
    write_table(path, ["delay_fs", "rho11_phase_0", "rho11_phase_pi", "coherence_v"],
                [delays, pair.in_phase.values, pair.out_of_phase.values, coh.values])
    contrast = np.abs(pair.in_phase.values - pair.out_of_phase.values)
    log.info(f"fig3: max phase contrast {contrast.max():.4f}")
    try:
        log.info(f"fig3: coherence decays in {coherence_decay_time(coh):.1f} fs")
    except DomainError as e:
        log.warning(f"fig3: {e}")
    return [path]


def s1(config: Config, out_dir: Path, seed: int, jobs: int = 1) -> list[Path]:
    """Rabi flopping: population versus peak Rabi frequency at zero delay."""
    tau_p = _tau_p(config)
    curve = rabi_curve(tau_p, FIG2_T2, 0.0, S1_AMPLITUDES, config.integrator)
    # Coincident pulses double the single-pulse area
    areas = [2.0 * pulse_area(a, tau_p) for a in curve.amplitudes]
    path = out_dir / "s1_rabi.csv"
    write_table(path, ["omega_r0_per_fs", "pulse_area_rad", "rho11"],
                [curve.amplitudes, areas, curve.rho11])
    return [path]


def s2(config: Config, out_dir: Path, seed: int, jobs: int = 1) -> list[Path]:
    """Histogram of fitted T2* over a synthetic population of molecules."""
    rng = np.random.default_rng(seed)
    tau_p = _tau_p(config)
    population = synth_population(S2_MOLECULES, rng, tau_p)
    delays = default_delays(config.delays)
    noise = config.noise

    traces = []
    for i, params in enumerate(population):
        rho = simulate_traces(params, 0.0, delays, config.integrator)[0]
        model = NoiseModel(noise.scale, noise.dwell, seed + i)
        traces.append(synth_counts(rho, model))

    bounds = config.fit.bounds
    outcomes = batch_fit(traces, bounds, config.integrator, config.fit, jobs)
    fitted = [r.params.t2_star for r in converged_results(outcomes)]
    generated = [p.t2_star for p in population]
    hist = t2_histogram(outcomes, S2_BIN_WIDTH)

    hist_path = out_dir / "s2_histogram.csv"
    rows = hist.rows()
    write_table(hist_path, ["bin_lo_fs", "bin_hi_fs", "count"],
                [[r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows]])
    gen_path = out_dir / "s2_generated.csv"
    write_table(gen_path, ["omega_r0_per_fs", "t2_star_fs", "delta_cm"],
                [[p.omega_r0 for p in population], generated, [p.delta_cm for p in population]])
    fits_path = out_dir / "s2_fits.json"
    write_json(fits_path, [o.to_dict() for o in outcomes])

    if fitted and not hist.empty:
        statistic, pvalue = compare_populations(fitted, generated)
        lo, hi = histogram_mode(hist)
        log.info(f"s2: {len(fitted)}/{len(outcomes)} converged, mode bin [{lo:g}, {hi:g}) fs, "
                 f"KS statistic {statistic:.3f} (p={pvalue:.3f})")
    return [hist_path, gen_path, fits_path]


RECIPES = {
    "fig2": fig2,
    "fig3": fig3,
    "s1": s1,
    "s2": s2,
}


def reproduce(name: str, config: Config, out_dir, seed: int, jobs: int = 1) -> list[Path]:
    if name not in RECIPES:
        raise KeyError(f"unknown figure {name!r}; choose from {', '.join(RECIPES)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log.info(f"reproducing {name} into {out_dir}")
    return RECIPES[name](config, out_dir, seed, jobs)
