#!/usr/bin/env python3
"""coherence-lab - command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 fit did not converge.
"""

import argparse
import logging
import math
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np
import yaml

from src import __version__
from src.config import Config, config_from_dict, config_to_dict, load_config
from src.errors import CoherenceLabError, StaleInputError, UsageError
from src.estimation.batch import batch_fit
from src.estimation.fitter import FitResult, fit_summary, fit_trace
from src.estimation.histogram import t2_histogram
from src.experiment.noise import NoiseModel, noiseless_counts, synth_counts
from src.experiment.traces import (
    RHO11,
    SIMULATED,
    average_traces,
    default_delays,
    parse_grid,
    phase_pair,
    rabi_curve,
    simulate_traces,
)
from src.manifest import (
    RunManifest,
    digest_inputs,
    load_manifest,
    manifest_path,
    save_manifest,
    stale_inputs,
)
from src.physics.integrator import trajectory
from src.physics.units import PulseProgram, SystemParams, wavenumber_to_angfreq
from src.recipes import RECIPES, reproduce
from src.trace_io import parse_trace_file, read_json, write_json, write_table, write_trace_file
from src.utils.math_helpers import population

log = logging.getLogger("coherence-lab")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NOT_CONVERGED = 3

SEED_ENV = "COHERENCE_LAB_SEED"


class _Parser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of exiting with status 2."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _grid(text: str) -> np.ndarray:
    try:
        return parse_grid(text)
    except CoherenceLabError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _phase(text: str) -> float:
    """Radians; also accepts 'pi'."""
    if text.strip().lower() in ("pi", "π"):
        return math.pi
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"phase {text!r} is not a number or 'pi'") from None


def _add_molecule_args(p, need_omega: bool = True):
    if need_omega:
        p.add_argument("--omega-r0", type=float, required=True, help="Peak Rabi frequency (rad/fs)")
    p.add_argument("--t2", type=float, default=math.inf, help="Pure dephasing time T2* (fs, 'inf' for none)")
    p.add_argument("--delta-cm", type=float, default=0.0, help="Detuning (cm^-1)")
    p.add_argument("--fwhm", type=float, default=None,
                   help="Pulse FWHM (fs) in the configured convention, default from config")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coherence-lab", description="Optical Bloch simulator and fitter")
    parser.add_argument("--config", default="config.yaml", help="Config file path")
    parser.add_argument("--log-level", default=None,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Override config log level")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("simulate", help="Population and coherence versus delay")
    _add_molecule_args(p)
    p.add_argument("--phase", type=_phase, default=0.0, help="Relative phase (rad or 'pi')")
    p.add_argument("--dt", type=_grid, default=None, help="Delay grid start:stop:step (fs)")
    p.add_argument("--out", default="trace.csv")

    p = sub.add_parser("phase-pair", help="Delay traces at relative phase 0 and pi")
    _add_molecule_args(p)
    p.add_argument("--dt", type=_grid, default=None, help="Delay grid start:stop:step (fs)")
    p.add_argument("--out", default="phase_pair.csv")

    p = sub.add_parser("rabi", help="Population versus peak Rabi frequency at zero delay")
    _add_molecule_args(p, need_omega=False)
    p.add_argument("--amplitudes", type=_grid, default=_grid("0:0.12:0.0025"),
                   help="Rabi frequency grid start:stop:step (rad/fs)")
    p.add_argument("--out", default="rabi.csv")

    p = sub.add_parser("trajectory", help="Bloch vector at every integration step")
    _add_molecule_args(p)
    p.add_argument("--phase", type=_phase, default=0.0)
    p.add_argument("--dt", type=float, default=0.0, help="Delay (fs)")
    p.add_argument("--out", default="trajectory.csv")

    p = sub.add_parser("synth", help="Poisson-noisy count-rate trace")
    _add_molecule_args(p, need_omega=False)
    p.add_argument("--omega-r0", type=float, default=None)
    p.add_argument("--in", dest="input", default=None, help="Simulated trace to add noise to")
    p.add_argument("--phase", type=_phase, default=0.0)
    p.add_argument("--dt", type=_grid, default=None)
    p.add_argument("--scale", type=float, default=None, help="Counts/s at rho11 = 1")
    p.add_argument("--dwell", type=float, default=None, help="Seconds per delay point")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--noiseless", action="store_true", help="Scaled expectation, no Poisson draw")
    p.add_argument("--out", default="synth.csv")

    p = sub.add_parser("fit", help="Fit omega_r0, T2* and delta to a measured trace")
    p.add_argument("--in", dest="inputs", nargs="+", required=True,
                   help="Trace file; repeated measurements of one molecule are averaged")
    p.add_argument("--fwhm", type=float, default=None)
    p.add_argument("--phase", type=_phase, default=0.0)
    p.add_argument("--out", default=None, help="Fit result (default <input>.fit.json)")

    p = sub.add_parser("batch-fit", help="Fit many measured traces concurrently")
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--fwhm", type=float, default=None)
    p.add_argument("--phase", type=_phase, default=0.0)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out", default="batch_fit.json")

    p = sub.add_parser("histogram", help="Histogram of fitted T2* from a batch-fit result")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--bin-width", type=float, default=10.0, help="fs")
    p.add_argument("--out", default="histogram.csv")

    p = sub.add_parser("replay", help="Re-execute the run recorded in a manifest")
    p.add_argument("--manifest", required=True)

    p = sub.add_parser("reproduce", help="Write the data columns behind a figure")
    p.add_argument("--figure", required=True, choices=sorted(RECIPES))
    p.add_argument("--out", default="figures")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)

    return parser


def resolve_seed(flag: int | None, config: Config) -> int:
    """--seed flag, then COHERENCE_LAB_SEED, then the config file."""
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None
    return config.noise.seed


class LabRun:
    """One command invocation: config, parsed arguments and the manifest it leaves behind."""

    def __init__(self, args: argparse.Namespace, argv: list[str], config: Config | None = None):
        self.args = args
        self.argv = list(argv)
        self.seed: int | None = None
        self.inputs: list[str] = []
        if config is not None:
            self.config = config
        else:
            self.config = load_config(args.config)
            if Path(args.config).exists():
                self.inputs.append(args.config)

    def _tau_p(self) -> float:
        return self.config.pulse.tau_p(self.args.fwhm)

    def _params(self) -> SystemParams:
        a = self.args
        return SystemParams(a.omega_r0, a.t2, wavenumber_to_angfreq(a.delta_cm), self._tau_p())

    def _delays(self) -> np.ndarray:
        return self.args.dt if self.args.dt is not None else default_delays(self.config.delays)

    def _use_seed(self, flag: int | None) -> int:
        self.seed = resolve_seed(flag, self.config)
        if flag is None:
            # Pin the resolved seed so a replay does not depend on the environment
            self.argv += ["--seed", str(self.seed)]
        return self.seed

    def _bounds(self):
        bounds = self.config.fit.bounds
        if self.args.fwhm is not None:
            bounds = replace(bounds, tau_p=self._tau_p())
        return bounds

    def _manifest(self, output, parameters: dict):
        parameters = {"config": config_to_dict(self.config), **parameters}
        manifest = RunManifest(
            command=self.args.command,
            argv=self.argv,
            parameters=parameters,
            input_digests=digest_inputs(self.inputs),
            seed=self.seed,
        )
        save_manifest(manifest, output)

    def run(self) -> int:
        handler = getattr(self, "cmd_" + self.args.command.replace("-", "_"))
        log.info(f"{self.args.command} started")
        code = handler()
        log.info(f"{self.args.command} finished with exit code {code}")
        return code

    def cmd_simulate(self) -> int:
        params = self._params()
        rho, coh = simulate_traces(params, self.args.phase, self._delays(), self.config.integrator)
        write_trace_file(rho, self.args.out, coh)
        self._manifest(self.args.out, {
            "system": asdict(params),
            "program": {"phase": self.args.phase, "readout_offset": self.config.integrator.readout_offset},
            "delays": rho.delays.tolist(),
        })
        return EXIT_OK

    def cmd_phase_pair(self) -> int:
        params = self._params()
        pair = phase_pair(params, self._delays(), self.config.integrator)
        write_table(self.args.out, ["delay_fs", "rho11_phase_0", "rho11_phase_pi"],
                    [pair.in_phase.delays, pair.in_phase.values, pair.out_of_phase.values])
        self._manifest(self.args.out, {"system": asdict(params),
                                       "delays": pair.in_phase.delays.tolist()})
        return EXIT_OK

    def cmd_rabi(self) -> int:
        tau_p = self._tau_p()
        params = SystemParams(0.0, self.args.t2, wavenumber_to_angfreq(self.args.delta_cm), tau_p)
        curve = rabi_curve(tau_p, params.t2_star, params.delta, self.args.amplitudes,
                           self.config.integrator)
        write_table(self.args.out, ["omega_r0_per_fs", "rho11"], [curve.amplitudes, curve.rho11])
        self._manifest(self.args.out, {"system": asdict(params),
                                       "amplitudes": curve.amplitudes.tolist()})
        return EXIT_OK

    def cmd_trajectory(self) -> int:
        params = self._params()
        prog = PulseProgram(self.args.dt, self.args.phase, self.config.integrator.readout_offset)
        traj = trajectory(params, prog, self.config.integrator)
        rho11 = [population(w) for w in traj.w]
        write_table(self.args.out, ["time_fs", "u", "v", "w", RHO11],
                    [traj.times, traj.u, traj.v, traj.w, rho11])
        self._manifest(self.args.out, {"system": asdict(params), "program": asdict(prog)})
        return EXIT_OK

    def cmd_synth(self) -> int:
        a = self.args
        seed = self._use_seed(a.seed)
        noise = NoiseModel(
            scale=a.scale if a.scale is not None else self.config.noise.scale,
            dwell=a.dwell if a.dwell is not None else self.config.noise.dwell,
            seed=seed,
        )
        parameters = {"noise": asdict(noise)}
        if a.input is not None:
            self.inputs.append(a.input)
            rho = parse_trace_file(a.input, a.phase)
            if rho.kind != SIMULATED:
                raise UsageError(f"{a.input} is not a simulated trace")
        elif a.omega_r0 is not None:
            params = self._params()
            rho = simulate_traces(params, a.phase, self._delays(), self.config.integrator)[0]
            parameters["system"] = asdict(params)
        else:
            raise UsageError("synth needs --omega-r0 or --in")
        counts = noiseless_counts(rho, noise.scale) if a.noiseless else synth_counts(rho, noise)
        write_trace_file(counts, a.out)
        parameters["delays"] = counts.delays.tolist()
        self._manifest(a.out, parameters)
        return EXIT_OK

    def cmd_fit(self) -> int:
        a = self.args
        self.inputs += a.inputs
        repeats = [parse_trace_file(path, a.phase) for path in a.inputs]
        measured = repeats[0]
        if len(repeats) > 1:
            measured = average_traces(repeats)
            log.info(f"fit: averaged {len(repeats)} repeated traces")
        bounds = self._bounds()
        result = fit_trace(measured, bounds, a.phase, self.config.integrator, self.config.fit)
        result.seed = _source_seed(a.inputs[0])
        out = a.out or str(Path(a.inputs[0]).with_suffix(".fit.json"))
        write_json(out, {"input": a.inputs[0], "inputs": a.inputs, **result.to_dict()})
        self._manifest(out, {"bounds": asdict(bounds), "fit": _fit_settings(self.config)})
        print(fit_summary(result))
        return EXIT_OK if result.converged else EXIT_NOT_CONVERGED

    def cmd_batch_fit(self) -> int:
        a = self.args
        self.inputs += a.inputs
        traces = [parse_trace_file(path, a.phase) for path in a.inputs]
        bounds = self._bounds()
        jobs = a.jobs if a.jobs is not None else self.config.batch.jobs
        outcomes = batch_fit(traces, bounds, self.config.integrator, self.config.fit, jobs)
        for path, outcome in zip(a.inputs, outcomes):
            if isinstance(outcome, FitResult):
                outcome.seed = _source_seed(path)
        write_json(a.out, [{"input": path, **o.to_dict()} for path, o in zip(a.inputs, outcomes)])
        self._manifest(a.out, {"bounds": asdict(bounds), "fit": _fit_settings(self.config),
                               "jobs": jobs})
        good = sum(1 for o in outcomes if isinstance(o, FitResult) and o.converged)
        log.info(f"batch-fit: {good}/{len(outcomes)} traces converged")
        return EXIT_OK if good == len(outcomes) else EXIT_NOT_CONVERGED

    def cmd_histogram(self) -> int:
        a = self.args
        self.inputs.append(a.input)
        entries = read_json(a.input)
        if not isinstance(entries, list):
            raise ValueError(f"{a.input} is not a batch-fit result")
        results = [FitResult.from_dict(e) for e in entries if "error" not in e]
        hist = t2_histogram(results, a.bin_width)
        if hist.empty:
            log.warning("no converged fits; writing an empty histogram")
        rows = hist.rows()
        write_table(a.out, ["bin_lo_fs", "bin_hi_fs", "count"],
                    [[r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows]])
        self._manifest(a.out, {"bin_width": a.bin_width})
        return EXIT_OK

    def cmd_reproduce(self) -> int:
        a = self.args
        seed = self._use_seed(a.seed)
        jobs = a.jobs if a.jobs is not None else self.config.batch.jobs
        written = reproduce(a.figure, self.config, a.out, seed, jobs)
        for path in written:
            log.info(f"wrote {path}")
        self._manifest(a.out, {"figure": a.figure, "jobs": jobs})
        return EXIT_OK

    def cmd_replay(self) -> int:
        manifest = load_manifest(self.args.manifest)
        if manifest.version != __version__:
            log.warning(f"manifest written by version {manifest.version}, running {__version__}")
        recorded = manifest.parameters.get("config")
        config = config_from_dict(recorded) if recorded is not None else None
        config_file = _config_arg(manifest.argv)
        stale = []
        for name in stale_inputs(manifest):
            if name == config_file and config is not None:
                log.warning(f"{name} changed since the recorded run; using the recorded configuration")
            else:
                stale.append(name)
        if stale:
            raise StaleInputError(f"inputs changed since the recorded run: {', '.join(stale)}")
        if config is None:
            log.warning("manifest has no recorded configuration; reading the config file again")
        log.info(f"replaying: {' '.join(manifest.argv)}")
        return run_command(manifest.argv, config)


def _config_arg(argv: list[str]) -> str:
    """The --config value of a recorded command line."""
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if arg.startswith("--config="):
            return arg.split("=", 1)[1]
    return "config.yaml"


def _source_seed(path: str) -> int | None:
    """Seed recorded in the manifest of the run that wrote path, if there is one."""
    source = manifest_path(path)
    if not source.exists():
        return None
    try:
        return load_manifest(source).seed
    except ValueError:
        return None


def _fit_settings(config: Config) -> dict:
    settings = asdict(config.fit)
    settings.pop("bounds", None)
    return settings


def _setup_logging(level: str):
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


def run_command(argv: list[str], config: Config | None = None) -> int:
    """Run one command line and return its exit code.

    config, when given, replaces the file named by --config (used by replay).
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help and --version
        return int(e.code or 0)

    try:
        lab = LabRun(args, argv, config)
        _setup_logging(args.log_level or lab.config.log_level)
        return lab.run()
    except UsageError as e:
        log.error(str(e))
        return EXIT_USAGE
    except (CoherenceLabError, ValueError, KeyError, OSError, yaml.YAMLError) as e:
        log.error(f"{args.command}: {e}")
        return EXIT_DATA


def main():
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
