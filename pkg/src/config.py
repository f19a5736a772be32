from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
import yaml

from src.errors import DomainError
from src.physics.units import FIELD, INTENSITY, fwhm_to_tau


@dataclass(frozen=True)
class IntegratorConfig:
    step: float = 0.05            # fs
    start_offset: float = 4.0     # multiples of tau_p before the first peak
    readout_offset: float = 3.0   # multiples of tau_p after the delayed peak

    def __post_init__(self):
        if not self.step > 0:
            raise DomainError(f"integrator step must be positive, got {self.step}")
        if self.start_offset < 4:
            raise DomainError(f"start_offset must be >= 4, got {self.start_offset}")
        if self.readout_offset < 3:
            raise DomainError(f"readout_offset must be >= 3, got {self.readout_offset}")


@dataclass(frozen=True)
class FitBounds:
    """Search box of the fitter. Detuning is given in cm^-1; tau_p is held fixed."""
    omega_r0: tuple = (0.001, 0.12)   # rad/fs
    t2_star: tuple = (15.0, 200.0)    # fs
    delta_cm: tuple = (0.0, 300.0)    # cm^-1
    tau_p: float = fwhm_to_tau(75.0, INTENSITY)  # fs, from the measured pulse width

    def __post_init__(self):
        for name in ("omega_r0", "t2_star", "delta_cm"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise DomainError(f"bounds for {name} need lo < hi, got ({lo}, {hi})")
            if lo < 0 or (name != "delta_cm" and lo <= 0):
                raise DomainError(f"bounds for {name} must be positive, got ({lo}, {hi})")
        if not self.tau_p > 0:
            raise DomainError(f"tau_p must be positive, got {self.tau_p}")

    def as_rows(self) -> list[tuple[float, float]]:
        return [tuple(self.omega_r0), tuple(self.t2_star), tuple(self.delta_cm)]


@dataclass
class PulseConfig:
    fwhm_fs: float = 75.0
    # "intensity": fwhm_fs is the FWHM of |f(t)|^2, "field": of f(t)
    fwhm_convention: str = INTENSITY

    def __post_init__(self):
        if self.fwhm_convention not in (FIELD, INTENSITY):
            raise DomainError(f"pulse.fwhm_convention must be {FIELD!r} or {INTENSITY!r}, "
                              f"got {self.fwhm_convention!r}")

    def tau_p(self, fwhm: float | None = None) -> float:
        """tau_p for the configured width, or for fwhm quoted in the same convention."""
        return fwhm_to_tau(self.fwhm_fs if fwhm is None else fwhm, self.fwhm_convention)


@dataclass
class DelayGridConfig:
    start: float = 0.0
    stop: float = 600.0
    step: float = 10.0


@dataclass
class FitConfig:
    grid_omega: int = 12
    grid_t2: int = 12
    grid_delta: int = 8
    grid_step: float = 0.5        # fs, integrator step of the coarse grid stage
    refine_step: float = 0.5      # fs, integrator step while the simplex searches
    grid_chunk: int = 512         # grid cells simulated per vectorised batch
    maxfev: int = 400
    xatol: float = 1e-4           # simplex diameter, relative to the bounds box
    tail_start: float = 550.0
    tail_end: float = 600.0
    min_points: int = 10
    bounds: FitBounds = field(default_factory=FitBounds)


@dataclass
class NoiseConfig:
    scale: float = 2000.0         # counts/s at rho11 = 1
    dwell: float = 1.0            # s per delay point
    seed: int = 0


@dataclass
class BatchConfig:
    jobs: int = 4


@dataclass
class Config:
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    pulse: PulseConfig = field(default_factory=PulseConfig)
    delays: DelayGridConfig = field(default_factory=DelayGridConfig)
    fit: FitConfig = field(default_factory=FitConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    batch: BatchConfig = field(default_factory=BatchConfig)
    log_level: str = "INFO"


def load_config(path: str = "config.yaml") -> Config:
    """Load config from YAML file, falling back to defaults for missing keys."""
    config_path = Path(path)

    if not config_path.exists():
        return Config()

    with open(config_path) as f:
        data = yaml.safe_load(f) or {}

    return config_from_dict(data)


def config_from_dict(data: dict) -> Config:
    """Build a Config from the config.yaml layout; missing keys keep their defaults."""
    config = Config()

    if "integrator" in data:
        i = data["integrator"]
        config.integrator = IntegratorConfig(
            step=float(i.get("step", config.integrator.step)),
            start_offset=float(i.get("start_offset", config.integrator.start_offset)),
            readout_offset=float(i.get("readout_offset", config.integrator.readout_offset)),
        )

    if "pulse" in data:
        p = data["pulse"]
        config.pulse = PulseConfig(
            fwhm_fs=float(p.get("fwhm_fs", config.pulse.fwhm_fs)),
            fwhm_convention=str(p.get("fwhm_convention", config.pulse.fwhm_convention)),
        )

    if "delays" in data:
        d = data["delays"]
        config.delays = DelayGridConfig(
            start=float(d.get("start", config.delays.start)),
            stop=float(d.get("stop", config.delays.stop)),
            step=float(d.get("step", config.delays.step)),
        )

    if "fit" in data:
        f = data["fit"]
        b = f.get("bounds", {}) or {}
        defaults = config.fit.bounds
        config.fit = FitConfig(
            grid_omega=int(f.get("grid_omega", config.fit.grid_omega)),
            grid_t2=int(f.get("grid_t2", config.fit.grid_t2)),
            grid_delta=int(f.get("grid_delta", config.fit.grid_delta)),
            grid_step=float(f.get("grid_step", config.fit.grid_step)),
            refine_step=float(f.get("refine_step", config.fit.refine_step)),
            grid_chunk=int(f.get("grid_chunk", config.fit.grid_chunk)),
            maxfev=int(f.get("maxfev", config.fit.maxfev)),
            xatol=float(f.get("xatol", config.fit.xatol)),
            tail_start=float(f.get("tail_start", config.fit.tail_start)),
            tail_end=float(f.get("tail_end", config.fit.tail_end)),
            min_points=int(f.get("min_points", config.fit.min_points)),
            bounds=FitBounds(
                omega_r0=tuple(float(x) for x in b.get("omega_r0", defaults.omega_r0)),
                t2_star=tuple(float(x) for x in b.get("t2_star", defaults.t2_star)),
                delta_cm=tuple(float(x) for x in b.get("delta_cm", defaults.delta_cm)),
            ),
        )

    if "noise" in data:
        n = data["noise"]
        config.noise = NoiseConfig(
            scale=float(n.get("scale", config.noise.scale)),
            dwell=float(n.get("dwell", config.noise.dwell)),
            seed=int(n.get("seed", config.noise.seed)),
        )

    if "batch" in data:
        config.batch = BatchConfig(
            jobs=int(data["batch"].get("jobs", config.batch.jobs)),
        )

    if "logging" in data:
        config.log_level = data["logging"].get("level", config.log_level)

    # The fitter holds tau_p at the configured pulse width
    config.fit.bounds = replace(config.fit.bounds, tau_p=config.pulse.tau_p())

    return config


def config_to_dict(config: Config) -> dict:
    """The config.yaml layout of a resolved Config; config_from_dict() reverses it."""
    fit = asdict(config.fit)
    fit["bounds"] = {name: list(fit["bounds"][name]) for name in ("omega_r0", "t2_star", "delta_cm")}
    return {
        "integrator": asdict(config.integrator),
        "pulse": asdict(config.pulse),
        "delays": asdict(config.delays),
        "fit": fit,
        "noise": asdict(config.noise),
        "batch": asdict(config.batch),
        "logging": {"level": config.log_level},
    }
