"""Run manifests: everything needed to re-execute a command bit-identically."""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

from src import __version__
from src.trace_io import write_json

log = logging.getLogger("coherence-lab")

MANIFEST_SUFFIX = ".manifest.json"

# Keys
COMMAND = "command"
ARGV = "argv"
PARAMETERS = "parameters"
VERSION = "version"
INPUT_DIGESTS = "input_digests"
SEED = "seed"


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    parameters: dict = field(default_factory=dict)
    version: str = __version__
    input_digests: dict[str, str] = field(default_factory=dict)
    seed: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        return cls(
            command=data[COMMAND],
            argv=list(data[ARGV]),
            parameters=data.get(PARAMETERS, {}),
            version=data.get(VERSION, ""),
            input_digests=data.get(INPUT_DIGESTS, {}),
            seed=data.get(SEED),
        )


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            h.update(block)
    return f"sha256:{h.hexdigest()}"


def digest_inputs(paths) -> dict[str, str]:
    return {str(p): file_digest(p) for p in paths}


def manifest_path(output) -> Path:
    """Manifest location for a primary output file or directory."""
    output = Path(output)
    if output.is_dir():
        return output / f"run{MANIFEST_SUFFIX}"
    return output.with_name(output.name + MANIFEST_SUFFIX)


def save_manifest(manifest: RunManifest, output) -> Path:
    path = manifest_path(output)
    write_json(path, manifest.to_dict())
    log.info(f"wrote manifest {path}")
    return path


def load_manifest(path) -> RunManifest:
    """Read a manifest; raises ValueError if the file is not one."""
    try:
        with open(path) as f:
            data = json.load(f)
        return RunManifest.from_dict(data)
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise ValueError(f"{path} is not a run manifest: {e}") from e


def stale_inputs(manifest: RunManifest) -> list[str]:
    """Inputs whose current digest differs from the recorded one (or that are gone)."""
    stale = []
    for name, digest in manifest.input_digests.items():
        if not Path(name).exists() or file_digest(name) != digest:
            stale.append(name)
    return stale
