import json

import pytest

from src import __version__
from src.manifest import (
    RunManifest,
    digest_inputs,
    file_digest,
    load_manifest,
    manifest_path,
    save_manifest,
    stale_inputs,
)


def test_manifest_path_for_file_and_directory(tmp_path):
    assert manifest_path(tmp_path / "trace.csv") == tmp_path / "trace.csv.manifest.json"
    assert manifest_path(tmp_path) == tmp_path / "run.manifest.json"


def test_file_digest(tmp_path):
    path = tmp_path / "a.txt"
    path.write_bytes(b"abc")
    assert file_digest(path) == (
        "sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    )


def test_save_and_load(tmp_path):
    manifest = RunManifest(command="synth", argv=["synth", "--seed", "3"],
                           parameters={"noise": {"scale": 2000.0}}, seed=3)
    path = save_manifest(manifest, tmp_path / "synth.csv")
    assert path.name == "synth.csv.manifest.json"
    back = load_manifest(path)
    assert back == manifest
    assert back.version == __version__


def test_load_rejects_other_json(tmp_path):
    path = tmp_path / "x.json"
    path.write_text(json.dumps({"hello": 1}))
    with pytest.raises(ValueError):
        load_manifest(path)
    path.write_text("{not json")
    with pytest.raises(ValueError):
        load_manifest(path)


def test_stale_inputs(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    a.write_text("1\n")
    b.write_text("2\n")
    manifest = RunManifest(command="batch-fit", argv=[], input_digests=digest_inputs([a, b]))
    assert stale_inputs(manifest) == []
    a.write_text("changed\n")
    b.unlink()
    assert stale_inputs(manifest) == [str(a), str(b)]
