"""Run manifests and the per-run-directory lock."""

from __future__ import annotations

import json
import os
import time
from contextlib import contextmanager
from pathlib import Path

from .. import __version__
from ..exceptions import ConfigurationError, MissingPrerequisiteError, SoftMaskLabError

MANIFEST_DIR = "manifests"
LOCK_NAME = ".lock"

STAGE_ORDER = ("synth", "train-sbsgan", "gen-softmask", "train-da2s", "eval")


def manifest_path(out_dir, stage) -> Path:
    return Path(out_dir) / MANIFEST_DIR / f"{stage}.json"


def read_manifest(out_dir, stage):
    path = manifest_path(out_dir, stage)
    if not path.exists():
        return None
    return json.loads(path.read_text())


def write_manifest(out_dir, stage, config_hash, seed, started, artifacts) -> dict:
    """Atomically record a completed stage."""
    manifest = {
        "stage": stage,
        "config_hash": config_hash,
        "seed": seed,
        "code_version": __version__,
        "started": started,
        "finished": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "artifacts": {k: str(v) for k, v in artifacts.items()},
    }
    path = manifest_path(out_dir, stage)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    tmp.replace(path)
    return manifest


def refuse_rerun(out_dir, stage, config_hash, seed, force) -> None:
    """Same config hash and seed means the outputs already exist."""
    existing = read_manifest(out_dir, stage)
    if existing is None or force:
        return
    if existing.get("config_hash") == config_hash and existing.get("seed") == seed:
        raise ConfigurationError(
            f"stage {stage!r} already ran with config hash {config_hash} and "
            f"seed {seed}; pass --force to re-run"
        )


def require_stage(out_dir, stage) -> dict:
    manifest = read_manifest(out_dir, stage)
    if manifest is None:
        raise MissingPrerequisiteError(
            f"stage {stage!r} has not run in {out_dir}; run it first"
        )
    return manifest


@contextmanager
def run_lock(out_dir):
    """One command at a time per run directory."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise SoftMaskLabError(
            f"run directory {out_dir} is locked by another command "
            f"(remove {lock} if that command crashed)"
        )
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)
