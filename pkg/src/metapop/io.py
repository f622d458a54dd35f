"""Deterministic file output: CSV tables, JSON reports, hashed manifests.

Files contain no timestamps and use shortest round-trip float formatting,
so rerunning a command with the same config and seed reproduces them
byte for byte; the manifest records a sha256 per file plus the config
hash, which makes reproducibility checkable after the fact.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .config import RunConfig
from .lna import TruncatedGaussianSummary
from .meanfield import MeanFieldSolution
from .state import Trajectory

__all__ = [
    "config_hash",
    "write_json",
    "write_rows",
    "trajectory_rows",
    "meanfield_rows",
    "gaussian_rows",
    "write_manifest",
]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def config_hash(config: RunConfig) -> str:
    """sha256 of the canonical JSON form of the config."""
    blob = json.dumps(config.to_dict(), sort_keys=True,
                      separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def write_rows(path, header: tuple, rows) -> Path:
    """CSV with a fixed header; values formatted deterministically."""
    path = Path(path)
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")
    return path


def trajectory_rows(trajs: list[Trajectory]):
    """(replica, time, type_index, count) rows; zero counts are implied."""
    for rep, traj in enumerate(trajs):
        for row, t in enumerate(traj.times):
            counts = traj.counts[row]
            for j in np.nonzero(counts)[0]:
                yield rep, float(t), int(j), int(counts[j])


def meanfield_rows(mf: MeanFieldSolution, prune: float = 0.0):
    """(time, type_index, density) rows; entries <= prune are dropped."""
    for row, t in enumerate(mf.times):
        vals = mf.values[row]
        for j in range(vals.size):
            if abs(vals[j]) > prune:
                yield float(t), j, float(vals[j])


def gaussian_rows(summary: TruncatedGaussianSummary):
    """(time, i, j, cov_ij) rows for i <= j."""
    n = summary.cov.shape[1]
    for row, t in enumerate(summary.times):
        cov = summary.cov[row]
        for i in range(n):
            for j in range(i, n):
                yield float(t), i, j, float(cov[i, j])


def write_manifest(outdir, files: list[Path], config: RunConfig,
                   seed: int, extra: dict | None = None) -> Path:
    """manifest.json with content hashes for every written file."""
    outdir = Path(outdir)
    hashes = {}
    for f in files:
        f = Path(f)
        hashes[f.name] = hashlib.sha256(f.read_bytes()).hexdigest()
    payload = {
        "config_hash": config_hash(config),
        "seed": int(seed),
        "files": hashes,
    }
    if extra:
        payload.update(extra)
    return write_json(outdir / "manifest.json", payload)
