"""Model snapshots and CSV result files.

Snapshots are JSON with every float written as its shortest round-trip
decimal, so ``load(save(model))`` restores ``mu_g`` and ``C_g`` bit for bit.
"""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import SnapshotError
from .kernel import KernelConfig
from .rgp import RgpModel
from .sim import RunStatistics

SNAPSHOT_FORMAT = "rgpm-snapshot"
SNAPSHOT_VERSION = 1
CSV_SCHEMA = "# rgpm-csv v1 columns=k,rmse,cpmu"
RUNS_CSV_SCHEMA = "# rgpm-csv v1 columns=run,seed,k,rmse,cpmu"


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def snapshot_dict(model: RgpModel) -> dict:
    return {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "kernel": model.cfg.to_dict(),
        "grid_dims": list(model.cfg.points_per_dim),
        "step": int(model.step),
        "mu_g": [float(v) for v in model.mu_g],
        "C_g": [float(v) for v in model.C_g.ravel(order="C")],
    }


def save_snapshot(model: RgpModel, path) -> None:
    _atomic_write(Path(path), json.dumps(snapshot_dict(model), indent=1) + "\n")


def load_snapshot(path) -> RgpModel:
    """Rebuild a model from a snapshot file.

    Raises
    ------
    SnapshotError
        Unreadable or truncated file, wrong format/version, or inconsistent shapes.
    """
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
    if not isinstance(data, dict) or data.get("format") != SNAPSHOT_FORMAT:
        raise SnapshotError(f"{path} is not an rgpm snapshot")
    if data.get("version") != SNAPSHOT_VERSION:
        raise SnapshotError(f"snapshot version {data.get('version')!r}, expected {SNAPSHOT_VERSION}")
    try:
        k = data["kernel"]
        cfg = KernelConfig(
            sigma_k=k["sigma_k"], length_scale=k["length_scale"],
            points_per_dim=tuple(k["points_per_dim"]),
            input_bounds=tuple(tuple(b) for b in k["input_bounds"]),
            jitter=k["jitter"],
        )
        mu = np.array(data["mu_g"], dtype=float)
        C = np.array(data["C_g"], dtype=float)
        step = int(data["step"])
        dims = list(data["grid_dims"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SnapshotError(f"malformed snapshot {path}: {exc}") from exc
    P = cfg.n_basis
    if dims != list(cfg.points_per_dim):
        raise SnapshotError(f"grid_dims {dims} disagree with kernel points {list(cfg.points_per_dim)}")
    if mu.shape != (P,) or C.shape != (P * P,):
        raise SnapshotError(f"state sizes mu={mu.size}, C={C.size} do not match {P} basis points")
    model = RgpModel.from_config(cfg)
    model.mu_g = mu
    model.C_g = np.ascontiguousarray(C.reshape(P, P))
    model.step = step
    return model


def _fmt(x) -> str:
    return repr(float(x))


def format_stats_csv(stats: RunStatistics) -> str:
    lines = [CSV_SCHEMA, "k,rmse,cpmu"]
    for k, e, c in zip(stats.checkpoints, stats.rmse, stats.cpmu):
        lines.append(f"{int(k)},{_fmt(e)},{_fmt(c)}")
    return "\n".join(lines) + "\n"


def write_stats_csv(path, stats: RunStatistics) -> None:
    _atomic_write(Path(path), format_stats_csv(stats))


def write_runs_csv(path, runs: list[RunStatistics], seeds: list[int]) -> None:
    lines = [RUNS_CSV_SCHEMA, "run,seed,k,rmse,cpmu"]
    for i, (run, seed) in enumerate(zip(runs, seeds)):
        for k, e, c in zip(run.checkpoints, run.rmse, run.cpmu):
            lines.append(f"{i},{seed},{int(k)},{_fmt(e)},{_fmt(c)}")
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def read_stats_csv(path) -> RunStatistics:
    rows = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    if not rows or rows[0] != "k,rmse,cpmu":
        raise ValueError(f"{path}: unexpected header {rows[:1]}")
    data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]]).reshape(-1, 3)
    return RunStatistics(data[:, 0].astype(int), data[:, 1], data[:, 2])


def write_surface_csv(path, axes: list[np.ndarray], values: np.ndarray, header: str) -> None:
    """Grid-major surface: one row per first-axis value, one column per second-axis value."""
    a, b = axes
    lines = [f"# rgpm-surface v1 {header}", "a\\b," + ",".join(_fmt(v) for v in b)]
    for i, av in enumerate(a):
        lines.append(_fmt(av) + "," + ",".join(_fmt(v) for v in values[i]))
    _atomic_write(Path(path), "\n".join(lines) + "\n")
