"""Batches of trajectories: seeds, noise files, sweeps and ensemble averages.

Output layout in ``cfg.output_dir`` (``k`` numbers the sweep values, ``0``
without a sweep)::

    manifest.json
    v<k>_<noise>.csv              one trajectory (``noise`` is seed<S> or file<i>)
    v<k>_<noise>_snapshots/       its distribution snapshots
    v<k>_mean.csv                 ensemble mean over the noise sources
    v<k>_baseline.csv             measurement switched off (if requested)

File contents depend only on the configuration and the noise, never on the
worker count or on completion order.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .dynamics import TrajectoryRecord, run_trajectory
from .errors import SpinSqueezeError
from .noise import WienerPath
from .params import PhysicalParams
from .results import emit_csv, emit_snapshots, format_float

MEAN_HEADER = ("t", "jx", "jy", "jz", "xi2z", "jz_sem", "count")


@dataclass(frozen=True)
class Task:
    variant: int
    sweep_value: float | None
    params: PhysicalParams
    noise_label: str
    seed: int | None = None
    noise_file: str | None = None
    baseline: bool = False

    @property
    def name(self) -> str:
        return f"v{self.variant}_{'baseline' if self.baseline else self.noise_label}"


@dataclass
class BatchResult:
    output_dir: Path
    records: dict[str, TrajectoryRecord] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)

    @property
    def all_failed(self) -> bool:
        return not self.records and bool(self.failures)


def noise_sources(cfg: RunConfig) -> list[tuple[str, int | None, str | None]]:
    sources = [(f"seed{s}", s, None) for s in cfg.seeds]
    sources += [(f"file{i}", None, str(p)) for i, p in enumerate(cfg.noise_files)]
    return sources


def build_tasks(cfg: RunConfig) -> list[Task]:
    tasks = []
    for k, (value, params) in enumerate(cfg.physical_variants()):
        for label, seed, path in noise_sources(cfg):
            tasks.append(Task(k, value, params, label, seed, path))
        if cfg.baseline:
            tasks.append(Task(k, value, params, "none", baseline=True))
    return tasks


def _noise_for(task: Task, n_steps: int) -> WienerPath:
    if task.baseline:
        return WienerPath(np.zeros(n_steps))
    if task.noise_file is not None:
        return WienerPath.from_file(task.noise_file)
    return WienerPath.from_seed(task.seed, n_steps)


def run_task(task: Task, step) -> tuple[str, TrajectoryRecord | None, str | None]:
    """Run one trajectory; failures come back as messages instead of exceptions."""
    if task.baseline:
        step = dataclasses.replace(step, measurement_on=False)
    try:
        noise = _noise_for(task, step.n_steps)
        rec = run_trajectory(task.params, step, noise, label=task.name)
    except (SpinSqueezeError, OSError) as exc:
        return task.name, None, f"{type(exc).__name__}: {exc}"
    return task.name, rec, None


def _run_task_star(args):
    return run_task(*args)


def ensemble_mean(records: list[TrajectoryRecord]) -> dict[str, np.ndarray]:
    """Mean of J and xi^2 over trajectories sharing one time grid."""
    times = records[0].times
    for r in records[1:]:
        if r.times.shape != times.shape or np.any(r.times != times):
            raise ValueError("trajectories do not share a recording grid")
    stack = {name: np.vstack([getattr(r, name) for r in records]) for name in ("jx", "jy", "jz", "xi2_z")}
    n = len(records)
    jz_sem = stack["jz"].std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.full(times.shape, np.nan)
    with np.errstate(invalid="ignore"):
        xi2 = np.nanmean(stack["xi2_z"], axis=0) if np.any(~np.isnan(stack["xi2_z"])) else stack["xi2_z"][0]
    return {
        "t": times,
        "jx": stack["jx"].mean(axis=0),
        "jy": stack["jy"].mean(axis=0),
        "jz": stack["jz"].mean(axis=0),
        "xi2z": xi2,
        "jz_sem": jz_sem,
        "count": np.full(times.shape, float(n)),
    }


def _write_mean(path: Path, mean: dict[str, np.ndarray]) -> None:
    with path.open("w", newline="") as fh:
        fh.write(",".join(MEAN_HEADER) + "\n")
        for row in zip(*(mean[h] for h in MEAN_HEADER)):
            fh.write(",".join(format_float(v) for v in row) + "\n")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def execute(tasks: list[Task], step, workers: int = 1) -> list[tuple[str, TrajectoryRecord | None, str | None]]:
    """Run tasks, in parallel when ``workers > 1``; results keep task order."""
    if workers <= 1 or len(tasks) <= 1:
        return [run_task(t, step) for t in tasks]
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks)), mp_context=ctx) as pool:
        return list(pool.map(_run_task_star, [(t, step) for t in tasks]))


def run_batch(cfg: RunConfig, workers: int | None = None, output_dir=None) -> BatchResult:
    """Run every (sweep value, noise source) trajectory and write the result bundle."""
    out = Path(output_dir) if output_dir is not None else cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    tasks = build_tasks(cfg)
    results = execute(tasks, cfg.step, cfg.workers if workers is None else workers)

    batch = BatchResult(out)
    entries = []
    for task, (name, rec, err) in zip(tasks, results):
        entry = {
            "name": name,
            "variant": task.variant,
            "sweep_value": task.sweep_value,
            "noise": task.noise_label,
            "baseline": task.baseline,
        }
        if rec is None:
            batch.failures[name] = err
            entry.update(status="failed", error=err)
        else:
            batch.records[name] = rec
            emit_csv(rec, out / f"{name}.csv")
            if rec.snapshots:
                snap_dir = out / f"{name}_snapshots"
                snap_dir.mkdir(exist_ok=True)
                emit_snapshots(rec, snap_dir)
            entry.update(status="ok", file=f"{name}.csv")
        entries.append(entry)

    means = []
    n_variants = len(cfg.physical_variants())
    for k in range(n_variants):
        recs = [
            batch.records[t.name]
            for t in tasks
            if t.variant == k and not t.baseline and t.name in batch.records
        ]
        if recs:
            _write_mean(out / f"v{k}_mean.csv", ensemble_mean(recs))
            means.append({"variant": k, "file": f"v{k}_mean.csv", "count": len(recs)})

    noise = []
    for label, seed, path in noise_sources(cfg):
        item = {"label": label}
        if seed is not None:
            item["seed"] = seed
        else:
            item["file"] = path
            try:
                item["sha256"] = _sha256(path)
            except OSError:
                item["sha256"] = None
        noise.append(item)

    manifest = {
        "version": __version__,
        "config_hash": cfg.config_hash(),
        "config": cfg.raw,
        "noise": noise,
        "trajectories": entries,
        "means": means,
        "failures": len(batch.failures),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    batch.manifest = manifest
    return batch
