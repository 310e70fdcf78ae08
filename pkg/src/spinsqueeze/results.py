"""CSV serialization of trajectory records and distribution snapshots.

Floats are written with 17 significant digits, which round-trips every
double exactly.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .dynamics import TrajectoryRecord
from .observables import DistributionSnapshot

TRAJECTORY_HEADER = ("t", "jx", "jy", "jz", "djx", "djy", "djz", "xi2z", "photocurrent", "trace_err", "herm_err")
SNAPSHOT_HEADER = ("l", "weight1", "weightL", "weightL2")


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def _write_rows(path: Path, header, columns) -> None:
    try:
        with path.open("w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in zip(*columns):
                fh.write(",".join(format_float(v) for v in row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_csv(record: TrajectoryRecord, path) -> None:
    """Write one row per recorded step under :data:`TRAJECTORY_HEADER`."""
    path = Path(path)
    cols = [getattr(record, name) for name in TrajectoryRecord.COLUMNS]
    _write_rows(path, TRAJECTORY_HEADER, cols)


def snapshot_filename(time: float) -> str:
    return f"snapshot_t{time:g}.csv"


def emit_snapshots(record: TrajectoryRecord, directory) -> list[Path]:
    """One ``snapshot_t<time>.csv`` per snapshot in ``directory``."""
    directory = Path(directory)
    paths = []
    for snap in record.snapshots:
        path = directory / snapshot_filename(snap.time)
        _write_rows(path, SNAPSHOT_HEADER, (snap.l, snap.weight1, snap.weightL, snap.weightL2))
        paths.append(path)
    return paths


def _read_columns(path: Path, header) -> np.ndarray:
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        found = next(reader, None)
        if found is None or tuple(found) != tuple(header):
            raise ValueError(f"{path}: expected header {','.join(header)}")
        rows = [[float(v) for v in row] for row in reader if row]
    return np.array(rows, dtype=np.float64).reshape(len(rows), len(header)).T


def read_csv(path) -> TrajectoryRecord:
    """Parse a file written by :func:`emit_csv`; snapshots are not included."""
    cols = _read_columns(Path(path), TRAJECTORY_HEADER)
    return TrajectoryRecord(*cols)


def read_snapshot(path, time: float | None = None) -> DistributionSnapshot:
    path = Path(path)
    l, w1, wl, wl2 = _read_columns(path, SNAPSHOT_HEADER)
    if time is None:
        time = float(path.stem.removeprefix("snapshot_t"))
    return DistributionSnapshot(time, l.astype(np.int64), w1, wl, wl2)
