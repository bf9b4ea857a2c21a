"""Snapshot files, CSV emission, atomic writes and output-directory locking.

Snapshot layout (one file per physical field component)::

    BSQ1 <dim> <nx> <ny> [<nz>] <time>\\n
    <nx*ny[*nz] little-endian float64 values, row-major (C order, x slowest)>

``time`` is written with ``repr`` so it round-trips exactly.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from bsq.errors import BsqError

MAGIC = "BSQ1"


class OutputError(BsqError, OSError):
    """Filesystem problem while writing outputs; message carries the path."""


class OutputLocked(OutputError):
    """Another writer holds the output directory."""


def fmt17(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def atomic_write(path, data) -> None:
    """Write ``data`` (str or bytes) to a temp file in the same directory, then rename."""
    path = Path(path)
    mode = "w" if isinstance(data, str) else "wb"
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".part", dir=path.parent)
        with os.fdopen(fd, mode, **({"newline": ""} if mode == "w" else {})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def snapshot_bytes(values: np.ndarray, time: float) -> bytes:
    values = np.asarray(values, dtype=np.float64)
    dims = " ".join(str(n) for n in values.shape)
    header = f"{MAGIC} {values.ndim} {dims} {float(time)!r}\n".encode("ascii")
    return header + values.astype("<f8").tobytes(order="C")


def write_snapshot(path, values: np.ndarray, time: float) -> None:
    atomic_write(path, snapshot_bytes(values, time))


def read_snapshot(path):
    """Return ``(values, time)`` from a snapshot file."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from exc
    nl = blob.index(b"\n")
    parts = blob[:nl].decode("ascii").split()
    if parts[0] != MAGIC:
        raise OutputError(f"{path}: not a {MAGIC} snapshot")
    dim = int(parts[1])
    shape = tuple(int(p) for p in parts[2:2 + dim])
    time = float(parts[2 + dim])
    values = np.frombuffer(blob[nl + 1:], dtype="<f8")
    if values.size != int(np.prod(shape)):
        raise OutputError(f"{path}: payload has {values.size} values, header says {shape}")
    return values.reshape(shape).astype(np.float64), time


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt17(v) for v in row])
    return buf.getvalue()


def read_csv(path) -> tuple:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


@contextmanager
def output_lock(directory):
    """Exclusive lock file ``.bsq.lock`` inside ``directory`` for the duration."""
    directory = Path(directory)
    lock = directory / ".bsq.lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError as exc:
        raise OutputLocked(f"{directory} is locked by another run ({lock})") from exc
    except OSError as exc:
        raise OutputError(f"cannot lock {directory}: {exc}") from exc
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield directory
    finally:
        try:
            lock.unlink()
        except FileNotFoundError:
            pass
