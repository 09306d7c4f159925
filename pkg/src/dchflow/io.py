"""Writers and readers for step records, nodal snapshots and study tables.

Floats are written with ``repr`` so every file round-trips to the bit.
"""

import csv
import io as _io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "FieldSnapshot",
    "FORMATS",
    "write_snapshot",
    "read_snapshot",
    "write_state",
    "read_state",
    "RecordWriter",
    "read_records",
    "emit_study_table",
]

FORMATS = ("grid-csv", "vtk-ascii")
_SUFFIX = {"grid-csv": ".csv", "vtk-ascii": ".vtk"}


@dataclass
class FieldSnapshot:
    n: int
    t: float
    name: str
    values: np.ndarray  # (n+1, n+1), row j is y = j/n

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.n + 1, self.n + 1)
        if any(c.isspace() for c in self.name) or not self.name:
            raise ValueError(f"field name must be a non-empty word, got {self.name!r}")


def _fmt(v):
    return repr(float(v))


def _grid_csv(snap):
    lines = [f"# {snap.n} {_fmt(snap.t)} {snap.name}"]
    lines += [",".join(_fmt(v) for v in row) for row in snap.values]
    return "\n".join(lines) + "\n"


def _vtk(snap):
    n = snap.n
    head = [
        "# vtk DataFile Version 3.0",
        f"{snap.name} t={_fmt(snap.t)}",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {n + 1} {n + 1} 1",
        "ORIGIN 0 0 0",
        f"SPACING {_fmt(1.0 / n)} {_fmt(1.0 / n)} 1",
        f"POINT_DATA {(n + 1) ** 2}",
        f"SCALARS {snap.name} double 1",
        "LOOKUP_TABLE default",
    ]
    body = [" ".join(_fmt(v) for v in row) for row in snap.values]
    return "\n".join(head + body) + "\n"


def write_snapshot(snap, path, fmt="grid-csv"):
    if fmt not in FORMATS:
        raise ValueError(f"unknown snapshot format {fmt!r}; choose from {FORMATS}")
    text = _grid_csv(snap) if fmt == "grid-csv" else _vtk(snap)
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write snapshot {path}: {exc}") from exc
    return path


def read_snapshot(path):
    """Read a snapshot written in either format."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read snapshot {path}: {exc}") from exc
    lines = text.splitlines()
    if lines and lines[0].startswith("# vtk"):
        name, tpart = lines[1].split(" t=")
        n = int(lines[4].split()[1]) - 1
        vals = np.array([float(v) for line in lines[10:] for v in line.split()])
        return FieldSnapshot(n, float(tpart), name, vals)
    try:
        _, n, t, name = lines[0].split()
        vals = np.array([[float(v) for v in line.split(",")] for line in lines[1:] if line])
        return FieldSnapshot(int(n), float(t), name, vals)
    except ValueError as exc:
        raise ValueError(f"{path}: malformed grid-csv snapshot ({exc})") from exc


def _state_path(out, name, m, fmt):
    return Path(out) / f"{name}_{m:06d}{_SUFFIX[fmt]}"


def write_state(out, mesh, m, t, state, fmt="grid-csv"):
    """Write p, mu and phi at time level ``m``; returns the paths."""
    return [
        write_snapshot(FieldSnapshot(mesh.n, t, name, getattr(state, name)),
                       _state_path(out, name, m, fmt), fmt)
        for name in ("p", "mu", "phi")
    ]


def read_state(out, m, fmt="grid-csv"):
    """Inverse of :func:`write_state`; returns ``(t, DchState)``."""
    from .system import DchState

    snaps = {name: read_snapshot(_state_path(out, name, m, fmt)) for name in ("p", "mu", "phi")}
    t = snaps["phi"].t
    return t, DchState(*(snaps[k].values.ravel().copy() for k in ("p", "mu", "phi")))


class RecordWriter:
    """Streams :class:`StepRecord` rows to CSV, flushing after each row."""

    def __init__(self, path):
        from .integrator import StepRecord

        self.path = Path(path)
        self.columns = StepRecord.columns()
        self._fh = open(self.path, "w", newline="")
        self._fh.write(",".join(self.columns) + "\n")
        self._fh.flush()

    def write(self, rec):
        d = rec.as_dict()
        cells = [str(d[c]) if isinstance(d[c], (int, np.integer)) else _fmt(d[c])
                 for c in self.columns]
        self._fh.write(",".join(cells) + "\n")
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_records(path):
    with open(path, newline="") as fh:
        return [
            {k: (int(v) if k in ("m", "cycles") else float(v)) for k, v in row.items()}
            for row in csv.DictReader(fh)
        ]


def emit_study_table(rows, path=None, metadata=None, cauchy=None):
    """CSV mirroring the convergence tables; returns the text.

    ``metadata`` entries become ``# key = value`` lines above the header.
    Rates are blank on the first row.
    """
    from .studies import FIELDS

    if cauchy is None:
        cauchy = bool(rows) and rows[0].h_f is not None
    buf = _io.StringIO()
    for k, v in (metadata or {}).items():
        buf.write(f"# {k} = {v}\n")
    err = "delta" if cauchy else "e"
    header = ["h_c", "h_f"] if cauchy else ["h"]
    for f in FIELDS:
        header += [f"{err}_{f}", f"rate_{f}"]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        cells = [_fmt(row.h), _fmt(row.h_f)] if cauchy else [_fmt(row.h)]
        for f in FIELDS:
            cells.append(_fmt(row.errors[f]))
            cells.append(_fmt(row.rates[f]) if f in row.rates else "")
        w.writerow(cells)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
