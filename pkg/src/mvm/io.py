"""CSV readers and writers for point sets, traces and spectra."""
from __future__ import annotations

import csv
import math

import numpy as np

from .trainer import N_EIGEN, TRACE_FIELDS

SPECTRUM_FIELDS = ("epoch",) + tuple(f"ev{i}" for i in range(1, N_EIGEN + 1))


class CSVFormatError(ValueError):
    pass


def format_value(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return repr(v) if math.isfinite(v) else str(v)


def read_points(path) -> np.ndarray:
    """Rows of floats; a non-numeric first row is taken as a header and skipped."""
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError:
                if lineno == 1:
                    continue
                raise CSVFormatError(f"{path}:{lineno}: non-numeric entry") from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise CSVFormatError(f"{path}:{lineno}: expected {width} columns, got {len(vals)}")
            rows.append(vals)
    if not rows:
        raise CSVFormatError(f"{path}: no points")
    return np.array(rows, dtype=np.float64)


def write_points(path, X, header=False) -> None:
    X = np.atleast_2d(X)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow([f"x{i}" for i in range(X.shape[1])])
        for row in X:
            w.writerow([format_value(v) for v in row])


def write_trace(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_FIELDS)
        for rec in trace:
            w.writerow([format_value(getattr(rec, f)) for f in TRACE_FIELDS])


def write_spectra(path, trace) -> None:
    """One row per record that carries eigenvalues; short spectra are padded with blanks."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SPECTRUM_FIELDS)
        for rec in trace:
            if rec.eigenvalues is None:
                continue
            ev = [format_value(v) for v in rec.eigenvalues][:N_EIGEN]
            w.writerow([rec.epoch] + ev + [""] * (N_EIGEN - len(ev)))


def read_table(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
