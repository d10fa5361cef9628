"""CSV import/export for envelopes, traces and grids.

Floats are written with ``repr`` so a rerun reproduces files byte for byte.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import DomainError

ENVELOPE_HEADER = ("index", "re", "im")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> Path:
    """Write one header line and the rows; returns the path."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise DomainError(f"row has {len(row)} fields, header has {len(header)}")
            wr.writerow([_fmt(v) for v in row])
    return path


def save_envelope_csv(path, samples) -> Path:
    """Complex samples as ``index,re,im``; also used for waveforms."""
    s = np.asarray(getattr(samples, "samples", samples), dtype=complex)
    return write_csv(path, ENVELOPE_HEADER, zip(range(len(s)), s.real, s.imag))


def load_envelope_csv(path) -> np.ndarray:
    """Inverse of :func:`save_envelope_csv`; ``im`` may be omitted for real envelopes."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise DomainError(f"{path}: no samples")
    if not _is_number(rows[0][0]):
        header = [h.strip() for h in rows[0]]
        rows = rows[1:]
        cols = {h: i for i, h in enumerate(header)}
        if "re" not in cols:
            raise DomainError(f"{path}: header needs an 're' column")
        i_re, i_im, i_idx = cols["re"], cols.get("im"), cols.get("index")
    else:
        width = len(rows[0])
        i_idx, i_re, i_im = (0, 1, 2) if width >= 3 else ((0, 1, None) if width == 2 else (None, 0, None))
    data = np.array([[float(r[i_re]), float(r[i_im]) if i_im is not None else 0.0] for r in rows])
    if i_idx is not None:
        idx = np.array([int(float(r[i_idx])) for r in rows])
        if not np.array_equal(idx, np.arange(len(idx))):
            raise DomainError(f"{path}: index column must run 0, 1, 2, ...")
    return data[:, 0] + 1j * data[:, 1]


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def write_grid_csv(path, x, y, grid) -> Path:
    """2-D grid as long-format ``x,y,value`` rows, x outer."""
    grid = np.asarray(grid)
    if grid.shape != (len(x), len(y)):
        raise DomainError(f"grid shape {grid.shape} does not match axes ({len(x)}, {len(y)})")
    rows = ((xi, yj, grid[i, j]) for i, xi in enumerate(x) for j, yj in enumerate(y))
    return write_csv(path, ("x", "y", "value"), rows)
