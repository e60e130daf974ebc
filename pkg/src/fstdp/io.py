"""Plain-text file formats for rasters, matrices, labels and weights.

Raster files are sparse::

    # n_channels=3,n_steps=10
    channel,step,value
    0,2,1
    2,7,1

Only events need to be listed; rows with value 0 are accepted and ignored.
Matrix files carry a one-line header with kind, dimension and step count,
followed by ``n`` comma-separated rows written at full float precision.
"""

import csv
import io as _io
from pathlib import Path

import numpy as np

from .analytics import CovMatrix
from .core import SpikeRaster
from .exceptions import ConflictError, ParseError

__all__ = [
    "write_raster_csv",
    "read_raster_csv",
    "write_matrix_csv",
    "read_matrix_csv",
    "write_labels",
    "read_labels",
    "write_vector_csv",
    "read_vector_csv",
]


def _parse_header_fields(line, lineno, required):
    body = line.lstrip("#").strip()
    fields = {}
    for part in body.split(","):
        key, sep, val = part.partition("=")
        if not sep:
            raise ParseError(f"expected key=value in header, got {part.strip()!r}", lineno)
        fields[key.strip()] = val.strip()
    missing = [k for k in required if k not in fields]
    if missing:
        raise ParseError(f"header lacks {', '.join(missing)}", lineno)
    return fields


def _int_field(fields, key, lineno, minimum=1):
    try:
        v = int(fields[key])
    except ValueError:
        raise ParseError(f"{key} must be an integer, got {fields[key]!r}", lineno) from None
    if v < minimum:
        raise ParseError(f"{key} must be >= {minimum}", lineno)
    return v


def write_raster_csv(raster, path):
    ch, st = np.nonzero(raster.events)
    order = np.lexsort((ch, st))
    with open(path, "w", newline="") as fh:
        fh.write(f"# n_channels={raster.n_channels},n_steps={raster.n_steps}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["channel", "step", "value"])
        w.writerows(zip(ch[order].tolist(), st[order].tolist(), [1] * order.size))


def read_raster_csv(path):
    """Load a sparse raster file.

    Raises
    ------
    ParseError
        Missing or malformed preamble/header, bad fields, indices out of range.
    ConflictError
        The same (channel, step) listed twice.
    """
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError("empty raster file", 1)
    if not lines[0].startswith("#"):
        raise ParseError("first line must be the '# n_channels=..,n_steps=..' preamble", 1)
    fields = _parse_header_fields(lines[0], 1, ("n_channels", "n_steps"))
    n_ch = _int_field(fields, "n_channels", 1)
    n_st = _int_field(fields, "n_steps", 1)
    if len(lines) < 2 or [c.strip() for c in lines[1].split(",")] != ["channel", "step", "value"]:
        raise ParseError("expected header 'channel,step,value'", 2)
    events = np.zeros((n_ch, n_st), dtype=np.uint8)
    seen = set()
    for lineno, row in enumerate(csv.reader(_io.StringIO("\n".join(lines[2:]))), start=3):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", lineno)
        try:
            c, s, v = (int(x) for x in row)
        except ValueError:
            raise ParseError(f"non-integer field in {row!r}", lineno) from None
        if not (0 <= c < n_ch and 0 <= s < n_st):
            raise ParseError(f"index ({c}, {s}) outside {n_ch}x{n_st}", lineno)
        if v not in (0, 1):
            raise ParseError(f"value must be 0 or 1, got {v}", lineno)
        if (c, s) in seen:
            raise ConflictError(f"duplicate entry for channel {c}, step {s}", lineno)
        seen.add((c, s))
        events[c, s] = v
    return SpikeRaster(events)


def write_matrix_csv(m, path, include_diagonal=True):
    """Write ``m``; with ``include_diagonal=False`` the diagonal is written as NaN."""
    v = m.values.copy()
    if not include_diagonal:
        np.fill_diagonal(v, np.nan)
    with open(path, "w", newline="") as fh:
        fh.write(f"# kind={m.kind},n={m.n},n_steps={m.n_steps}\n")
        for row in v:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def read_matrix_csv(path):
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ParseError("empty matrix file", 1)
    fields = _parse_header_fields(lines[0], 1, ("kind", "n", "n_steps"))
    n = _int_field(fields, "n", 1)
    n_steps = _int_field(fields, "n_steps", 1)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            row = [float(x) for x in line.split(",")]
        except ValueError:
            raise ParseError("non-numeric matrix entry", lineno) from None
        if len(row) != n:
            raise ParseError(f"expected {n} columns, got {len(row)}", lineno)
        rows.append(row)
    if len(rows) != n:
        raise ParseError(f"expected {n} rows, got {len(rows)}", len(lines))
    return CovMatrix(np.array(rows), fields["kind"], n_steps)


def write_labels(labels, path):
    write_vector_csv(np.asarray(labels, dtype=int), path, "correlated")


def read_labels(path):
    v = read_vector_csv(path, "correlated")
    if not np.isin(v, (0, 1)).all():
        raise ParseError("labels must be 0 or 1", 2)
    return v.astype(bool)


def write_vector_csv(values, path, name, index="channel"):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([index, name])
        for i, x in enumerate(np.asarray(values).tolist()):
            w.writerow([i, repr(x) if isinstance(x, float) else x])


def read_vector_csv(path, name, index="channel"):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != [index, name]:
        raise ParseError(f"expected header '{index},{name}'", 1)
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", lineno)
        try:
            idx, val = int(row[0]), float(row[1])
        except ValueError:
            raise ParseError(f"malformed row {row!r}", lineno) from None
        if idx != len(out):
            raise ParseError(f"{index} values must be listed in order; expected {len(out)}, got {idx}", lineno)
        out.append(val)
    return np.array(out)
