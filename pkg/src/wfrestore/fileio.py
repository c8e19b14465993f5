"""On-disk formats: PGM/raw images, coefficient containers, CSV tables.

Coefficient container layout (little-endian)::

    b"WFC1"
    int64 N, r, L, P
    P x (int64 level, int64 alpha1, int64 alpha2)
    P x N x N float64 planes, row-major

Every CSV float is written with ``%.17g`` so it round-trips exactly.
"""

from __future__ import annotations

import csv
import re
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .framelets import FilterBank, format_bank, parse_bank
from .operators import Measurement, SampleSet
from .transform import FrameCoefficients, coefficient_index

MAGIC = b"WFC1"
RECORD_COLUMNS = ["N", "rho", "seed", "emp_error", "iters", "residual", "converged"]
SUMMARY_COLUMNS = ["N", "rho", "max_emp_error", "calibrated_bound"]


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


# -- images ------------------------------------------------------------------

_PGM_HEADER = re.compile(rb"(P[25])\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+"
                         rb"(?:#[^\n]*\n\s*)*(\d+)\s")


def read_pgm(path, M: float = 1.0) -> np.ndarray:
    """Read a binary (P5) or ASCII (P2) PGM, mapping ``[0, maxval]`` to ``[0, M]``."""
    data = Path(path).read_bytes()
    hit = _PGM_HEADER.match(data)
    if hit is None:
        raise ValueError(f"{path}: not a PGM file")
    kind, width, height, maxval = hit.group(1), *map(int, hit.groups()[1:])
    if not 0 < maxval < 65536:
        raise ValueError(f"{path}: bad maxval {maxval}")
    body = data[hit.end():]
    if kind == b"P5":
        dtype = ">u2" if maxval > 255 else "u1"
        pix = np.frombuffer(body, dtype=dtype, count=width * height)
    else:
        pix = np.array(body.split()[: width * height], dtype=int)
    if pix.size != width * height:
        raise ValueError(f"{path}: truncated pixel data")
    return pix.reshape(height, width).astype(float) * (M / maxval)


def write_pgm(path, u, M: float = 1.0, maxval: int = 255) -> None:
    """Write a binary PGM after clipping to ``[0, M]`` and rounding."""
    u = np.asarray(u, dtype=float)
    q = np.rint(np.clip(u / M, 0.0, 1.0) * maxval)
    dtype = ">u2" if maxval > 255 else "u1"
    header = f"P5\n{u.shape[1]} {u.shape[0]}\n{maxval}\n".encode()
    Path(path).write_bytes(header + q.astype(dtype).tobytes())


def read_raw(path, n: int | None = None) -> np.ndarray:
    """Square float64 little-endian image; side length inferred when omitted."""
    vals = np.fromfile(path, dtype="<f8")
    if n is None:
        n = int(round(np.sqrt(vals.size)))
    if vals.size != n * n:
        raise ValueError(f"{path}: {vals.size} values do not form a {n} x {n} image")
    return vals.reshape(n, n)


def write_raw(path, u) -> None:
    np.asarray(u, dtype="<f8").tofile(path)


def read_image(path, M: float = 1.0) -> np.ndarray:
    if str(path).lower().endswith(".pgm"):
        return read_pgm(path, M)
    return read_raw(path)


def write_image(path, u, M: float = 1.0) -> None:
    if str(path).lower().endswith(".pgm"):
        write_pgm(path, u, M)
    else:
        write_raw(path, u)


# -- coefficients and filters --------------------------------------------------

def write_coefficients(path, c: FrameCoefficients) -> None:
    planes = np.asarray(c.planes, dtype="<f8")
    if planes.ndim != 3:
        raise ValueError("only unbatched coefficient stacks can be written")
    idx = c.index
    header = np.array([c.n, c.order, c.levels, len(idx)], dtype="<i8")
    table = np.array([(l, a1, a2) for l, (a1, a2) in idx], dtype="<i8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(header.tobytes())
        fh.write(table.tobytes())
        fh.write(planes.tobytes())


def read_coefficients(path) -> FrameCoefficients:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not a coefficient container")
    n, order, levels, count = np.frombuffer(data, dtype="<i8", count=4, offset=4)
    n, order, levels, count = int(n), int(order), int(levels), int(count)
    table = np.frombuffer(data, dtype="<i8", count=3 * count, offset=36).reshape(count, 3)
    expected = coefficient_index(order, levels)
    if [(int(l), (int(a1), int(a2))) for l, a1, a2 in table] != list(expected):
        raise ValueError(f"{path}: plane table does not match order {order}, levels {levels}")
    offset = 36 + 24 * count
    if len(data) != offset + 8 * count * n * n:
        raise ValueError(f"{path}: wrong payload size")
    planes = np.frombuffer(data, dtype="<f8", offset=offset).reshape(count, n, n).copy()
    return FrameCoefficients(planes, order, levels)


def write_bank(path, bank: FilterBank) -> None:
    Path(path).write_text(format_bank(bank))


def read_bank(path) -> FilterBank:
    return parse_bank(Path(path).read_text())


# -- CSV tables ----------------------------------------------------------------

def write_sample_set(path, s: SampleSet) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["k1", "k2"])
        wr.writerows(s.coords.tolist())


def read_sample_set(path, n: int) -> SampleSet:
    with open(path, newline="") as fh:
        rows = [(int(r["k1"]), int(r["k2"])) for r in csv.DictReader(fh)]
    return SampleSet.from_coords(n, rows)


def write_measurement(path, meas: Measurement) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["k1", "k2", "value"])
        for (k1, k2), v in zip(meas.sample_set.coords.tolist(), meas.values):
            wr.writerow([k1, k2, _fmt(v)])


def read_measurement(path, n: int, eta: float = 0.0) -> Measurement:
    """Measurement CSV ``k1,k2,value``; rows may come in any order."""
    with open(path, newline="") as fh:
        rows = [(int(r["k1"]), int(r["k2"]), float(r["value"])) for r in csv.DictReader(fh)]
    if not rows:
        raise ValueError(f"{path}: no measurements")
    k = np.array([(a, b) for a, b, _ in rows])
    if k.min() < 0 or k.max() >= n:
        raise ValueError(f"{path}: indices outside the {n} x {n} grid")
    flat = np.ravel_multi_index((k[:, 0], k[:, 1]), (n, n))
    if np.unique(flat).size != flat.size:
        raise ValueError(f"{path}: duplicate sample positions")
    order = np.argsort(flat)
    values = np.array([v for _, _, v in rows])[order]
    return Measurement(values, float(eta), SampleSet(n, flat[order]))


def write_records(path, records) -> None:
    """Per-realization CSV; ``l2_error`` is appended when any record has one."""
    records = list(records)
    cols = list(RECORD_COLUMNS)
    if any(getattr(r, "l2_error", None) is not None for r in records):
        cols.append("l2_error")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(cols)
        for r in records:
            row = asdict(r)
            wr.writerow([_fmt(row[c]) if row.get(c) is not None else "" for c in cols])


def write_summary(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(SUMMARY_COLUMNS)
        for r in rows:
            wr.writerow([_fmt(getattr(r, c)) for c in SUMMARY_COLUMNS])


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_table(path_or_file, row: dict) -> None:
    """Two-column ``name,value`` table."""
    lines = ["name,value"] + [f"{k},{_fmt(v)}" for k, v in row.items()]
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        Path(path_or_file).write_text(text)
