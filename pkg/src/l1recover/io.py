"""On-disk formats.

Matrices
    CSV, row-major, one matrix row per line. Complex entries are written
    as a single quoted field ``"re,im"``.

    Raw binary, little-endian: a 16-byte header ``<4s I I I>`` holding the
    magic ``b"L1MX"``, the ensemble code, N and the row count, followed by
    the row-major entries (float64, or complex128 for Fourier), followed
    for Fourier matrices by the row frequencies as uint32.

Signals
    Single-column CSV, one value per line.

Linear programs
    Sectioned plain text (see :func:`write_lp`).
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .ensembles import EnsembleKind, Measurement, from_matrix
from .l1solver.interior_point import StandardLP

MAGIC = b"L1MX"
_HEADER = struct.Struct("<4sIII")
_KIND_CODES = {
    EnsembleKind.GAUSSIAN: 0,
    EnsembleKind.BINARY: 1,
    EnsembleKind.FOURIER: 2,
    EnsembleKind.EXTERNAL: 3,
}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}


def _fmt(v) -> str:
    return repr(float(v))


def _fmt_entry(v) -> str:
    if isinstance(v, complex) or np.iscomplexobj(v):
        return f"{_fmt(v.real)},{_fmt(v.imag)}"
    return _fmt(v)


def _parse_entry(s: str):
    s = s.strip()
    if "," in s:
        re, im = s.split(",")
        return complex(float(re), float(im))
    return float(s)


def write_matrix_csv(path, matrix) -> None:
    matrix = np.atleast_2d(np.asarray(matrix))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in matrix:
            w.writerow([_fmt_entry(v) for v in row])


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[_parse_entry(s) for s in row] for row in csv.reader(fh) if row]
    is_complex = any(isinstance(v, complex) for row in rows for v in row)
    return np.array(rows, dtype=np.complex128 if is_complex else np.float64)


def write_signal_csv(path, f) -> None:
    f = np.asarray(f).ravel()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for v in f:
            w.writerow([_fmt_entry(v)])


def read_signal_csv(path) -> np.ndarray:
    m = read_matrix_csv(path)
    if m.ndim != 2 or m.shape[1] != 1:
        raise ValueError(f"{path}: expected a single column")
    return m[:, 0]


def write_matrix_binary(path, M: Measurement) -> None:
    is_complex = M.is_complex
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, _KIND_CODES[M.kind], M.N, M.n_rows))
        dtype = "<c16" if is_complex else "<f8"
        fh.write(np.ascontiguousarray(M.matrix, dtype=dtype).tobytes())
        if M.kind is EnsembleKind.FOURIER:
            fh.write(np.asarray(M.omega, dtype="<u4").tobytes())


def read_matrix_binary(path) -> Measurement:
    data = Path(path).read_bytes()
    magic, code, N, rows = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    kind = _CODE_KINDS[code]
    off = _HEADER.size
    if kind is EnsembleKind.FOURIER:
        matrix = np.frombuffer(data, dtype="<c16", count=rows * N, offset=off).reshape(rows, N)
        off += 16 * rows * N
        omega = np.frombuffer(data, dtype="<u4", count=rows, offset=off).astype(np.int64)
        return from_matrix(matrix.astype(np.complex128), kind, omega)
    dtype = "<c16" if len(data) - off == 16 * rows * N else "<f8"
    matrix = np.frombuffer(data, dtype=dtype, count=rows * N, offset=off).reshape(rows, N)
    return from_matrix(matrix.copy(), kind)


def read_measurement(path) -> Measurement:
    """Load a measurement matrix from either format, picked by content."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return read_matrix_binary(path)
    return from_matrix(read_matrix_csv(path))


# ---------------------------------------------------------------------------
# linear programs
# ---------------------------------------------------------------------------


def write_lp(path, lp: StandardLP) -> None:
    """Plain-text dump::

        # minimize c'x subject to A x = b and variable bounds
        VARIABLES n
        EQUALITIES m
        OBJECTIVE
        c_0 ... c_{n-1}
        CONSTRAINTS
        a_00 ... a_0{n-1} = b_0
        ...
        BOUNDS
        i lower upper          (lower is -inf for free variables)
        END
    """
    with open(path, "w") as fh:
        fh.write("# minimize c'x subject to A x = b and variable bounds\n")
        fh.write(f"VARIABLES {lp.n_vars}\nEQUALITIES {lp.n_eq}\nOBJECTIVE\n")
        fh.write(" ".join(_fmt(v) for v in lp.cost) + "\n")
        fh.write("CONSTRAINTS\n")
        for row, rhs in zip(lp.eq_matrix, lp.eq_rhs):
            fh.write(" ".join(_fmt(v) for v in row) + " = " + _fmt(rhs) + "\n")
        fh.write("BOUNDS\n")
        for i in range(lp.n_vars):
            lo = "-inf" if lp.free[i] else "0"
            hi = "inf" if not np.isfinite(lp.upper[i]) else _fmt(lp.upper[i])
            fh.write(f"{i} {lo} {hi}\n")
        fh.write("END\n")


def read_lp(path) -> StandardLP:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    n = int(lines[0].split()[1])
    m = int(lines[1].split()[1])
    assert lines[2] == "OBJECTIVE"
    cost = np.array([float(v) for v in lines[3].split()])
    assert lines[4] == "CONSTRAINTS"
    A = np.zeros((m, n))
    b = np.zeros(m)
    for i in range(m):
        lhs, rhs = lines[5 + i].split("=")
        A[i] = [float(v) for v in lhs.split()]
        b[i] = float(rhs)
    k = 5 + m
    assert lines[k] == "BOUNDS"
    free = np.zeros(n, bool)
    upper = np.full(n, np.inf)
    for i in range(n):
        idx, lo, hi = lines[k + 1 + i].split()
        free[int(idx)] = lo == "-inf"
        upper[int(idx)] = float(hi)
    return StandardLP(cost, A, b, free=free, upper=upper)


# ---------------------------------------------------------------------------
# audit reports
# ---------------------------------------------------------------------------


def write_uup_csv(path, report) -> None:
    """One row per audited subset."""
    a, b = report.bounds
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["subset", "size", "lambda_min_normalized", "lambda_max_normalized", "violation"])
        for T, lo, hi in zip(report.subsets, report.lambda_min, report.lambda_max):
            w.writerow([" ".join(map(str, T)), len(T), _fmt(lo), _fmt(hi), int(lo < a or hi > b)])


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
