"""Matrix files, experiment configs and trace CSVs.

SCMX layout (all little-endian)::

    offset 0   4 bytes   magic b"SCMX"
    offset 4   uint32    version (1)
    offset 8   uint64    rows
    offset 16  uint64    cols
    offset 24  float64   rows * cols values, column-major

The CSV alternative has a first line ``rows,cols`` followed by one line per
matrix row with 17 significant digits per value.
"""

import json
import struct
from pathlib import Path

import numpy as np

__all__ = [
    "MAGIC",
    "VERSION",
    "HEADER_SIZE",
    "MatrixFormatError",
    "ConfigError",
    "write_matrix",
    "read_matrix",
    "encode_scmx",
    "decode_scmx",
    "CONFIG_KEYS",
    "parse_config",
    "load_config",
    "format_trace_csv",
    "write_trace_csv",
    "read_trace_csv",
    "candidates_to_json",
    "report_to_text",
]

MAGIC = b"SCMX"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")
HEADER_SIZE = _HEADER.size


class MatrixFormatError(ValueError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class ConfigError(ValueError):
    pass


def encode_scmx(M):
    M = np.asarray(M, dtype="<f8")
    if M.ndim != 2:
        raise ValueError("only 2-D matrices can be written")
    rows, cols = M.shape
    return _HEADER.pack(MAGIC, VERSION, rows, cols) + M.tobytes(order="F")


def decode_scmx(data):
    if len(data) < HEADER_SIZE:
        raise MatrixFormatError(f"truncated header: expected {HEADER_SIZE} bytes, got {len(data)}", len(data))
    magic, version, rows, cols = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise MatrixFormatError(f"bad magic {magic!r}, expected {MAGIC!r}", 0)
    if version != VERSION:
        raise MatrixFormatError(f"unsupported version {version}, expected {VERSION}", 4)
    expected = rows * cols * 8
    actual = len(data) - HEADER_SIZE
    if actual != expected:
        kind = "truncated" if actual < expected else "oversized"
        raise MatrixFormatError(
            f"{kind} payload: expected {expected} bytes for {rows}x{cols}, got {actual}",
            HEADER_SIZE + min(actual, expected),
        )
    flat = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=HEADER_SIZE)
    bad = np.flatnonzero(~np.isfinite(flat))
    if bad.size:
        raise MatrixFormatError("non-finite value in payload", HEADER_SIZE + 8 * int(bad[0]))
    return flat.reshape((rows, cols), order="F").astype(float)


def _is_csv(path):
    return Path(path).suffix.lower() == ".csv"


def write_matrix(path, M, fmt=None):
    """Write ``M`` as SCMX, or as CSV when ``fmt="csv"`` or the suffix is ``.csv``."""
    fmt = fmt or ("csv" if _is_csv(path) else "scmx")
    M = np.asarray(M, dtype=float)
    if fmt == "scmx":
        Path(path).write_bytes(encode_scmx(M))
    elif fmt == "csv":
        lines = [f"{M.shape[0]},{M.shape[1]}"]
        lines.extend(",".join(f"{v:.17g}" for v in row) for row in M)
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")


def _read_csv(path):
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise MatrixFormatError("empty CSV matrix file", 0)
    try:
        rows, cols = (int(t) for t in lines[0].split(","))
    except ValueError as exc:
        raise MatrixFormatError(f"bad CSV header {lines[0]!r}", 0) from exc
    if len(lines) - 1 != rows:
        raise MatrixFormatError(f"expected {rows} data rows, got {len(lines) - 1}", len(lines[0]) + 1)
    M = np.empty((rows, cols))
    offset = len(lines[0]) + 1
    for r, ln in enumerate(lines[1:]):
        vals = ln.split(",")
        if len(vals) != cols:
            raise MatrixFormatError(f"row {r} has {len(vals)} values, expected {cols}", offset)
        M[r] = [float(v) for v in vals]
        offset += len(ln) + 1
    if not np.all(np.isfinite(M)):
        raise MatrixFormatError("non-finite value in CSV matrix", 0)
    return M


def read_matrix(path, fmt=None):
    fmt = fmt or ("csv" if _is_csv(path) else "scmx")
    if fmt == "csv":
        return _read_csv(path)
    return decode_scmx(Path(path).read_bytes())


# key -> converter; every experiment config is drawn from this set
CONFIG_KEYS = {
    "n": int,
    "m": int,
    "k": int,
    "coeff_law": str,
    "C": float,
    "noise_sigma": float,
    "dict_seed": int,
    "seed": int,
    "start": str,
    "perturb_delta": float,
    "rule": str,
    "mode": str,
    "eta_scale": float,
    "iterations": int,
    "p_per_iter": int,
    "project_delta0": float,
    "init_p1": int,
    "init_p2": int,
    "init_moment": str,
    "sigma1_floor": float,
    "sigma2_ceil": float,
    "dedup_radius": float,
    "max_pairs": int,
    "delta_target": float,
    "kappa_target": float,
    "out_dict": str,
    "out_init": str,
    "out_trace": str,
    "out_report": str,
    "out_candidates": str,
}


def parse_config(text, required=()):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    cfg = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (t.strip() for t in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in cfg:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            cfg[key] = CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r}") from exc
    missing = [k for k in required if k not in cfg]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    return cfg


def load_config(path, required=()):
    return parse_config(Path(path).read_text(encoding="utf-8"), required)


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def format_trace_csv(trace):
    cols = trace.CSV_COLUMNS
    lines = [",".join(cols)]
    for row in trace.rows:
        lines.append(",".join(_fmt(getattr(row, c)) for c in cols))
    return "\n".join(lines) + "\n"


def write_trace_csv(path, trace):
    Path(path).write_bytes(format_trace_csv(trace).encode("utf-8"))


def read_trace_csv(path):
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    return header, np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])


def candidates_to_json(found):
    return json.dumps(
        {
            "pairs_tried": found.pairs_tried,
            "pairs_passed": found.pairs_passed,
            "candidates": [
                {
                    "pair": list(c.pair),
                    "sigma1": c.sigma1,
                    "sigma2": c.sigma2,
                    "vector": [float(v) for v in c.vector],
                }
                for c in found.candidates
            ],
        },
        indent=1,
    )


def report_to_text(report):
    return json.dumps(report.to_dict(), indent=2)
