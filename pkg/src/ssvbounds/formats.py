"""JSON matrix / model / structure files and sweep CSV output."""

import json
import math
import re
from pathlib import Path

import numpy as np

from .structure import BlockStructure
from .sweep import StateSpace

__all__ = [
    "FormatError",
    "matrix_to_obj",
    "matrix_from_obj",
    "parse_matrix",
    "parse_matrix_file",
    "write_matrix_file",
    "parse_state_space",
    "read_state_space",
    "write_state_space",
    "parse_structure",
    "format_number",
    "sweep_csv",
    "peaks_obj",
]

CSV_HEADER = "omega,alpha,beta,gap_percent,converged_upper,converged_lower"


class FormatError(ValueError):
    """Input file problem; the message carries location context."""


def _line_col(text, pos):
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def _loads(text, source):
    def reject(token):
        raise _NonFinite(token)

    try:
        return json.loads(text, parse_constant=reject)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{source}: malformed JSON at line {exc.lineno} column {exc.colno}: "
                          f"{exc.msg}") from None
    except _NonFinite as exc:
        m = re.search(r"-?\b(?:NaN|Infinity)\b", text)
        where = "line %d column %d" % _line_col(text, m.start()) if m else "unknown position"
        raise FormatError(f"{source}: non-finite entry {exc.token} at {where}") from None


class _NonFinite(Exception):
    def __init__(self, token):
        super().__init__(token)
        self.token = token


def matrix_to_obj(M):
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2:
        raise ValueError("matrix must be 2-D")
    return {
        "rows": int(M.shape[0]),
        "cols": int(M.shape[1]),
        "data": [[[float(z.real), float(z.imag)] for z in row] for row in M],
    }


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def matrix_from_obj(obj, source="matrix"):
    """Validate {"rows", "cols", "data"} and build a complex128 array."""
    if not isinstance(obj, dict):
        raise FormatError(f"{source}: expected an object with rows, cols, data")
    for key in ("rows", "cols", "data"):
        if key not in obj:
            raise FormatError(f"{source}: missing key {key!r}")
    rows, cols, data = obj["rows"], obj["cols"], obj["data"]
    if not (isinstance(rows, int) and isinstance(cols, int)) or rows < 0 or cols < 0:
        raise FormatError(f"{source}: rows and cols must be nonnegative integers")
    if not isinstance(data, list):
        raise FormatError(f"{source}: data must be a list of rows")
    if len(data) != rows:
        raise FormatError(f"{source}: row count mismatch (rows={rows}, data has {len(data)})")
    out = np.empty((rows, cols), dtype=np.complex128)
    for i, row in enumerate(data):
        if not isinstance(row, list) or len(row) != cols:
            n = len(row) if isinstance(row, list) else "non-list"
            raise FormatError(f"{source}: row length mismatch at row {i} (cols={cols}, got {n})")
        for j, entry in enumerate(row):
            if not (isinstance(entry, list) and len(entry) == 2 and all(map(_is_num, entry))):
                raise FormatError(f"{source}: entry ({i}, {j}) must be a [re, im] number pair")
            re_, im_ = float(entry[0]), float(entry[1])
            if not (math.isfinite(re_) and math.isfinite(im_)):
                raise FormatError(f"{source}: non-finite entry at ({i}, {j})")
            out[i, j] = complex(re_, im_)
    return out


def parse_matrix(text, source="<string>"):
    return matrix_from_obj(_loads(text, source), source)


def parse_matrix_file(path):
    path = Path(path)
    return parse_matrix(_read(path), str(path))


def _matrix_text(M, indent=""):
    """One matrix row per line; floats keep their shortest round-trip repr."""
    obj = matrix_to_obj(M)
    rows = ",\n".join(f"{indent}  {json.dumps(r)}" for r in obj["data"])
    body = f"\n{rows}\n{indent}" if obj["data"] else ""
    return f'{{"rows": {obj["rows"]}, "cols": {obj["cols"]}, "data": [{body}]}}'


def write_matrix_file(path, M):
    Path(path).write_text(_matrix_text(M) + "\n", encoding="utf-8")


def _read(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror or exc}") from None


def parse_state_space(text, source="<string>"):
    obj = _loads(text, source)
    if not isinstance(obj, dict):
        raise FormatError(f"{source}: expected an object with A, B, C")
    mats = {}
    for key in ("A", "B", "C"):
        if key not in obj:
            raise FormatError(f"{source}: missing matrix {key!r}")
        mats[key] = matrix_from_obj(obj[key], f"{source}: {key}")
    try:
        return StateSpace(**mats)
    except ValueError as exc:
        raise FormatError(f"{source}: {exc}") from None


def read_state_space(path):
    return parse_state_space(_read(path), str(path))


def write_state_space(path, ss):
    parts = [f'"{k}": {_matrix_text(getattr(ss, k), "  ")}' for k in ("A", "B", "C")]
    Path(path).write_text("{\n  " + ",\n  ".join(parts) + "\n}\n", encoding="utf-8")


def parse_structure(spec, source="structure"):
    """Inline JSON, a file path, or an already-decoded object.

    Accepts {"blocks": [...]}, a bare list of blocks, or one block object.
    """
    if isinstance(spec, str):
        text = spec if spec.lstrip().startswith(("{", "[")) else _read(spec)
        if text is not spec:
            source = spec
        spec = _loads(text, source)
    if isinstance(spec, list):
        spec = {"blocks": spec}
    elif isinstance(spec, dict) and "blocks" not in spec:
        spec = {"blocks": [spec]}
    try:
        return BlockStructure.from_dict(spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{source}: invalid structure: {exc}") from None


def format_number(x):
    """12 significant digits; empty for an absent value."""
    if x is None:
        return ""
    s = f"{x:.12g}"
    return "0" if s == "-0" else s


def sweep_csv(table):
    lines = [CSV_HEADER]
    for r in table.records:
        lines.append(",".join([
            format_number(r.omega),
            format_number(r.alpha),
            format_number(r.beta),
            format_number(r.gap_percent if r.alpha is not None else None),
            "true" if r.converged_upper else "false",
            "true" if r.converged_lower else "false",
        ]))
    return "\n".join(lines) + "\n"


def peaks_obj(table):
    out = dict(table.peaks)
    out["points"] = len(table.records)
    out["failed"] = [{"omega": r.omega, "error": r.error} for r in table.records if r.error]
    return out
