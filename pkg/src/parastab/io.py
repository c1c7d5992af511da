"""Matrix documents, deterministic CSV emission and config loading helpers."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np
import yaml


class ConfigError(ValueError):
    """Invalid configuration document; ``path`` locates the offending key."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def num(x) -> str:
    """Round-trippable float text with 17 significant digits."""
    x = float(x)
    if x == 0:
        return "0"
    if x != x:
        return "nan"
    return f"{x:.17g}"


def parse_scalar(v, path="") -> complex:
    if isinstance(v, bool):
        raise ConfigError("expected a number, got a boolean", path)
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(t, (int, float)) for t in v):
        return complex(v[0], v[1])
    if isinstance(v, str):
        try:
            return complex(v.replace(" ", "").replace("i", "j"))
        except ValueError:
            pass
    raise ConfigError(f"cannot read {v!r} as a number (use x or [re, im])", path)


def parse_matrix(doc, path="matrix", square=True) -> np.ndarray:
    """Nested lists of real numbers, [re, im] pairs or complex strings."""
    if not isinstance(doc, (list, tuple)) or not doc:
        raise ConfigError("expected a non-empty list of rows", path)
    rows = []
    for i, row in enumerate(doc):
        if not isinstance(row, (list, tuple)):
            raise ConfigError("each row must be a list", f"{path}[{i}]")
        rows.append([parse_scalar(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)])
    if len({len(r) for r in rows}) != 1:
        raise ConfigError("rows have different lengths", path)
    m = np.array(rows, dtype=complex)
    if square and m.shape[0] != m.shape[1]:
        raise ConfigError(f"matrix must be square, got {m.shape}", path)
    if not np.any(m.imag):
        return m.real.copy()
    return m


def emit_matrix(m) -> list:
    """Inverse of :func:`parse_matrix`; complex entries become [re, im]."""
    m = np.asarray(m)
    if np.iscomplexobj(m) and np.any(m.imag):
        return [[[float(z.real), float(z.imag)] for z in row] for row in m]
    return [[float(z.real) for z in row] for row in m]


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([num(x) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def write_csv(path: Path, header, rows) -> Path:
    return write_text(path, csv_text(header, rows))


def write_json(path: Path, doc) -> Path:
    return write_text(path, json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, (np.floating, float)):
        return float(o)
    if isinstance(o, np.ndarray):
        return emit_matrix(o) if o.ndim == 2 else [float(x) for x in o]
    if isinstance(o, (complex, np.complexfloating)):
        return [float(o.real), float(o.imag)]
    return str(o)


def load_document(path) -> dict:
    """Parse YAML (JSON is a subset) into a mapping, with line info on errors."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"parse error at {where}: {problem}", str(path)) from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a mapping", str(path))
    return doc
