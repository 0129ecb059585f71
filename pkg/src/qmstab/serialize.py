"""File formats: model and operator JSON, report JSON, CSV and SVG series.

Complex numbers are stored as two-element [re, im] arrays, a complex matrix
as an array of rows. Reports are emitted with sorted keys and a fixed
indentation so identical runs produce byte-identical files; the timestamp
lives in a separate `meta` object that comparisons exclude. All files are
written atomically (temp file + rename).
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from .generator import ModelSpec
from .operators import OperatorError, Verdict


class FormatError(ValueError):
    """Input file does not parse into the documented schema."""


# ---------------------------------------------------------------------------
# Complex matrices
# ---------------------------------------------------------------------------

def complex_matrix_to_json(a: np.ndarray) -> list:
    arr = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in arr]


def complex_vector_to_json(v: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex)]


def complex_matrix_from_json(obj, what: str = "matrix") -> np.ndarray:
    try:
        rows = []
        for row in obj:
            rows.append([complex(entry[0], entry[1]) for entry in row])
        arr = np.asarray(rows, dtype=complex)
    except (TypeError, ValueError, IndexError) as exc:
        raise FormatError(
            f"{what}: expected an array of rows of [re, im] pairs ({exc})"
        ) from exc
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise FormatError(f"{what}: expected a square matrix, got shape {arr.shape}")
    return arr


# ---------------------------------------------------------------------------
# Model files
# ---------------------------------------------------------------------------

def model_to_json(model: ModelSpec, labels: list[str] | None = None) -> dict:
    doc = {
        "dim": model.dim,
        "hamiltonian": complex_matrix_to_json(model.hamiltonian),
        "couplings": [complex_matrix_to_json(l) for l in model.couplings],
    }
    if labels is not None:
        doc["labels"] = list(labels)
    return doc


def model_from_json(doc) -> tuple[ModelSpec, list[str] | None]:
    if not isinstance(doc, dict):
        raise FormatError("model file must contain a JSON object")
    for key in ("dim", "hamiltonian", "couplings"):
        if key not in doc:
            raise FormatError(f"model file is missing the {key!r} field")
    dim = doc["dim"]
    h = complex_matrix_from_json(doc["hamiltonian"], "hamiltonian")
    if not isinstance(doc["couplings"], list) or not doc["couplings"]:
        raise FormatError("couplings must be a nonempty array of complex matrices")
    ls = [
        complex_matrix_from_json(l, f"couplings[{i}]") for i, l in enumerate(doc["couplings"])
    ]
    if h.shape[0] != dim:
        raise FormatError(f"hamiltonian is {h.shape[0]}x{h.shape[0]} but dim = {dim}")
    try:
        model = ModelSpec(h, ls)
    except OperatorError as exc:
        raise FormatError(str(exc)) from exc
    labels = doc.get("labels")
    if labels is not None and (not isinstance(labels, list) or len(labels) != dim):
        raise FormatError("labels must list one string per basis vector")
    return model, labels


def load_model(path) -> tuple[ModelSpec, list[str] | None]:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read model file {path}: {exc}") from exc
    return model_from_json(doc)


def save_model(model: ModelSpec, path, labels: list[str] | None = None) -> None:
    write_json(model_to_json(model, labels), path)


def load_operator(path, what: str = "operator") -> np.ndarray:
    """Operator files hold either a bare complex matrix or {"matrix": ...}."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read {what} file {path}: {exc}") from exc
    if isinstance(doc, dict):
        if "matrix" not in doc:
            raise FormatError(f"{what} file {path} has no 'matrix' field")
        doc = doc["matrix"]
    return complex_matrix_from_json(doc, what)


def save_operator(a: np.ndarray, path) -> None:
    write_json({"matrix": complex_matrix_to_json(a)}, path)


# ---------------------------------------------------------------------------
# Canonical JSON output
# ---------------------------------------------------------------------------

def _atomic_write(path, data: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.chmod(tmp, 0o644)  # mkstemp defaults to 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_canonical(doc) -> str:
    """Deterministic JSON: sorted keys, two-space indentation, and numeric
    leaf lists (like [re, im] pairs) kept on one line."""
    return _render(doc, 0) + "\n"


def _render(obj, indent: int) -> str:
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        pad = " " * (indent + 2)
        items = [f"{pad}{json.dumps(str(k))}: {_render(obj[k], indent + 2)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + " " * indent + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        rendered = [_render(x, indent + 2) for x in obj]
        if all("\n" not in r for r in rendered):
            inline = "[" + ", ".join(rendered) + "]"
            if len(inline) + indent <= 100:
                return inline
        pad = " " * (indent + 2)
        return "[\n" + ",\n".join(pad + r for r in rendered) + "\n" + " " * indent + "]"
    return json.dumps(obj)


def write_json(doc, path) -> None:
    _atomic_write(path, dumps_canonical(doc))


def jsonable(obj):
    """Best-effort conversion of result dataclasses into report-friendly
    JSON: matrices become [re, im] row arrays, verdicts their string value."""
    if isinstance(obj, Verdict):
        return obj.value
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2:
            return complex_matrix_to_json(obj)
        if obj.ndim == 1 and np.iscomplexobj(obj):
            return complex_vector_to_json(obj)
        return [jsonable(x) for x in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (str, bool)) or obj is None:
        return obj
    if is_dataclass(obj):
        return {k: jsonable(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(x) for x in obj]
    return str(obj)


# ---------------------------------------------------------------------------
# Series output
# ---------------------------------------------------------------------------

def emit_series(times, values, path, fmt: str = "csv", name: str = "value") -> None:
    """Write a time series as CSV (`t,value`, 17 significant digits) or as a
    self-contained SVG line chart."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.size == 0 or y.size == 0:
        raise FormatError("refusing to write an empty series")
    if t.shape != y.shape:
        raise FormatError("time and value arrays differ in length")
    if fmt == "csv":
        lines = ["t,value"]
        lines += [f"{ti:.17g},{yi:.17g}" for ti, yi in zip(t, y)]
        _atomic_write(path, "\n".join(lines) + "\n")
    elif fmt == "svg":
        _atomic_write(path, _series_svg(t, y, name))
    else:
        raise FormatError(f"unknown series format {fmt!r}")


def _series_svg(t: np.ndarray, y: np.ndarray, name: str) -> str:
    width, height, pad = 640, 400, 54
    t0, t1 = float(t.min()), float(t.max())
    y0, y1 = float(y.min()), float(y.max())
    if t1 - t0 <= 0:
        t1 = t0 + 1.0
    if y1 - y0 <= 0:
        y1 = y0 + 1.0
    sx = (width - 2 * pad) / (t1 - t0)
    sy = (height - 2 * pad) / (y1 - y0)
    pts = " ".join(
        f"{pad + (ti - t0) * sx:.2f},{height - pad - (yi - y0) * sy:.2f}"
        for ti, yi in zip(t, y)
    )
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" '
        f'stroke="black"/>\n'
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>\n'
        f'<text x="{width // 2}" y="{height - 12}" text-anchor="middle" '
        f'font-family="monospace" font-size="13">t</text>\n'
        f'<text x="16" y="{height // 2}" text-anchor="middle" font-family="monospace" '
        f'font-size="13" transform="rotate(-90 16 {height // 2})">{name}</text>\n'
        f'<text x="{pad}" y="{height - pad + 16}" text-anchor="middle" '
        f'font-family="monospace" font-size="11">{t0:.6g}</text>\n'
        f'<text x="{width - pad}" y="{height - pad + 16}" text-anchor="middle" '
        f'font-family="monospace" font-size="11">{t1:.6g}</text>\n'
        f'<text x="{pad - 6}" y="{height - pad}" text-anchor="end" '
        f'font-family="monospace" font-size="11">{y0:.6g}</text>\n'
        f'<text x="{pad - 6}" y="{pad + 4}" text-anchor="end" '
        f'font-family="monospace" font-size="11">{y1:.6g}</text>\n'
        f'<polyline fill="none" stroke="#1f6fb2" stroke-width="1.5" points="{pts}"/>\n'
        "</svg>\n"
    )
