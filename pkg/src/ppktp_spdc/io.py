"""Deterministic CSV/JSON emission and parsing of measurement files.

CSV files carry ``# key: value`` metadata lines ahead of a single column
header. Floats are written with ``repr`` so values round-trip exactly; NaN
becomes an empty field, marking a gap.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import RecordFormatError
from .rates import CoincidenceRecord
from .tomography import LABELS, TomographyRecord

COINCIDENCE_COLUMNS = ("S_A", "S_B", "raw", "window_ns", "P_mW", "duration_s")


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else repr(float(x))
    return str(x)


def _parse_value(s: str) -> float:
    return float("nan") if s.strip() == "" else float(s)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_csv(path, columns: Iterable[str], rows, metadata: Mapping[str, object]) -> Path:
    """Write rows under ``#`` metadata; metadata values are single-line strings or JSON-encoded."""
    path = Path(path)
    columns = list(columns)
    lines = []
    for key, value in metadata.items():
        text = value if isinstance(value, str) else canonical_json(value)
        if "\n" in text:
            raise ValueError(f"metadata {key!r} must be a single line")
        lines.append(f"# {key}: {text}")
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError("row length does not match the header")
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="")
    return path


def read_csv(path) -> tuple[dict[str, str], list[str], np.ndarray]:
    """Inverse of ``write_csv``: (metadata strings, column names, float array with NaN gaps)."""
    meta: dict[str, str] = {}
    header = None
    rows = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if line.startswith("#"):
            if header is None:
                key, sep, value = line[1:].strip().partition(":")
                if not sep:
                    raise RecordFormatError("metadata line needs 'key: value'", lineno)
                meta[key.strip()] = value.strip()
            continue
        if not line.strip():
            continue
        fields = line.split(",")
        if header is None:
            header = [f.strip() for f in fields]
            continue
        if len(fields) != len(header):
            raise RecordFormatError(f"expected {len(header)} fields, got {len(fields)}", lineno)
        try:
            rows.append([_parse_value(f) for f in fields])
        except ValueError as exc:
            raise RecordFormatError(str(exc), lineno) from None
    if header is None:
        raise RecordFormatError("missing column header")
    data = np.asarray(rows, dtype=float).reshape(-1, len(header))
    return meta, header, data


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n", encoding="utf-8")
    return path


def _plain(obj):
    if isinstance(obj, Mapping):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return None if math.isnan(obj) else float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def density_to_dict(rho) -> dict:
    rho = np.asarray(rho, dtype=complex)
    return {"real": rho.real.tolist(), "imag": rho.imag.tolist()}


def density_from_dict(d: Mapping) -> np.ndarray:
    try:
        rho = np.asarray(d["real"], dtype=float) + 1j * np.asarray(d["imag"], dtype=float)
    except KeyError as exc:
        raise ValueError(f"density matrix JSON lacks {exc.args[0]!r}") from None
    if rho.shape != (4, 4):
        raise ValueError(f"density matrix must be 4x4, got {rho.shape}")
    return rho


def write_tomography_record(path, rec: TomographyRecord, metadata: Mapping[str, object] | None = None) -> Path:
    meta = {"duration_s": rec.duration_s, "power_mw": rec.power_mw, **(metadata or {})}
    lines = [f"# {k}: {v if isinstance(v, str) else canonical_json(_plain(v))}" for k, v in meta.items()]
    lines += [f"{label},{format_value(float(c))}" for label, c in zip(rec.labels, rec.counts)]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="")
    return path


def read_tomography_record(path) -> TomographyRecord:
    """Parse 16 ``label,count`` lines; errors name the offending line."""
    meta: dict[str, str] = {}
    counts: dict[str, float] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        text = line.strip()
        if not text:
            continue
        if text.startswith("#"):
            key, sep, value = text[1:].partition(":")
            if sep:
                meta[key.strip()] = value.strip()
            continue
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 2:
            raise RecordFormatError(f"expected 'label,count', got {text!r}", lineno)
        label, raw = parts
        if label not in LABELS:
            raise RecordFormatError(f"unknown setting label {label!r}", lineno)
        if label in counts:
            raise RecordFormatError(f"duplicate setting label {label!r}", lineno)
        try:
            value = float(raw)
        except ValueError:
            raise RecordFormatError(f"count {raw!r} is not a number", lineno) from None
        if not math.isfinite(value) or value < 0:
            raise RecordFormatError(f"count must be finite and non-negative, got {raw!r}", lineno)
        counts[label] = value
    missing = [l for l in LABELS if l not in counts]
    if missing:
        raise RecordFormatError(f"missing settings {missing}")
    try:
        duration = float(meta.pop("duration_s", 1.0))
        power = float(meta.pop("power_mw", 0.0))
    except ValueError as exc:
        raise RecordFormatError(f"bad header value: {exc}") from None
    return TomographyRecord(np.array([counts[l] for l in LABELS]), LABELS, duration, power, meta)


def read_coincidence_csv(path) -> dict[str, CoincidenceRecord]:
    """Rows ``label,S_A,S_B,raw,window_ns,P_mW,duration_s`` keyed by analyzer label (HH, VV, ...)."""
    with Path(path).open(encoding="utf-8", newline="") as fh:
        lines = [(i, l) for i, l in enumerate(fh, start=1) if l.strip() and not l.lstrip().startswith("#")]
    if not lines:
        raise RecordFormatError("empty coincidence file")
    reader = csv.reader(l for _, l in lines)
    header = [h.strip() for h in next(reader)]
    need = ("label",) + COINCIDENCE_COLUMNS
    missing = [c for c in need if c not in header]
    if missing:
        raise RecordFormatError(f"missing columns {missing}", lines[0][0])
    out: dict[str, CoincidenceRecord] = {}
    for (lineno, _), row in zip(lines[1:], reader):
        if len(row) != len(header):
            raise RecordFormatError(f"expected {len(header)} fields, got {len(row)}", lineno)
        rec = dict(zip(header, (r.strip() for r in row)))
        label = rec["label"]
        if label in out:
            raise RecordFormatError(f"duplicate label {label!r}", lineno)
        try:
            v = {c: float(rec[c]) for c in COINCIDENCE_COLUMNS}
            out[label] = CoincidenceRecord(
                v["S_A"], v["S_B"], v["raw"], v["window_ns"] * 1e-9, v["P_mW"], v["duration_s"]
            )
        except ValueError as exc:
            raise RecordFormatError(str(exc), lineno) from None
    return out
