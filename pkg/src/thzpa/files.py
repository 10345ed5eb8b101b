"""Measurement ingestion, model persistence, and sweep result emission.

File conventions: frequencies in Hz, powers in dBm, angles in degrees.
Measurement CSV uses the header ``freq_hz,pin_dbm,pout_dbm,phase_deg``
with rows grouped by frequency. Model files are JSON with the schema
``{kind, fc_hz, params: {...}, meta: {...}}`` and round-trip exactly.
"""

import csv
import json
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .fitting import MeasurementCurve, normalize_phase
from .linksim import SweepResult
from .pa_models import (
    GhorbaniParams,
    PaModel,
    PolyParams,
    RappParams,
    SalehParams,
)

__all__ = [
    "parse_measurement_csv",
    "save_model",
    "load_model",
    "builtin_model_path",
    "load_builtin_model",
    "emit_results",
    "read_results_csv",
]

MEASUREMENT_COLUMNS = ("freq_hz", "pin_dbm", "pout_dbm", "phase_deg")


def parse_measurement_csv(path, normalize=False, reference_pin=-40.0):
    """Read AM-AM / AM-PM measurement data into one curve per frequency.

    With normalize=True, phases are unwrapped and referenced to the
    phase at `reference_pin` per frequency before curves are built.
    """
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty measurement file") from None
        header = [h.strip() for h in header]
        for col in MEASUREMENT_COLUMNS:
            if col not in header:
                raise DataError(f"{path}: missing column {col!r}")
        idx = [header.index(col) for col in MEASUREMENT_COLUMNS]
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append(tuple(float(row[i]) for i in idx))
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")

    by_freq = {}
    for f, pin, pout, phase in rows:
        by_freq.setdefault(f, []).append((pin, pout, phase))

    if normalize:
        phase_curves = normalize_phase(
            [(f, pin, phase) for f, pin, _, phase in rows], reference_pin
        )

    curves = []
    for f in sorted(by_freq):
        pts = sorted(by_freq[f], key=lambda r: r[0])
        pin = np.array([p[0] for p in pts])
        pout = np.array([p[1] for p in pts])
        phase = np.array([p[2] for p in pts])
        if normalize:
            ref_pin, ref_phi = phase_curves[f]
            phase = np.interp(pin, ref_pin, ref_phi)
        curves.append(MeasurementCurve(fc=f, p_in=pin, p_out=pout, phase=phase))
    return curves


_PARAM_FIELDS = {
    "rapp": ("g_lin", "v_sat", "p", "a_pm", "b_pm", "q1", "q2"),
    "saleh": ("alpha1", "beta1", "alpha2", "beta2", "n1", "nu1", "n2", "nu2"),
    "ghorbani": ("y1", "y2", "y3", "y4", "z1", "z2", "z3", "z4"),
    "polynomial": ("a", "b", "valid_range"),
}

_PARAM_TYPES = {
    "rapp": RappParams,
    "saleh": SalehParams,
    "ghorbani": GhorbaniParams,
    "polynomial": PolyParams,
}


def _params_to_dict(model: PaModel):
    fields = _PARAM_FIELDS[model.kind]
    out = {}
    for name in fields:
        value = getattr(model.params, name)
        out[name] = list(value) if isinstance(value, tuple) else value
    return out


def save_model(path, model: PaModel, meta=None):
    """Write a model JSON file: {kind, fc_hz, params, meta}."""
    doc = {
        "kind": model.kind,
        "fc_hz": model.fc,
        "params": _params_to_dict(model),
        "meta": meta or {},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return path


def load_model(path) -> PaModel:
    """Load a model JSON file, validating the schema field by field."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise DataError(f"model file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from None

    for key in ("kind", "fc_hz", "params"):
        if key not in doc:
            raise DataError(f"{path}: missing key $.{key}")
    kind = doc["kind"]
    if kind not in _PARAM_TYPES:
        raise DataError(f"{path}: unknown model kind {kind!r} at $.kind")
    param_doc = doc["params"]
    fields = _PARAM_FIELDS[kind]
    unknown = set(param_doc) - set(fields)
    if unknown:
        raise DataError(f"{path}: unknown keys {sorted(unknown)} at $.params")
    required = {
        "rapp": ("g_lin", "v_sat", "p"),
        "saleh": ("alpha1", "beta1"),
        "ghorbani": ("y1", "y2", "y3", "y4"),
        "polynomial": ("a", "b"),
    }[kind]
    missing = [f for f in required if f not in param_doc]
    if missing:
        raise DataError(f"{path}: missing keys {missing} at $.params")
    kwargs = dict(param_doc)
    if kind == "polynomial":
        kwargs["a"] = tuple(kwargs["a"])
        kwargs["b"] = tuple(kwargs["b"])
        if "valid_range" in kwargs:
            kwargs["valid_range"] = tuple(kwargs["valid_range"])
    try:
        params = _PARAM_TYPES[kind](**kwargs)
        return PaModel(kind=kind, params=params, fc=float(doc["fc_hz"]))
    except (TypeError, ValueError, DataError) as exc:
        raise DataError(f"{path}: invalid parameter values at $.params: {exc}") from None


def builtin_model_path(kind):
    """Path of a bundled 315 GHz parameter file for the given model kind."""
    name = f"{kind}_315ghz.json"
    ref = resources.files("thzpa").joinpath("data", name)
    if not ref.is_file():
        raise ConfigError(f"no bundled parameter file for kind {kind!r}")
    return ref


def load_builtin_model(kind) -> PaModel:
    return load_model(builtin_model_path(kind))


def _fmt(value):
    if isinstance(value, float):
        return format(value, ".15g")
    return str(value)


def emit_results(result: SweepResult, path, fmt="csv"):
    """Write a sweep result as CSV (one row per axis point, 15 significant
    digits) or JSON (exact floats plus full metadata)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        names = result.column_names()
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(names)
            for axis_value, row in zip(result.axis, result.rows):
                record = {result.axis_name: axis_value, **row}
                writer.writerow([_fmt(record.get(n, "")) for n in names])
    elif fmt == "json":
        doc = {
            "axis_name": result.axis_name,
            "axis": result.axis,
            "rows": result.rows,
            "metadata": result.metadata,
        }
        with path.open("w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    else:
        raise ConfigError(f"unknown result format {fmt!r}")
    return path


def write_buffer_csv(buffer, path):
    """Export a sample buffer as CSV with columns sample_index,i,q."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_index", "i", "q"])
        for idx, s in enumerate(buffer.samples):
            writer.writerow([idx, format(s.real, ".15g"), format(s.imag, ".15g")])
    return path


def read_results_csv(path):
    """Read back an emitted CSV as {column: float list} (floats where possible)."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = {name: [] for name in header}
        for row in reader:
            for name, cell in zip(header, row):
                try:
                    cols[name].append(float(cell))
                except ValueError:
                    cols[name].append(cell)
    return cols
