"""Configuration parsing, report documents and CSV sweep tables.

System configs are TOML with exactly one of two top-level tables::

    [preset]
    id = "coupled_cavity"
    [preset.params]
    omega1 = 1.0e15
    ...

    [explicit]
    n_modes = 2
    n_mech = 1
    H0 = [[1.0e15, 0.0], [0.0, 1.0e15]]
    Hj = [[[0.0, [0.0, 1.0]], [[0.0, -1.0], 0.0]]]
    Gamma0 = [[0.0], [0.0]]        # optional, N x K
    Gammaj = [[[0.0], [0.0]]]      # optional

Matrix entries are either plain numbers or ``[re, im]`` pairs.  All
frequencies are angular (rad/s) and lengths are in metres.
"""
from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .errors import ConfigValidationError, ModelValidationError, OmxError, ParseError
from .system_model import (
    OPTIONAL_PRESET_PARAMS,
    PRESET_IDS,
    PRESET_PARAMS,
    LinearSystemModel,
    PresetId,
    build_preset,
    validate,
)

TOOL = "omx"
EXPLICIT_KEYS = ("n_modes", "n_mech", "H0", "Hj", "Gamma0", "Gammaj")


@dataclass(frozen=True)
class SystemConfig:
    preset: Optional[PresetId] = None
    explicit: Optional[dict] = None
    source_sha256: str = ""

    @property
    def kind(self) -> str:
        return "preset" if self.preset is not None else "explicit"


# --- matrix encoding -----------------------------------------------------------

def _entry(v, key):
    if isinstance(v, bool):
        raise ParseError(key, "boolean is not a matrix entry")
    if isinstance(v, (int, float)):
        return complex(float(v), 0.0)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(u, (int, float)) and not isinstance(u, bool) for u in v):
        return complex(float(v[0]), float(v[1]))
    raise ParseError(key, f"entry {v!r} is neither a number nor a [re, im] pair")


def decode_matrix(value, key: str) -> np.ndarray:
    if not isinstance(value, list) or not value or not all(isinstance(row, list) for row in value):
        raise ParseError(key, "expected a non-empty list of rows")
    rows = [[_entry(v, f"{key}[{i}][{j}]") for j, v in enumerate(row)] for i, row in enumerate(value)]
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ParseError(key, "rows have different lengths")
    return np.array(rows, dtype=complex)


def _clean(x: float) -> float:
    return float(x) + 0.0  # folds -0.0 into 0.0 for stable text


def encode_entry(z) -> Any:
    z = complex(z)
    return _clean(z.real) if z.imag == 0 else [_clean(z.real), _clean(z.imag)]


def encode_matrix(m) -> list:
    return [[encode_entry(v) for v in row] for row in np.asarray(m)]


def encode_complex_matrix(m) -> list:
    """Always ``[re, im]`` pairs (used in reports for uniform shape)."""
    return [[[_clean(v.real), _clean(v.imag)] for v in row] for row in np.asarray(m, dtype=complex)]


# --- parsing -------------------------------------------------------------------

def _require(table: dict, key: str, prefix: str):
    if key not in table:
        raise ParseError(f"{prefix}{key}", "required key is missing")
    return table[key]


def _parse_preset(tbl: dict) -> PresetId:
    if not isinstance(tbl, dict):
        raise ParseError("preset", "must be a table")
    pid = _require(tbl, "id", "preset.")
    if pid not in PRESET_IDS:
        raise ParseError("preset.id", f"unknown preset {pid!r}; expected one of {', '.join(PRESET_IDS)}")
    params = tbl.get("params", {})
    if not isinstance(params, dict):
        raise ParseError("preset.params", "must be a table")
    required, optional = PRESET_PARAMS[pid], OPTIONAL_PRESET_PARAMS[pid]
    for name in required:
        _require(params, name, "preset.params.")
    for name, v in params.items():
        if name not in required and name not in optional:
            raise ParseError(f"preset.params.{name}", f"not a parameter of preset {pid!r}")
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ParseError(f"preset.params.{name}", "must be a number")
    extra = set(tbl) - {"id", "params"}
    if extra:
        raise ParseError(f"preset.{sorted(extra)[0]}", "unexpected key")
    clean = {k: (int(params[k]) if k == "fsr_index" else float(params[k]))
             for k in required + optional if k in params}
    return PresetId(pid, clean)


def _parse_explicit(tbl: dict) -> dict:
    if not isinstance(tbl, dict):
        raise ParseError("explicit", "must be a table")
    extra = set(tbl) - set(EXPLICIT_KEYS)
    if extra:
        raise ParseError(f"explicit.{sorted(extra)[0]}", "unexpected key")
    n = _require(tbl, "n_modes", "explicit.")
    j = _require(tbl, "n_mech", "explicit.")
    for key, v in (("n_modes", n), ("n_mech", j)):
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            raise ParseError(f"explicit.{key}", "must be a non-negative integer")
    H0 = decode_matrix(_require(tbl, "H0", "explicit."), "explicit.H0")
    Hj_raw = _require(tbl, "Hj", "explicit.")
    if not isinstance(Hj_raw, list):
        raise ParseError("explicit.Hj", "expected a list of matrices")
    Hj = [decode_matrix(h, f"explicit.Hj[{i}]") for i, h in enumerate(Hj_raw)]
    out = {"n_modes": n, "n_mech": j, "H0": H0, "Hj": Hj}
    if "Gamma0" in tbl:
        out["Gamma0"] = decode_matrix(tbl["Gamma0"], "explicit.Gamma0")
    if "Gammaj" in tbl:
        if not isinstance(tbl["Gammaj"], list):
            raise ParseError("explicit.Gammaj", "expected a list of matrices")
        out["Gammaj"] = [decode_matrix(g, f"explicit.Gammaj[{i}]") for i, g in enumerate(tbl["Gammaj"])]
    return out


def parse_config_text(text: str) -> SystemConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError("<document>", str(exc)) from exc
    has_p, has_e = "preset" in doc, "explicit" in doc
    if has_p == has_e:
        raise ParseError("preset|explicit", "exactly one of [preset] or [explicit] must be present")
    extra = set(doc) - {"preset", "explicit"}
    if extra:
        raise ParseError(sorted(extra)[0], "unexpected top-level key")
    sha = hashlib.sha256(text.encode()).hexdigest()
    cfg = (SystemConfig(preset=_parse_preset(doc["preset"]), source_sha256=sha) if has_p
           else SystemConfig(explicit=_parse_explicit(doc["explicit"]), source_sha256=sha))
    to_model(cfg)  # surface invariant violations at parse time
    return cfg


def parse_config(path) -> SystemConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError("<file>", f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_config_text(text)


def to_model(cfg: SystemConfig) -> LinearSystemModel:
    """Build and validate the model described by ``cfg``."""
    try:
        if cfg.preset is not None:
            return build_preset(cfg.preset)
        e = cfg.explicit
        model = LinearSystemModel(
            H0=e["H0"], Hj=tuple(e["Hj"]), Gamma0=e.get("Gamma0"),
            Gammaj=tuple(e["Gammaj"]) if "Gammaj" in e else None,
            n_modes=e["n_modes"], n_mech=e["n_mech"],
        )
        return validate(model)
    except ModelValidationError as exc:
        raise ConfigValidationError(str(exc), exc.violations) from exc
    except OmxError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigValidationError(str(exc)) from exc


def config_to_dict(cfg: SystemConfig) -> dict:
    """Canonical nested dict (fixed key order) for serialization and reports."""
    if cfg.preset is not None:
        pid = cfg.preset.id
        order = PRESET_PARAMS[pid] + OPTIONAL_PRESET_PARAMS[pid]
        params = {k: cfg.preset.params[k] for k in order if k in cfg.preset.params}
        return {"preset": {"id": pid, "params": params}}
    e = cfg.explicit
    out = {"n_modes": e["n_modes"], "n_mech": e["n_mech"], "H0": encode_matrix(e["H0"]),
           "Hj": [encode_matrix(h) for h in e["Hj"]]}
    if "Gamma0" in e:
        out["Gamma0"] = encode_matrix(e["Gamma0"])
    if "Gammaj" in e:
        out["Gammaj"] = [encode_matrix(g) for g in e["Gammaj"]]
    return {"explicit": out}


def serialize_config(cfg: SystemConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


# --- report documents ----------------------------------------------------------

def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def header(command: str, inputs: dict, config_sha256: str | None = None) -> dict:
    """Reproducibility header: tool, version, command and every input value."""
    inputs = jsonable(inputs)
    digest = config_sha256 or sha256_text(json.dumps(inputs, sort_keys=True))
    return {"tool": TOOL, "version": __version__, "command": command,
            "config_sha256": digest, "inputs": inputs}


def quantity(value, unit: str) -> dict:
    return {"value": jsonable(value), "unit": unit}


def jsonable(v):
    """Convert numpy scalars/arrays and complex numbers into JSON-safe values."""
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return jsonable(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": _finite(v.real), "im": _finite(v.imag)}
    if isinstance(v, (float, np.floating)):
        return _finite(float(v))
    return v


def _finite(x: float):
    x = float(x)
    if not math.isfinite(x):
        return repr(x)  # JSON has no inf/nan literals
    return _clean(x)


def dump_document(doc: dict) -> str:
    return json.dumps(jsonable(doc), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def classification_document(report, model: LinearSystemModel, cfg_dict: dict, sha: str,
                            warnings_: list | None = None) -> dict:
    coords = []
    for c in report.coordinates:
        coords.append({
            "index": c.index,
            "label": c.label,
            "flags": c.flags,
            "basis_conflict": c.conflict,
            "dispersive_shifts": quantity(c.dispersive_shifts, "rad/s/m"),
            "coherent_mixing": quantity(encode_complex_matrix(c.coherent_mixing), "1/m"),
            "dissipative_derivs": quantity(c.dissipative_derivs, "sqrt(rad/s)/m"),
        })
    return {
        "header": header("classify", cfg_dict, sha),
        "n_modes": model.n_modes,
        "n_mech": model.n_mech,
        "mode_labels": list(model.mode_labels),
        "flags": report.flags,
        "eigenvalues": quantity(report.eig.eigvals, "rad/s"),
        "clusters": [list(c) for c in report.eig.clusters],
        "basis": quantity(encode_complex_matrix(report.basis), "1"),
        "coordinates": coords,
        "warnings": list(warnings_ or []),
    }


# --- sweep tables --------------------------------------------------------------

@dataclass(frozen=True)
class SweepTable:
    columns: tuple
    data: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.data, dtype=float)
        if d.ndim != 2 or d.shape[1] != len(self.columns):
            raise ValueError(f"table must be rectangular with {len(self.columns)} columns")
        if not np.all(np.isfinite(d)):
            raise ValueError("table contains non-finite values")
        d = d + 0.0
        d.setflags(write=False)
        object.__setattr__(self, "data", d)
        object.__setattr__(self, "columns", tuple(self.columns))

    def to_csv(self) -> str:
        lines = []
        for k, v in self.provenance.items():
            text = json.dumps(jsonable(v), sort_keys=True) if not isinstance(v, str) else v
            lines.append(f"# {k}: {text}")
        lines.append(",".join(self.columns))
        for row in self.data:
            lines.append(",".join("%.17g" % v for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "SweepTable":
        prov, rows, cols = {}, [], None
        for line in text.splitlines():
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition(": ")
                prov[k] = v
            elif cols is None:
                cols = tuple(line.split(","))
            elif line:
                rows.append([float(x) for x in line.split(",")])
        return cls(cols or (), np.array(rows).reshape(-1, len(cols or ())), prov)


def table_provenance(command: str, inputs: dict, warnings_: list | None = None) -> dict:
    h = header(command, inputs)
    prov = {"tool": h["tool"], "version": h["version"], "command": command,
            "config_sha256": h["config_sha256"], "inputs": h["inputs"]}
    for i, w in enumerate(warnings_ or []):
        prov[f"warning{i + 1}"] = w
    return prov
