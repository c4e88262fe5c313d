"""File formats: JSON states and reports, CSV spectrograms and tables.

Complex numbers are stored as ``[re, im]`` pairs of decimal strings with 17
significant digits, which round-trips IEEE doubles exactly.  Spectrogram
CSV files carry the sideband index in the first column and the phase grid
in the header row; window and probe metadata travel in ``#``-prefixed
comment lines so a file is self-describing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .forward import Spectrogram
from .ladder import Coupling, DensityMatrix, SidebandWindow

__all__ = [
    "RawSpectrum",
    "ConfigError",
    "fmt",
    "window_to_dict", "window_from_dict",
    "coupling_to_dict", "coupling_from_dict",
    "density_to_json", "density_from_json",
    "save_density", "load_density",
    "spectrogram_to_csv", "spectrogram_from_csv",
    "save_raw_spectrum", "load_raw_spectrum",
    "validate_config",
]


class ConfigError(ValueError):
    """Configuration file failed schema validation."""


def fmt(x: float) -> str:
    """Decimal string with 17 significant digits (exact double round trip)."""
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# JSON pieces
# ---------------------------------------------------------------------------

def window_to_dict(w: SidebandWindow) -> dict:
    return {"n_min": w.n_min, "n_max": w.n_max, "support_stride": w.support_stride}


def window_from_dict(d: dict) -> SidebandWindow:
    return SidebandWindow(int(d["n_min"]), int(d["n_max"]), int(d.get("support_stride", 1)))


def coupling_to_dict(g: Coupling) -> dict:
    return {"magnitude": fmt(g.magnitude), "phase": fmt(g.phase), "harmonic": g.harmonic}


def coupling_from_dict(d: dict) -> Coupling:
    return Coupling(float(d["magnitude"]), float(d.get("phase", 0.0)),
                    int(d.get("harmonic", 1)))


def _complex_matrix_to_lists(m: np.ndarray) -> list:
    return [[[fmt(v.real), fmt(v.imag)] for v in row] for row in m]


def _complex_matrix_from_lists(rows: list) -> np.ndarray:
    return np.array([[complex(float(re), float(im)) for re, im in row] for row in rows])


def density_to_json(rho: DensityMatrix) -> str:
    payload = {
        "type": "density_matrix",
        "window": window_to_dict(rho.window),
        "entries": _complex_matrix_to_lists(rho.entries),
    }
    return json.dumps(payload, indent=1)


def density_from_json(text: str) -> DensityMatrix:
    d = json.loads(text)
    if d.get("type") != "density_matrix":
        raise ValueError("not a density-matrix JSON document")
    return DensityMatrix(window_from_dict(d["window"]),
                         _complex_matrix_from_lists(d["entries"]))


def save_density(rho: DensityMatrix, path) -> None:
    Path(path).write_text(density_to_json(rho))


def load_density(path) -> DensityMatrix:
    return density_from_json(Path(path).read_text())


# ---------------------------------------------------------------------------
# spectrogram CSV
# ---------------------------------------------------------------------------

def spectrogram_to_csv(s: Spectrogram) -> str:
    lines = []
    meta = {
        "window": window_to_dict(s.window),
        "probe": coupling_to_dict(s.probe),
    }
    if s.counts_per_spectrum is not None:
        meta["counts_per_spectrum"] = fmt(s.counts_per_spectrum)
    lines.append("# " + json.dumps(meta))
    lines.append("sideband," + ",".join(fmt(t) for t in s.theta_grid))
    for i, n in enumerate(s.window.indices()):
        lines.append(f"{n}," + ",".join(fmt(v) for v in s.populations[i]))
    return "\n".join(lines) + "\n"


def spectrogram_from_csv(text: str, probe: Optional[Coupling] = None) -> Spectrogram:
    meta = {}
    rows = []
    header = None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            try:
                meta.update(json.loads(line[1:].strip()))
            except json.JSONDecodeError:
                pass
            continue
        if header is None:
            header = line.split(",")
            continue
        rows.append(line.split(","))
    if header is None or not rows:
        raise ValueError("empty spectrogram CSV")
    theta = np.array([float(x) for x in header[1:]])
    idx = np.array([int(r[0]) for r in rows])
    pops = np.array([[float(x) for x in r[1:]] for r in rows])
    if "window" in meta:
        window = window_from_dict(meta["window"])
        if not np.array_equal(window.indices(), idx):
            raise ValueError("CSV rows do not match the window metadata")
    else:
        stride = 2 if np.all(idx % 2 == 0) else 1
        window = SidebandWindow(int(idx.min()), int(idx.max()), stride)
    if probe is None:
        if "probe" not in meta:
            raise ValueError("no probe coupling in CSV metadata; pass one explicitly")
        probe = coupling_from_dict(meta["probe"])
    counts = float(meta["counts_per_spectrum"]) if "counts_per_spectrum" in meta else None
    return Spectrogram(pops, theta, probe, window, counts_per_spectrum=counts)


# ---------------------------------------------------------------------------
# raw energy spectra
# ---------------------------------------------------------------------------

@dataclass
class RawSpectrum:
    """Measured electron energy spectrum relative to the zero-loss line."""

    energy_axis: np.ndarray    # eV
    counts: np.ndarray
    photon_energy: float = 1.5498   # eV, 800 nm

    def __post_init__(self):
        self.energy_axis = np.asarray(self.energy_axis, dtype=float)
        self.counts = np.asarray(self.counts, dtype=float)
        if self.energy_axis.shape != self.counts.shape:
            raise ValueError("energy axis and counts must have equal length")
        if len(self.energy_axis) and np.any(np.diff(self.energy_axis) <= 0):
            raise ValueError("energy axis must be strictly increasing")
        if np.any(self.counts < 0):
            raise ValueError("counts must be nonnegative")


def save_raw_spectrum(s: RawSpectrum, path) -> None:
    lines = ["# " + json.dumps({"photon_energy": fmt(s.photon_energy)}),
             "energy_ev,counts"]
    for e, c in zip(s.energy_axis, s.counts):
        lines.append(f"{fmt(e)},{fmt(c)}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_raw_spectrum(path) -> RawSpectrum:
    photon = 1.5498
    es, cs = [], []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            try:
                photon = float(json.loads(line[1:].strip()).get("photon_energy", photon))
            except json.JSONDecodeError:
                pass
            continue
        if line.lower().startswith("energy"):
            continue
        e, c = line.split(",")
        es.append(float(e))
        cs.append(float(c))
    return RawSpectrum(np.array(es), np.array(cs), photon_energy=photon)


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------

_SCHEMA = {
    "kind": {"type": str, "choices": ["two-color", "two-plane"]},
    "seed": {"type": int},
    "couplings": {
        "prep": {"magnitude": {"type": float}, "phase": {"type": float},
                 "harmonic": {"type": int, "choices": [1, 2]}},
        "probe": {"magnitude": {"type": float}, "phase": {"type": float},
                  "harmonic": {"type": int, "choices": [1, 2]}},
    },
    "theta": {"count": {"type": int}, "start": {"type": float}, "stop": {"type": float}},
    "window": {"n_min": {"type": int}, "n_max": {"type": int},
               "support_stride": {"type": int, "choices": [1, 2]}},
    "dispersion": {"chi": {"type": float}, "d": {"type": float},
                   "wavelength": {"type": float}, "kinetic_energy": {"type": float},
                   "rest_energy": {"type": float}},
    "noise": {"counts_per_spectrum": {"type": float}},
    "jitter": {"sigma_phase": {"type": float}, "n_samples": {"type": int}},
    "reconstruction": {
        "alpha_iterations": {"type": int}, "tau": {"type": float},
        "alpha_points": {"type": int}, "alpha_min_factor": {"type": float},
        "alpha_max_factor": {"type": float}, "solver_tol": {"type": float},
        "solver_max_steps": {"type": int}, "bisect_rel_width": {"type": float},
    },
    "benchmark": {
        "ratios": {"type": list}, "prep_strengths": {"type": list},
        "counts_per_spectrum": {"type": float}, "repeats": {"type": int},
        "theta_count": {"type": int}, "alpha_points": {"type": int},
    },
    "analysis": {"n_time": {"type": int}},
    "output": {"prefix": {"type": str}},
}


def _validate_node(node, schema, path):
    if not isinstance(node, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    for key, val in node.items():
        here = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(f"unknown key: {here}")
        spec = schema[key]
        if "type" in spec and not isinstance(spec["type"], dict):
            t = spec["type"]
            if t is float:
                if not isinstance(val, (int, float)) or isinstance(val, bool):
                    raise ConfigError(f"{here}: expected a number, got {type(val).__name__}")
            elif t is int:
                if not isinstance(val, int) or isinstance(val, bool):
                    raise ConfigError(f"{here}: expected an integer, got {type(val).__name__}")
            elif not isinstance(val, t):
                raise ConfigError(f"{here}: expected {t.__name__}, got {type(val).__name__}")
            if "choices" in spec and val not in spec["choices"]:
                raise ConfigError(f"{here}: must be one of {spec['choices']}, got {val!r}")
        else:
            _validate_node(val, spec, here)


def validate_config(cfg: dict) -> dict:
    """Schema-check a run configuration; unknown keys are rejected with
    the offending key path in the error message."""
    _validate_node(cfg, _SCHEMA, "")
    return cfg


def load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return validate_config(cfg)
