"""Run-configuration parsing.

Plain-text ``key = value`` files with dotted keys and ``#`` comments; the
schema lives in KEY_SCHEMA below and is documented in the README. Parsing
fills defaults, rejects unknown keys, and reports every problem with its
line number. Which keys are required depends on the command and is checked
by ``require_keys`` before a pipeline runs.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

TWO_PI = 2.0 * math.pi


class ConfigError(ValueError):
    pass


def _parse_float(raw: str) -> float:
    return float(raw)


def _parse_int(raw: str) -> int:
    return int(raw)


def _parse_str(raw: str) -> str:
    return raw.strip()


def _parse_vec3(raw: str) -> tuple[float, float, float]:
    parts = [float(p) for p in raw.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated numbers, got {len(parts)}")
    return tuple(parts)  # type: ignore[return-value]


def _parse_range(raw: str) -> tuple[float, float]:
    parts = [float(p) for p in raw.split(",")]
    if len(parts) != 2:
        raise ValueError(f"expected two comma-separated numbers, got {len(parts)}")
    return (parts[0], parts[1])


def _parse_mat9(raw: str) -> tuple[float, ...]:
    parts = [float(p) for p in raw.split(",")]
    if len(parts) != 9:
        raise ValueError(f"expected nine comma-separated numbers, got {len(parts)}")
    return tuple(parts)


def _parse_points(raw: str) -> tuple[tuple[float, float, float], ...]:
    pts = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if chunk:
            pts.append(_parse_vec3(chunk))
    if not pts:
        raise ValueError("empty point list")
    return tuple(pts)


def _positive(v) -> bool:
    return v > 0


def _nonnegative(v) -> bool:
    return v >= 0


_FIELD_NAMES = ("cats_eye", "steady_abc", "aperiodic_abc", "affine")
_AXES = ("x", "y", "z")
_BASES = ("xi2", "eta2")
_PARTNERS = ("xi1", "xi3", "eta1", "eta3")
_SEED_MODES = ("grid", "grid3", "list")
_CLASSIFY_MODES = ("hyperbolic", "elliptic")

# key -> (parser, validator or None, default or REQUIRED-marker, description)
_REQ = object()

KEY_SCHEMA = {
    "field.name": (_parse_str, lambda v: v in _FIELD_NAMES, _REQ, f"one of {_FIELD_NAMES}"),
    "field.A": (_parse_float, None, math.sqrt(3.0), "ABC coefficient A"),
    "field.B": (_parse_float, None, math.sqrt(2.0), "ABC coefficient B"),
    "field.C": (_parse_float, None, 1.0, "ABC coefficient C"),
    "field.k0": (_parse_float, None, 0.3, "aperiodic modulation amplitude"),
    "field.k1": (_parse_float, None, 0.5, "aperiodic tanh rate"),
    "field.k2": (_parse_float, None, 1.5, "aperiodic cosine chirp rate"),
    "field.k3": (_parse_float, None, 1.8, "aperiodic sine chirp rate"),
    "field.c": (_parse_float, lambda v: v > 1.0, 2.0, "cat's eye parameter, > 1"),
    "field.M": (_parse_mat9, None, None, "affine field matrix, row-major"),
    "field.b": (_parse_vec3, None, (0.0, 0.0, 0.0), "affine field offset"),
    "horizon.t0": (_parse_float, None, _REQ, "flow-map start time"),
    "horizon.t1": (_parse_float, None, _REQ, "flow-map end time (may be < t0)"),
    "tol": (_parse_float, _positive, 1e-8, "flow-map integrator tolerance"),
    "seeds.mode": (_parse_str, lambda v: v in _SEED_MODES, "grid", f"one of {_SEED_MODES}"),
    "seeds.nx": (_parse_int, _positive, 20, "grid points along first in-plane axis"),
    "seeds.ny": (_parse_int, _positive, 20, "grid points along second in-plane axis"),
    "seeds.nz": (_parse_int, _positive, 5, "grid3 points along the third axis"),
    "seeds.plane_axis": (_parse_str, lambda v: v in _AXES, "z", "fixed axis of the seed plane"),
    "seeds.plane_value": (_parse_float, None, 0.0, "value of the fixed axis"),
    "seeds.range_a": (_parse_range, None, (0.0, TWO_PI), "extent along first in-plane axis"),
    "seeds.range_b": (_parse_range, None, (0.0, TWO_PI), "extent along second in-plane axis"),
    "seeds.range_c": (_parse_range, None, (0.0, TWO_PI), "grid3 extent along the fixed axis"),
    "seeds.list": (_parse_points, None, None, "semicolon-separated x,y,z triples"),
    "section.axis": (_parse_str, lambda v: v in _AXES, "z", "section plane axis"),
    "section.value": (_parse_float, None, 0.0, "section plane value"),
    "section.eps": (_parse_float, _positive, 2e-3, "section band half-width"),
    "window.lo": (_parse_float, _nonnegative, 4e4, "window start (time or arclength)"),
    "window.hi": (_parse_float, _positive, 5e4, "window end (time or arclength)"),
    "time.total": (_parse_float, _positive, 2e4, "classical-poincare total time"),
    "line.base": (_parse_str, lambda v: v in _BASES, "xi2", "dual system base"),
    "line.s_max": (_parse_float, _positive, 5e4, "maximum arclength"),
    "line.h_max": (_parse_float, _positive, 0.1, "arclength step cap"),
    "line.tol": (_parse_float, _positive, None, "arclength stepper tolerance (defaults to tol)"),
    "line.stride": (_parse_float, _nonnegative, 0.0, "vertex output stride (0 = every step)"),
    "line.eps": (_parse_float, None, 0.0, "blend amplitude"),
    "line.partner": (_parse_str, lambda v: v in _PARTNERS, None, "blend partner"),
    "line.orientation": (_parse_vec3, None, (0.0, 0.0, 1.0), "initial orientation"),
    "fd.delta": (_parse_float, _positive, 1e-5, "finite-difference displacement"),
    "sphere.center": (_parse_vec3, None, None, "tracer sphere center"),
    "sphere.radius": (_parse_float, _positive, 1e-3, "tracer sphere radius"),
    "sphere.n_points": (_parse_int, lambda v: v >= 50, 128, "tracers on the sphere"),
    "classify.mode": (_parse_str, lambda v: v in _CLASSIFY_MODES, "hyperbolic",
                      f"one of {_CLASSIFY_MODES}"),
    "classify.eps": (_parse_float, _positive, 0.01, "perturbation blend amplitude"),
    "classify.tangent_threshold": (_parse_float, _positive, None,
                                   "frozen tangent-cloud distance threshold"),
    "classify.normal_factor": (_parse_float, _positive, 5.0,
                               "required normal/tangent threshold ratio"),
    "classify.sphere_horizon": (_parse_float, _positive, 1.0, "sphere advection horizon"),
    "classify.angle_max_deg": (_parse_float, _positive, 10.0, "sphere axis alignment limit"),
    "classify.neighbor_radius": (_parse_float, _positive, 0.5, "surface patch radius"),
    "classify.delta": (_parse_float, _positive, 0.2, "stretch-band deviation"),
    "classify.n_z": (_parse_int, lambda v: v >= 4, 32, "torus mesh z bins"),
    "classify.n_theta": (_parse_int, lambda v: v >= 4, 32, "torus mesh poloidal bins"),
    "classify.R1": (_parse_float, _positive, 2.0, "toroidal frame major radius"),
    "classify.R2": (_parse_float, _positive, 1.0, "toroidal frame height scale"),
    "classify.min_pass_fraction": (_parse_float, _positive, 0.5,
                                   "stretch-audit pass fraction for elliptic"),
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)

    def get(self, key: str):
        return self.values[key]

    def config_hash(self) -> str:
        canon = json.dumps(self.values, sort_keys=True, separators=(",", ":"),
                           default=lambda o: list(o))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def where(self, key: str) -> str:
        line = self.lines.get(key)
        return f"line {line}" if line is not None else "default"


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run-config; problems carry line/field diagnostics."""
    values: dict = {}
    lines: dict = {}
    errors: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            errors.append(f"line {lineno}: expected 'key = value', got {stripped!r}")
            continue
        key, _, rhs = stripped.partition("=")
        key = key.strip()
        rhs = rhs.strip()
        if key not in KEY_SCHEMA:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in values:
            errors.append(f"line {lineno}: duplicate key {key!r} "
                          f"(first set on line {lines[key]})")
            continue
        parser, validator, _, desc = KEY_SCHEMA[key]
        try:
            value = parser(rhs)
        except ValueError as exc:
            errors.append(f"line {lineno}: {key}: cannot parse {rhs!r} ({exc})")
            continue
        if validator is not None and not validator(value):
            errors.append(f"line {lineno}: {key}: value {value!r} out of range ({desc})")
            continue
        values[key] = value
        lines[key] = lineno

    for key, (_, _, default, _) in KEY_SCHEMA.items():
        if key not in values and default is not _REQ and default is not None:
            values[key] = default
    if "line.tol" not in values:
        values["line.tol"] = values.get("tol", 1e-8)

    if "window.lo" in values and "window.hi" in values:
        if not values["window.lo"] < values["window.hi"]:
            errors.append("window.lo must be strictly below window.hi "
                          f"(got {values['window.lo']} >= {values['window.hi']})")

    if errors:
        raise ConfigError("invalid run config:\n  " + "\n  ".join(errors))
    return RunConfig(values=values, lines=lines)


def require_keys(cfg: RunConfig, keys: list[str], command: str) -> None:
    missing = [k for k in keys if k not in cfg.values]
    if missing:
        raise ConfigError(
            f"command {command!r} requires config keys: {', '.join(missing)}")


def apply_overrides(cfg: RunConfig, overrides: list[str]) -> RunConfig:
    """Apply KEY=VALUE command-line overrides on top of a parsed config."""
    if not overrides:
        return cfg
    parts = []
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        key, _, rhs = item.partition("=")
        parts.append(f"{key.strip()} = {rhs.strip()}")
    merged = dict(cfg.values)
    patch = parse_unchecked_fragment("\n".join(parts))
    merged.update(patch.values)
    out = RunConfig(values=merged, lines=dict(cfg.lines))
    return out


def parse_unchecked_fragment(text: str) -> RunConfig:
    """Parse a fragment with schema checks but without default filling."""
    values: dict = {}
    lines: dict = {}
    errors: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, _, rhs = stripped.partition("=")
        key = key.strip()
        rhs = rhs.strip()
        if key not in KEY_SCHEMA:
            errors.append(f"override {key!r}: unknown key")
            continue
        parser, validator, _, desc = KEY_SCHEMA[key]
        try:
            value = parser(rhs)
        except ValueError as exc:
            errors.append(f"override {key}: cannot parse {rhs!r} ({exc})")
            continue
        if validator is not None and not validator(value):
            errors.append(f"override {key}: value {value!r} out of range ({desc})")
            continue
        values[key] = value
        lines[key] = lineno
    if errors:
        raise ConfigError("invalid overrides:\n  " + "\n  ".join(errors))
    return RunConfig(values=values, lines=lines)
