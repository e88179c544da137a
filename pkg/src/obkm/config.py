"""Run configuration: JSON file, schema-validated, mapped onto typed objects."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema

from .evolution import PhysicalParams, TimeStepperConfig
from .grid import Grid
from .monitor import BlowupThresholds
from .norms import DEFAULT_SOBOLEV_M


class ConfigError(ValueError):
    """Invalid configuration; ``path`` is the dotted location of the problem."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_POS_INT = {"type": "integer", "minimum": 1}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n"],
            "properties": {"n": {"type": "integer", "minimum": 8}, "length": _POS},
        },
        "physical": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "nu_s": _POS,
                "nu_p": _NONNEG,
                "lambda": {"oneOf": [_POS, {"const": "inf"}]},
                "kelvin_voigt": {"type": "boolean"},
            },
        },
        "stepper": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dt": _POS,
                "dt_min": _POS,
                "cfl_safety": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "adaptive": {"type": "boolean"},
                "t_end": _POS,
                "mollify_epsilon": _NONNEG,
            },
        },
        "sobolev_m": {"type": "integer", "minimum": 0},
        "ic": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["single_mode", "gaussian_bump", "random_band"]},
                "amplitude": {"type": "number"},
                "seed": {"type": "integer", "minimum": 0},
                "band_limit": {"type": "integer", "minimum": 0},
                "center": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
                "radius": _POS,
                "wavevector": {"type": "array", "items": {"type": "integer"}, "minItems": 3, "maxItems": 3},
                "target_norm": _NONNEG,
            },
        },
        "thresholds": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"linf_cap": _POS, "dt_floor": _POS, "integral_cap": _POS},
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": "string"},
                "checkpoint_every": _POS_INT,
                "diagnostics_every": _POS_INT,
            },
        },
    },
    "required": ["grid"],
}


@dataclass(frozen=True)
class ICConfig:
    kind: str = "random_band"
    amplitude: float = 1.0
    seed: int = 0
    band_limit: int | None = None
    center: tuple[float, float, float] | None = None
    radius: float = 0.5
    wavevector: tuple[int, int, int] = (1, 0, 0)
    # random_band only: rescale to this H^m norm instead of using amplitude
    target_norm: float | None = None


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "."
    checkpoint_every: int = 100
    diagnostics_every: int = 1


@dataclass(frozen=True)
class RunConfig:
    grid: Grid
    physical: PhysicalParams = PhysicalParams()
    stepper: TimeStepperConfig = TimeStepperConfig()
    sobolev_m: int = DEFAULT_SOBOLEV_M
    ic: ICConfig = ICConfig()
    thresholds: BlowupThresholds = BlowupThresholds()
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        lam = self.physical.lam
        return {
            "grid": {"n": self.grid.n, "length": self.grid.length},
            "physical": {
                "nu_s": self.physical.nu_s,
                "nu_p": self.physical.nu_p,
                "lambda": "inf" if math.isinf(lam) else lam,
                "kelvin_voigt": self.physical.kelvin_voigt,
            },
            "stepper": {
                k: getattr(self.stepper, k)
                for k in ("dt", "dt_min", "cfl_safety", "adaptive", "t_end", "mollify_epsilon")
            },
            "sobolev_m": self.sobolev_m,
            "ic": {k: v for k, v in _ic_dict(self.ic).items() if v is not None},
            "thresholds": {
                "linf_cap": self.thresholds.linf_cap,
                "dt_floor": self.thresholds.dt_floor,
                "integral_cap": self.thresholds.integral_cap,
            },
            "output": {
                "directory": self.output.directory,
                "checkpoint_every": self.output.checkpoint_every,
                "diagnostics_every": self.output.diagnostics_every,
            },
        }


def _ic_dict(ic: ICConfig) -> dict:
    d = dict(ic.__dict__)
    for key in ("center", "wavevector"):
        if d[key] is not None:
            d[key] = list(d[key])
    return d


def _dotted(path) -> str:
    return ".".join(str(p) for p in path)


def _build(section: str, fn, **kwargs):
    """Call a constructor, re-raising its ValueError with a field path."""
    try:
        return fn(**kwargs)
    except ValueError as exc:
        msg = str(exc)
        key = next((k for k in kwargs if msg.startswith(k.replace("lam", "lambda"))), None)
        name = {"lam": "lambda"}.get(key, key)
        raise ConfigError(f"{section}.{name}" if name else section, msg) from None


def parse_config(data: dict) -> RunConfig:
    """Validate a decoded JSON object and build a :class:`RunConfig`.

    Raises
    ------
    ConfigError
        With ``path`` naming the offending field, e.g. ``physical.nu_s``.
    """
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        err = errors[0]
        path = _dotted(err.absolute_path)
        if err.validator == "required":
            missing = err.message.split("'")[1]
            path = f"{path}.{missing}" if path else missing
        elif err.validator == "additionalProperties":
            extra = err.message.split("'")[1]
            path = f"{path}.{extra}" if path else extra
        raise ConfigError(path, err.message)

    g = data["grid"]
    n = g["n"]
    if n & (n - 1):
        raise ConfigError("grid.n", f"must be a power of two, got {n}")
    grid = Grid(n, float(g.get("length", 2 * math.pi)))

    p = data.get("physical", {})
    lam = p.get("lambda", 1.0)
    physical = _build(
        "physical", PhysicalParams,
        nu_s=float(p.get("nu_s", 1.0)),
        nu_p=float(p.get("nu_p", 1.0)),
        lam=math.inf if lam == "inf" else float(lam),
        kelvin_voigt=bool(p.get("kelvin_voigt", False)),
    )

    s = data.get("stepper", {})
    stepper = _build("stepper", TimeStepperConfig, **{k: v for k, v in s.items()})
    if stepper.mollify_epsilon > 0:
        if stepper.mollify_epsilon <= 2 * grid.spacing:
            raise ConfigError("stepper.mollify_epsilon", f"must exceed 2*spacing = {2 * grid.spacing}")
        if stepper.mollify_epsilon >= grid.length / 2:
            raise ConfigError("stepper.mollify_epsilon", "must be below half the box length")

    ic_raw = dict(data.get("ic", {"kind": "random_band"}))
    for key in ("center", "wavevector"):
        if key in ic_raw:
            ic_raw[key] = tuple(ic_raw[key])
    ic = ICConfig(**ic_raw)
    if ic.band_limit is not None and 3 * ic.band_limit > n:
        raise ConfigError("ic.band_limit", f"must be at most n/3 = {n // 3}")
    if ic.kind == "single_mode" and not any(ic.wavevector):
        raise ConfigError("ic.wavevector", "must be nonzero")

    th = data.get("thresholds", {})
    thresholds = BlowupThresholds(**th)
    out = OutputConfig(**data.get("output", {}))
    return RunConfig(grid, physical, stepper, int(data.get("sobolev_m", DEFAULT_SOBOLEV_M)), ic, thresholds, out)


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a JSON configuration file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("", "top level must be an object")
    return parse_config(data)
