"""Scenario configuration: a strict schema with defaults resolved per preset."""

from __future__ import annotations

import json
import math
from enum import Enum
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .diagnostics import SerrinConfig
from .solver import PhysicalConstants, SchemeConfig, SubstepScheme

__all__ = [
    "Preset",
    "ScenarioSpec",
    "ConfigError",
    "load_config",
    "dump_config",
    "parse_config",
]


class ConfigError(ValueError):
    """Missing file, unreadable document, or schema/constraint violation."""


class Preset(str, Enum):
    taylor_green = "taylor_green"
    aligned_mhd_mode = "aligned_mhd_mode"
    vacuum_blob = "vacuum_blob"
    random_bandlimited = "random_bandlimited"
    pure_heat = "pure_heat"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Amplitudes(_Strict):
    u: float = 1.0
    H: float = 0.5
    theta: float = Field(1.0, ge=0.0)


class DensitySpec(_Strict):
    """``constant``: rho = base.  ``sine``: base (1 + contrast sin x sin y sin z).
    ``blob``: base + contrast exp(-|d|^2 / 2 width^2) around the box centre.
    A positive ``vacuum_radius`` multiplies the profile by a smoothstep that
    vanishes identically within that distance of the origin."""

    kind: Literal["constant", "sine", "blob"] = "constant"
    base: float = Field(1.0, ge=0.0)
    contrast: float = 0.0
    width: float = Field(0.8, gt=0.0)
    vacuum_radius: float = Field(0.0, ge=0.0)

    @model_validator(mode="after")
    def _nonnegative(self):
        if self.kind == "sine" and abs(self.contrast) > 1.0:
            raise ValueError("sine density needs |contrast| <= 1 to stay non-negative")
        if self.kind == "blob" and self.base + min(self.contrast, 0.0) < 0.0:
            raise ValueError("blob density would go negative")
        return self


class ConstantsSpec(_Strict):
    mu: float = Field(0.05, gt=0.0)
    nu: float = Field(0.05, gt=0.0)
    c_v: float = Field(1.0, gt=0.0)
    kappa: float = Field(0.1, gt=0.0)

    def build(self) -> PhysicalConstants:
        return PhysicalConstants(mu=self.mu, nu=self.nu, c_v=self.c_v, kappa=self.kappa)


class SchemeSpec(_Strict):
    cfl_number: float = Field(0.5, gt=0.0, le=1.0)
    density_floor: Optional[float] = Field(None, ge=0.0)
    floor_fraction: Optional[float] = Field(None, ge=0.0, lt=1.0)
    dealias: bool = True
    max_dt: float = Field(1e-2, gt=0.0)
    fixed_dt: Optional[float] = Field(None, gt=0.0)
    substep_scheme: SubstepScheme = SubstepScheme.rk3_imex
    max_courant: float = Field(1.0, gt=0.0)
    pressure_tol: float = Field(1e-12, gt=0.0)
    pressure_maxiter: int = Field(500, ge=1)

    def build(self) -> SchemeConfig:
        d = self.model_dump()
        if d["floor_fraction"] is None:
            d["floor_fraction"] = 1e-6
        return SchemeConfig(**d)


class DiagnosticsSpec(_Strict):
    serrin_s: float = 4.0
    serrin_r: float = 6.0
    alert_M0: Optional[float] = Field(None, gt=0.0)
    magnetic_q: float = Field(4.0, ge=2.0, le=12.0)
    M: float = Field(1.0, gt=0.0)
    hermite_audit: bool = True

    @model_validator(mode="after")
    def _serrin(self):
        try:
            self.serrin()
        except ValueError as exc:
            raise ValueError(f"{exc} (admissible range: 3 < r <= inf, 2/s + 3/r <= 1)") from None
        return self

    def serrin(self) -> SerrinConfig:
        return SerrinConfig(s=self.serrin_s, r=self.serrin_r, alert_threshold=self.alert_M0)


class OutputSpec(_Strict):
    every: int = Field(10, ge=1)
    checkpoint_every: Optional[int] = Field(None, ge=1)


class ScenarioSpec(_Strict):
    preset: Preset
    n: int = 32
    box_length: float = Field(2.0 * math.pi, gt=0.0)
    amplitude: Amplitudes = Amplitudes()
    density: Optional[DensitySpec] = None
    rng_seed: int = Field(0, ge=0, lt=2**64)
    random_kmax: float = Field(4.0, gt=0.0)
    constants: ConstantsSpec = ConstantsSpec()
    scheme: SchemeSpec = SchemeSpec()
    diagnostics: DiagnosticsSpec = DiagnosticsSpec()
    output: OutputSpec = OutputSpec()
    horizon: float = Field(1.0, ge=0.0)
    max_steps: Optional[int] = Field(None, ge=0)

    @field_validator("n")
    @classmethod
    def _grid_size(cls, n):
        if n < 8 or n % 2:
            raise ValueError("n must be an even integer >= 8")
        return n

    @model_validator(mode="after")
    def _resolve_density(self):
        if self.density is None:
            if self.preset is Preset.vacuum_blob:
                d = DensitySpec(kind="blob", base=0.2, contrast=0.8, width=0.8, vacuum_radius=0.6)
            else:
                d = DensitySpec()
            object.__setattr__(self, "density", d)
        if self.scheme.floor_fraction is None:
            # vacuum runs: a 1e-6 floor makes 1/rho span six decades and the
            # explicit diffusion remainder forces dt ~ 1e-8
            frac = 1e-2 if self.preset is Preset.vacuum_blob else 1e-6
            object.__setattr__(self, "scheme", self.scheme.model_copy(update={"floor_fraction": frac}))
        return self

    def scaled(self, c: float) -> ScenarioSpec:
        """Copy with u0 and H0 amplitudes multiplied by c."""
        amp = self.amplitude.model_copy(update={"u": c * self.amplitude.u, "H": c * self.amplitude.H})
        return self.model_copy(update={"amplitude": amp})

    def to_dict(self) -> dict:
        return self.model_dump(mode="python")


def _format_error(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{loc}: {err['msg']}")
    return "; ".join(lines)


def parse_config(data: dict) -> ScenarioSpec:
    try:
        return ScenarioSpec.model_validate(_plain(data))
    except ValidationError as exc:
        raise ConfigError(_format_error(exc)) from None


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_plain(v) for v in obj]
    if isinstance(obj, Enum):
        return obj.value
    return obj


def load_config(path: str | Path) -> ScenarioSpec:
    """Read a JSON or YAML scenario file (chosen by suffix; YAML otherwise)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(data)


def dump_config(spec: ScenarioSpec, path: str | Path | None = None) -> str:
    """Serialise the fully resolved spec; JSON for ``.json`` paths, YAML otherwise."""
    data = _plain(spec.to_dict())
    as_json = path is not None and Path(path).suffix == ".json"
    text = json.dumps(data, indent=2) if as_json else yaml.safe_dump(data, sort_keys=False)
    if path is not None:
        Path(path).write_text(text)
    return text
