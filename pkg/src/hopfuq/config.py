"""Run configuration: flat JSON documents merged with command-line flags."""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .exceptions import DomainError
from .model import DEFAULT_DOMAIN, FastSlowSystem, ModifiedExp, NormalForm, PolynomialReal

__all__ = ["RunConfig", "load_config_file", "resolve_config", "OUTPUT_DIR_ENV", "MIN_EPS"]

OUTPUT_DIR_ENV = "HOPFUQ_OUTPUT_DIR"
MIN_EPS = 0.005

SYSTEMS = ("normal-form", "modified-exp", "polynomial")


@dataclass
class RunConfig:
    """Every setting a command may read; unused keys are carried along for provenance."""

    system: str = "normal-form"
    c: float = 1.0
    a: float = 1.0
    b: float = 1.0
    coefficients: str = "0,1"
    delta: float = 0.1
    domain_min: float = DEFAULT_DOMAIN[0]
    domain_max: float = DEFAULT_DOMAIN[1]
    measure: str = "uniform,-1,-0.4"
    eps: float = 0.05
    h: float = 2.0
    rtol: float = 1e-10
    atol: float = 1e-13
    max_step: float = 0.1
    horizon: float = 8.0
    seed: int = 0
    n: int = 1000
    workers: int = 1
    tau0: str = "-0.5"
    tau_plus: float | None = None
    q: int | None = None
    q_max: int = 4
    u_min: float = -4.0
    u_max: float = 4.0
    v_max: float = 4.0
    resolution: int = 128
    grid_u: str = "-2,2,81"
    grid_v: str = "0,2,41"
    pi: str = "0,1"
    truncation: int = 16
    tol: float = 1e-9
    allow_small_eps: bool = False
    skip_ensemble: bool = False
    output_dir: str | None = None

    def validate(self) -> "RunConfig":
        if self.system not in SYSTEMS:
            raise DomainError(f"unknown system {self.system!r}; choose from {', '.join(SYSTEMS)}")
        if not (math.isfinite(self.eps) and self.eps > 0):
            raise DomainError(f"eps must be positive, got {self.eps}")
        if self.eps < MIN_EPS and not self.allow_small_eps:
            raise DomainError(f"eps={self.eps} is below {MIN_EPS}; pass --allow-small-eps to force it")
        if self.delta < 0:
            raise DomainError(f"delta must be >= 0, got {self.delta}")
        if self.n < 1 or self.workers < 1:
            raise DomainError("n and workers must be >= 1")
        if self.q is not None and self.q < 0:
            raise DomainError("q must be >= 0")
        if self.q_max < 1:
            raise DomainError("q_max must be >= 1")
        self.build_system()
        return self

    def field(self):
        domain = (self.domain_min, self.domain_max)
        if self.system == "normal-form":
            return NormalForm(self.c, domain)
        if self.system == "modified-exp":
            return ModifiedExp(self.a, self.b, domain)
        coeffs = tuple(float(v) for v in self.coefficients.split(",") if v.strip())
        return PolynomialReal(coeffs, self.b, domain)

    def build_system(self) -> FastSlowSystem:
        return FastSlowSystem(self.field(), delta=self.delta, eps=self.eps)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("output_dir")
        return out


def load_config_file(path: str | os.PathLike) -> dict:
    """Read a flat JSON object of config keys (dashes or underscores)."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise DomainError(f"config file {path} must hold a flat JSON object")
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for key, val in data.items():
        name = key.replace("-", "_")
        if name not in known:
            raise DomainError(f"unknown config key {key!r}")
        if isinstance(val, (dict, list)):
            if isinstance(val, list) and all(isinstance(v, (int, float)) for v in val):
                val = ",".join(repr(v) for v in val)
            else:
                raise DomainError(f"config key {key!r} must be a scalar")
        out[name] = val
    return out


def resolve_config(file_values: dict, flag_values: dict) -> RunConfig:
    """Defaults, then file values, then explicitly given flags; then validate."""
    merged = dict(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    if merged.get("output_dir") is None:
        merged["output_dir"] = os.environ.get(OUTPUT_DIR_ENV)
    cfg = RunConfig()
    for f in fields(RunConfig):
        if f.name in merged:
            setattr(cfg, f.name, _coerce(f.name, merged[f.name]))
    return cfg.validate()


def _coerce(name, value):
    default = getattr(RunConfig(), name)
    if value is None:
        return None
    if isinstance(default, bool):
        if isinstance(value, str):
            return value.lower() in ("1", "true", "yes")
        return bool(value)
    if name in ("n", "workers", "seed", "resolution", "truncation", "q_max", "q"):
        if isinstance(value, float) and not value.is_integer():
            raise DomainError(f"{name} must be an integer, got {value}")
        return int(value)
    if isinstance(default, float) or name == "tau_plus":
        return float(value)
    return str(value) if not isinstance(value, str) else value
