"""Run configuration: one flat, JSON-serializable record per CLI invocation.

The defaults reproduce the reference simulation setting (0.16 dB/km fiber,
85% detectors, 1e-11 dark rate, 2% misalignment, error-correction
efficiency 1.1, eps_sec = 1e-10, eps_cor = 1e-15, N = 1e13), so an empty
config file runs the standard study.  parse(emit(config)) round-trips to an
equal config.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .channel import SystemConfig
from .decoy import DecoySettings
from .keyrate import ProtocolParams, SecurityBudget

__all__ = ["ConfigError", "RunConfig", "DEFAULT_DISTANCE_GRID"]

DEFAULT_DISTANCE_GRID = [float(v) for v in range(50, 801, 50)]


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"config field '{field_name}': {message}")
        self.field = field_name


@dataclass
class RunConfig:
    protocol: str = "p2"
    fiber_loss_db_km: float = 0.16
    distance_km: float = 500.0
    det_efficiency: float = 0.85
    dark_rate: float = 1e-11
    misalignment: float = 0.02
    ec_efficiency: float = 1.1
    total_pulses: float = 1e13
    eps_sec: float = 1e-10
    eps_cor: float = 1e-15
    phi_tol: float = 0.5
    optimize: bool = True
    # Explicit protocol parameters, used when optimize is false:
    # {"mu": ..., "p_z": ..., "nu": ..., "omega": ..., "p_nu": ..., "p_omega": ...}
    params: dict | None = None
    sweep_axis: str = "distance"
    sweep_grid: list = field(default_factory=lambda: list(DEFAULT_DISTANCE_GRID))
    restarts: int = 16
    seed: int = 7
    threads: int = 1
    out: str | None = None
    plot: bool = True

    def __post_init__(self) -> None:
        if self.protocol not in ("p1", "p2"):
            raise ConfigError("protocol", f"must be 'p1' or 'p2', got {self.protocol!r}")
        if self.sweep_axis not in ("distance", "pulses"):
            raise ConfigError("sweep_axis", f"must be 'distance' or 'pulses', got {self.sweep_axis!r}")
        for name in ("restarts", "seed", "threads"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(name, f"must be an integer, got {value!r}")
        if self.restarts < 1:
            raise ConfigError("restarts", "must be at least 1")
        if self.threads < 1:
            raise ConfigError("threads", "must be at least 1")

    def system_config(self) -> SystemConfig:
        try:
            return SystemConfig(
                fiber_loss_db_km=self.fiber_loss_db_km,
                distance_km=self.distance_km,
                det_efficiency=self.det_efficiency,
                dark_rate=self.dark_rate,
                misalignment=self.misalignment,
                ec_efficiency=self.ec_efficiency,
                total_pulses=self.total_pulses,
            )
        except ValueError as exc:
            raise ConfigError("system", str(exc)) from exc

    def security_budget(self) -> SecurityBudget:
        try:
            return SecurityBudget(eps_sec=self.eps_sec, eps_cor=self.eps_cor, variant=self.protocol)
        except ValueError as exc:
            raise ConfigError("eps_sec/eps_cor", str(exc)) from exc

    def protocol_params(self) -> ProtocolParams:
        """Explicit parameters for a non-optimized evaluation."""
        if self.params is None:
            raise ConfigError("params", "required when optimize is false")
        p = dict(self.params)
        try:
            mu = float(p.pop("mu"))
            p_z = float(p.pop("p_z"))
        except KeyError as exc:
            raise ConfigError(f"params.{exc.args[0]}", "missing required field") from exc
        decoy = None
        if self.protocol == "p2":
            try:
                nu = float(p.pop("nu"))
                omega = float(p.pop("omega"))
                p_nu = float(p.pop("p_nu"))
                p_omega = float(p.pop("p_omega"))
            except KeyError as exc:
                raise ConfigError(f"params.{exc.args[0]}", "missing required field") from exc
            p_vac = float(p.pop("p_vac", 1.0 - p_nu - p_omega))
            try:
                decoy = DecoySettings(nu=nu, omega=omega, p_nu=p_nu, p_omega=p_omega, p_vac=p_vac)
            except ValueError as exc:
                raise ConfigError("params", str(exc)) from exc
        if p:
            raise ConfigError(f"params.{sorted(p)[0]}", "unknown field")
        try:
            return ProtocolParams(mu=mu, p_z=p_z, decoy=decoy)
        except ValueError as exc:
            raise ConfigError("params", str(exc)) from exc

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name: f.type for f in dataclasses.fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown field")
        coerced = {}
        for name, value in data.items():
            default = getattr(cls, "__dataclass_fields__")[name].default
            if isinstance(default, bool):
                if not isinstance(value, bool):
                    raise ConfigError(name, f"must be a boolean, got {value!r}")
            elif isinstance(default, float) and not isinstance(value, (int, float)):
                raise ConfigError(name, f"must be a number, got {value!r}")
            coerced[name] = value
        return cls(**coerced)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("<file>", "top level must be a JSON object")
        return cls.from_dict(data)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_json(fh.read())
