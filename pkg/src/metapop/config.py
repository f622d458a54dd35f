"""Run configuration: defaults, JSON round-trip, strict key checking.

Every field has a default, so an empty JSON object is a valid config;
unknown keys are rejected with the offending key named, and the
dictionary form round-trips losslessly (it is also what gets hashed for
reproducibility manifests).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction

from .model import ModelSpec

__all__ = [
    "ConfigError",
    "ModelConfig",
    "SimulationConfig",
    "MeanFieldConfig",
    "LnaConfig",
    "ExponentConfig",
    "RunConfig",
]


class ConfigError(ValueError):
    """Invalid or unparseable run configuration."""


def _from_mapping(cls, data, where: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be an object, got {type(data).__name__}")
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in {where}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value in {where}: {exc}") from exc


@dataclass
class ModelConfig:
    """Demographic and migration parameters; mirrors ModelSpec."""

    law: str = "logistic"
    b: float = 2.0
    d: float = 0.5
    c: float = 0.1
    gamma: float = 0.5
    rho: float = 0.8
    kappa: float = 0.2
    b_table: list = field(default_factory=list)
    d_table: list = field(default_factory=list)
    size_cap: int | None = None

    def build(self) -> ModelSpec:
        try:
            return ModelSpec(law=self.law, b=self.b, d=self.d, c=self.c,
                             gamma=self.gamma, rho=self.rho, kappa=self.kappa,
                             b_table=tuple(self.b_table),
                             d_table=tuple(self.d_table),
                             size_cap=self.size_cap)
        except ValueError as exc:
            raise ConfigError(f"bad model parameters: {exc}") from exc


@dataclass
class SimulationConfig:
    """Finite-N ensemble settings shared by the simulation-driven studies."""

    N: int = 500
    N_grid: list = field(default_factory=lambda: [100, 400, 1600, 6400])
    horizon: float = 2.0
    replicas: int = 100
    seed: int = 20260814
    grid_points: int = 201
    record: str = "grid"
    x0: dict = field(default_factory=lambda: {"1": 1.0})

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ConfigError("N must be at least 1")
        if self.horizon < 0.0:
            raise ConfigError("horizon must be nonnegative")
        if self.replicas < 1:
            raise ConfigError("replicas must be at least 1")
        if self.grid_points < 2:
            raise ConfigError("grid_points must be at least 2")
        if self.record not in ("grid", "jumps"):
            raise ConfigError(f"record must be 'grid' or 'jumps', got {self.record!r}")
        if any(int(n) < 1 for n in self.N_grid):
            raise ConfigError("N_grid entries must be positive")

    def density(self) -> dict[int, float]:
        try:
            out = {int(k): float(v) for k, v in self.x0.items()}
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad x0: {exc}") from exc
        if not out or any(k < 0 or v < 0.0 for k, v in out.items()):
            raise ConfigError("x0 must map sizes >= 0 to nonnegative mass")
        return out


@dataclass
class MeanFieldConfig:
    M: int = 64
    tol: float = 1e-10

    def __post_init__(self) -> None:
        if self.M < 1:
            raise ConfigError("meanfield M must be at least 1")
        if not 0.0 < self.tol < 1.0:
            raise ConfigError("meanfield tol must lie in (0, 1)")


@dataclass
class LnaConfig:
    M: int = 64
    dt: float | None = None
    tol: float = 1e-8
    sigma0: str = "zero"

    def __post_init__(self) -> None:
        if self.M < 1:
            raise ConfigError("lna M must be at least 1")
        if self.dt is not None and self.dt <= 0.0:
            raise ConfigError("lna dt must be positive")
        if self.sigma0 != "zero":
            raise ConfigError("only the zero initial covariance is supported")


@dataclass
class ExponentConfig:
    """Inputs to the coupling-exponent calculus.

    zeta accepts a float or an exact "p/q" string; when omitted it
    defaults to 2/r0, the choice that pushes b2 to its ceiling.
    """

    r0: int = 1_000_000
    zeta: object = None

    def __post_init__(self) -> None:
        if self.r0 < 1:
            raise ConfigError("r0 must be positive")

    def zeta_value(self) -> Fraction:
        if self.zeta is None:
            return Fraction(2, int(self.r0))
        try:
            return Fraction(str(self.zeta))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad zeta: {exc}") from exc


@dataclass
class RunConfig:
    """Everything a command needs: model, blocks per layer, output dir."""

    model: ModelConfig = field(default_factory=ModelConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    meanfield: MeanFieldConfig = field(default_factory=MeanFieldConfig)
    lna: LnaConfig = field(default_factory=LnaConfig)
    exponents: ExponentConfig = field(default_factory=ExponentConfig)
    out: str = "out"

    @classmethod
    def from_dict(cls, data: dict | None) -> "RunConfig":
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in config")
        return cls(
            model=_from_mapping(ModelConfig, data.get("model"), "model"),
            simulation=_from_mapping(SimulationConfig, data.get("simulation"),
                                     "simulation"),
            meanfield=_from_mapping(MeanFieldConfig, data.get("meanfield"),
                                    "meanfield"),
            lna=_from_mapping(LnaConfig, data.get("lna"), "lna"),
            exponents=_from_mapping(ExponentConfig, data.get("exponents"),
                                    "exponents"),
            out=str(data.get("out", "out")),
        )

    def to_dict(self) -> dict:
        out = asdict(self)
        if out["exponents"]["zeta"] is not None:
            out["exponents"]["zeta"] = str(out["exponents"]["zeta"])
        return out
