"""Run configuration: a strict JSON schema for datasets, models and search blocks."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError

SEED_ENV = "NFIS_SEED"

MODEL_KINDS = (
    "NMR", "NTSK-RLS", "NTSK-wRLS",
    "GEN-NMR", "GEN-NTSK-RLS", "GEN-NTSK-wRLS",
    "R-NMR", "R-NTSK", "RF-NTSK", "RF",
)

ALLOWED_PARAMS = {
    "NMR": {"rules"},
    "NTSK-RLS": {"rules", "lam"},
    "NTSK-wRLS": {"rules", "lam"},
    "GEN-NMR": {"rules"},
    "GEN-NTSK-RLS": {"rules", "lam"},
    "GEN-NTSK-wRLS": {"rules", "lam"},
    "R-NMR": {"rules"},
    "R-NTSK": {"rules", "lam", "solver"},
    "RF-NTSK": {"rules", "lam", "solver"},
    "RF": set(),
}

Scalar = Union[int, float, str]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DatasetSpec(_Strict):
    name: str
    path: str
    target: str
    time_column: Optional[str] = None
    columns: Optional[list[str]] = None
    horizon: int = Field(1, ge=1)
    lags: int = Field(0, ge=0)
    drop_na: bool = True


class ModelSpec(_Strict):
    kind: Literal[MODEL_KINDS]
    name: Optional[str] = None
    params: dict[str, Scalar] = Field(default_factory=dict)
    grid: Optional[dict[str, list[Scalar]]] = None

    @model_validator(mode="after")
    def _check(self):
        if self.name is None:
            self.name = self.kind
        allowed = ALLOWED_PARAMS[self.kind]
        for block, keys in (("params", self.params), ("grid", self.grid or {})):
            unknown = sorted(set(keys) - allowed)
            if unknown:
                raise ValueError(f"{block}: unknown hyperparameter(s) {unknown} for {self.kind}; allowed {sorted(allowed)}")
        for key, values in (self.grid or {}).items():
            if not values:
                raise ValueError(f"grid.{key}: empty lattice")
        if "solver" in self.params and self.params["solver"] not in ("RLS", "wRLS"):
            raise ValueError("params.solver must be 'RLS' or 'wRLS'")
        return self


class GaSpec(_Strict):
    population_size: int = Field(20, ge=2)
    generations: int = Field(30, ge=0)
    crossover_rate: float = Field(0.9, ge=0, le=1)
    mutation_rate: Optional[float] = Field(None, ge=0, le=1)
    elitism_count: int = Field(2, ge=0)
    fitness_metric: Literal["RMSE", "NRMSE"] = "RMSE"
    early_stop: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _check(self):
        if self.elitism_count >= self.population_size:
            raise ValueError("elitism_count must be smaller than population_size")
        return self


class EnsembleSpec(_Strict):
    n_members: int = Field(10, ge=1)
    z: int = Field(5, ge=1)
    subset_prob: float = Field(0.5, gt=0, le=1)
    combination: Literal["mean", "error-weighted"] = "mean"


class ForestSpec(_Strict):
    n_trees: int = Field(100, ge=1)
    max_depth: Optional[int] = Field(None, ge=0)
    min_samples_leaf: int = Field(1, ge=1)
    features_fraction: float = Field(1.0 / 3.0, gt=0, le=1)
    bootstrap: bool = True


class RunConfig(_Strict):
    datasets: list[DatasetSpec] = Field(min_length=1)
    models: list[ModelSpec] = Field(min_length=1)
    split_fraction: float = Field(0.8, gt=0, lt=1)
    seed: int = 0
    output_dir: str = "results"
    mape_zero_policy: Literal["skip", "epsilon"] = "skip"
    ga: GaSpec = Field(default_factory=GaSpec)
    ensemble: EnsembleSpec = Field(default_factory=EnsembleSpec)
    forest: ForestSpec = Field(default_factory=ForestSpec)

    @model_validator(mode="after")
    def _unique_names(self):
        for what, names in (("datasets", [d.name for d in self.datasets]), ("models", [m.name for m in self.models])):
            if len(set(names)) != len(names):
                raise ValueError(f"{what}: names must be unique")
        return self

    def dataset(self, name=None) -> DatasetSpec:
        return _pick(self.datasets, name, "dataset")

    def model(self, name=None) -> ModelSpec:
        return _pick(self.models, name, "model")


def _pick(items, name, what):
    if name is None:
        return items[0]
    for item in items:
        if item.name == name:
            return item
    raise ConfigError(f"no {what} named {name!r}")


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(part) for part in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def config_from_dict(data: dict, base_dir=None) -> RunConfig:
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(f"invalid config: {_format_errors(err)}") from None
    if base_dir is not None:
        for ds in cfg.datasets:
            p = Path(ds.path)
            if not p.is_absolute():
                ds.path = str((Path(base_dir) / p).resolve())
    return cfg


def parse_config(path) -> RunConfig:
    """Load, validate and default a JSON config; ``NFIS_SEED`` overrides ``seed``.

    Relative dataset paths are resolved against the config file's directory.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from None
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    cfg = config_from_dict(data, base_dir=path.parent)
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            cfg.seed = int(env_seed)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env_seed!r}") from None
    return cfg


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.model_dump(mode="json"), indent=2, sort_keys=True)
