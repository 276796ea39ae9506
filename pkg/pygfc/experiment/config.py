"""
Experiment configuration.

A configuration is a single JSON or TOML document:

    {
        "kernel": {"family": "mercer-synthetic", "mercer_eigs": [1.0, 0.5]},
        "grid_size": 64,
        "r_values": [2, 5, 10, 15],
        "eps_values": [0.3],
        "samples_per_point": 10000,
        "method": "auto",
        "seed": 20240101,
        "output_dir": "out/demo"
    }

The manifest a run writes embeds its configuration
under ``"config"`` and is accepted as well.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import tomli

from ..kernels import Kernel, KernelError, make_kernel
from ..spectral import DEGENERACY_TOL, TRUNCATION_TOL
from ..structs import MAX_GRID_SIZE

class ConfigError(ValueError):
    """
    Invalid experiment configuration.
    `field` names the offending key.
    """
    def __init__(self, field: str, message: str) -> None:
        self.field = field
        super().__init__(f"config field '{field}': {message}")

METHODS = ("auto", "rejection", "decomposition")
MIN_SAMPLES = 1000

@dataclass(frozen=True)
class ExperimentConfig:
    kernel: dict[str, Any]
    seed: int
    r_values: list[float]
    grid_size: int = 256
    truncation_tol: float = TRUNCATION_TOL
    degeneracy_tol: float = DEGENERACY_TOL
    eps_values: list[float] = field(default_factory=lambda: [0.3])
    samples_per_point: int = 10_000
    method: str = "auto"
    output_dir: str = "out"
    njobs: int = 1
    rejection_budget: int = 10_000_000
    ess_floor: float = 30.0
    overlap_mc_samples: int = 1_000_000
    sup_eps: float = 0.1

    def __post_init__(self) -> None:
        _validate(self)

    def build_kernel(self) -> Kernel:
        return make_kernel(self.kernel)

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)

    def digest(self) -> str:
        """sha256 of the canonical JSON form, output_dir and njobs excluded"""
        d = self.as_dict()
        d.pop("output_dir")
        d.pop("njobs")
        text = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def override(self, **kwargs: Any) -> ExperimentConfig:
        """Copy with the non-None keyword values replaced"""
        changes = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **changes) if changes else self

def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)

def _is_number(value: Any) -> bool:
    return (isinstance(value, (int, float)) and not isinstance(value, bool)
            and math.isfinite(value))

def _validate(cfg: ExperimentConfig) -> None:
    if not isinstance(cfg.kernel, Mapping):
        raise ConfigError("kernel", "must be an object")
    try:
        make_kernel(cfg.kernel)
    except KernelError as e:
        raise ConfigError(f"kernel.{e.key or 'family'}", str(e)) from e
    if not _is_int(cfg.seed):
        raise ConfigError("seed", f"an explicit integer seed is required, got {cfg.seed!r}")
    if not _is_int(cfg.grid_size) or not 2 <= cfg.grid_size <= MAX_GRID_SIZE:
        raise ConfigError("grid_size", f"must be an integer in [2, {MAX_GRID_SIZE}]")
    for name in ("truncation_tol", "degeneracy_tol"):
        value = getattr(cfg, name)
        if not _is_number(value) or not 0 < value < 1:
            raise ConfigError(name, f"must lie in (0, 1), got {value!r}")
    if cfg.degeneracy_tol >= 1e-3:
        raise ConfigError("degeneracy_tol", "must be below 1e-3")
    r = cfg.r_values
    if not isinstance(r, list) or not r or not all(_is_number(v) and v > 0 for v in r):
        raise ConfigError("r_values", "must be a non-empty list of positive numbers")
    if any(b <= a for a, b in zip(r, r[1:])):
        raise ConfigError("r_values", f"must be strictly increasing, got {r}")
    eps = cfg.eps_values
    if not isinstance(eps, list) or not eps or not all(_is_number(v) and v >= 0 for v in eps):
        raise ConfigError("eps_values", "must be a non-empty list of non-negative numbers")
    if not _is_int(cfg.samples_per_point) or cfg.samples_per_point < MIN_SAMPLES:
        raise ConfigError("samples_per_point", f"must be an integer >= {MIN_SAMPLES}")
    if cfg.method not in METHODS:
        raise ConfigError("method", f"must be one of {list(METHODS)}, got {cfg.method!r}")
    if not isinstance(cfg.output_dir, str) or not cfg.output_dir:
        raise ConfigError("output_dir", "must be a non-empty path")
    for name in ("njobs", "rejection_budget", "overlap_mc_samples"):
        value = getattr(cfg, name)
        if not _is_int(value) or value < 1:
            raise ConfigError(name, f"must be a positive integer, got {value!r}")
    if not _is_number(cfg.ess_floor) or cfg.ess_floor < 1:
        raise ConfigError("ess_floor", "must be a number >= 1")
    if not _is_number(cfg.sup_eps) or cfg.sup_eps < 0:
        raise ConfigError("sup_eps", "must be a non-negative number")

def _integral(value: Any) -> Any:
    # TOML and JSON both allow 1e7 style counts
    if isinstance(value, float) and value.is_integer():
        return int(value)
    return value

def config_from_dict(doc: Mapping[str, Any]) -> ExperimentConfig:
    """
    Build a config from a parsed document, or from a
    run manifest embedding one under ``"config"``.
    """
    if "config" in doc and isinstance(doc["config"], Mapping):
        doc = doc["config"]
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(unknown[0], "unknown configuration key")
    for key in ("kernel", "seed", "r_values"):
        if key not in doc:
            raise ConfigError(key, "missing")
    kwargs = dict(doc)
    for key in ("seed", "grid_size", "samples_per_point", "njobs",
                "rejection_budget", "overlap_mc_samples"):
        if key in kwargs:
            kwargs[key] = _integral(kwargs[key])
    for key in ("r_values", "eps_values"):
        if key in kwargs and isinstance(kwargs[key], list):
            kwargs[key] = [float(v) if _is_number(v) else v for v in kwargs[key]]
    kwargs["kernel"] = dict(kwargs["kernel"]) if isinstance(kwargs["kernel"], Mapping) else kwargs["kernel"]
    return ExperimentConfig(**kwargs)

def load_config(path: str | Path) -> ExperimentConfig:
    """
    Read a `.json` or `.toml` configuration file
    (or a run manifest).
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config", f"file {str(path)!r} not found")
    try:
        if path.suffix == ".toml":
            with open(path, "rb") as f:
                doc = tomli.load(f)
        else:
            doc = json.loads(path.read_text())
    except (tomli.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError("config", f"cannot parse {path.name}: {e}") from e
    if not isinstance(doc, Mapping):
        raise ConfigError("config", "top level must be an object")
    return config_from_dict(doc)
