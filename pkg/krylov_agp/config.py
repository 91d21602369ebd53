"""
Experiment configuration.

A run is described by one JSON document; command-line flags are merged
into it before validation. Every key is read with ``config.get(key,
default)`` so the defaults below are the whole story.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from krylov_agp.autocorr import FAMILIES, QuadOptions
from krylov_agp.errors import ConfigError
from krylov_agp.models import MODEL_PARAMETERS

logger = logging.getLogger(__name__)

__all__ = [
    "COMMANDS",
    "ExperimentConfig",
    "LanczosConfig",
    "ModelSpec",
    "SweepAxis",
    "load_config",
    "params_hash",
]

COMMANDS = ("lanczos", "agp", "sweep", "scaling", "truncation-report")
METHODS = ("krylov", "exact", "autocorr")
ENGINES = ("auto", "operator", "spectral")
FULL = "full"
DEFAULT_TRUNCATE: tuple[int | str, ...] = (*range(9), FULL)

_TOP_KEYS = {
    "command",
    "model",
    "params",
    "models",
    "sweep",
    "truncate",
    "mu",
    "methods",
    "out",
    "format",
    "threads",
    "seed",
    "normalized",
    "lanczos",
    "quad",
    "dense_cap_sites",
    "dense_cap_dim",
    "family",
    "family_params",
    "sizes",
    "scaling_method",
}
_LANCZOS_KEYS = {"tol", "max_steps", "engine"}
_QUAD_KEYS = {"tol", "panel"}
_SWEEP_KEYS = {"parameter", "from", "to", "steps"}


def _line_of(source: str | None, key: str) -> str:
    """`` (line N)`` for the first occurrence of ``"key"`` in the JSON text."""
    if not source:
        return ""
    needle = json.dumps(key)
    for number, line in enumerate(source.splitlines(), start=1):
        if needle in line:
            return f" (line {number})"
    return ""


def _check_keys(
    section: Mapping[str, Any], allowed: set[str], where: str, source: str | None
) -> None:
    if not isinstance(section, Mapping):
        raise ConfigError(f"section {where or 'top level'} must be an object")
    for key in section:
        if key not in allowed:
            raise ConfigError(
                f"unknown key {where}{key!r}{_line_of(source, key)}; "
                f"expected one of {sorted(allowed)}"
            )


def _number(value: Any, key: str, source: str | None) -> float:
    if isinstance(value, bool) or not isinstance(value, int | float) or not math.isfinite(value):
        raise ConfigError(
            f"{key!r} must be a finite number, got {value!r}{_line_of(source, key)}"
        )
    return float(value)


def _integer(value: Any, key: str, source: str | None, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{key!r} must be an integer >= {minimum}{_line_of(source, key)}")
    return value


@dataclass(frozen=True)
class SweepAxis:
    parameter: str
    start: float
    stop: float
    steps: int

    def values(self) -> list[float]:
        if self.steps == 1:
            return [self.start]
        span = (self.stop - self.start) / (self.steps - 1)
        return [self.start + i * span for i in range(self.steps)]


@dataclass(frozen=True)
class LanczosConfig:
    tol: float = 1e-8
    max_steps: int | None = None
    engine: str = "auto"


@dataclass(frozen=True)
class ModelSpec:
    name: str
    params: dict[str, float]


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved configuration for one command."""

    command: str
    model: ModelSpec | None = None
    models: tuple[ModelSpec, ...] = ()
    sweep: SweepAxis | None = None
    truncate: tuple[int | str, ...] = DEFAULT_TRUNCATE
    mu: float | str = "auto"
    methods: tuple[str, ...] = ("krylov", "exact")
    out: str | None = None
    format: str = "csv"
    threads: int = 1
    seed: int = 0
    normalized: bool = False
    lanczos: LanczosConfig = field(default_factory=LanczosConfig)
    quad: QuadOptions = field(default_factory=QuadOptions)
    dense_cap_sites: int = 12
    dense_cap_dim: int = 4096
    family: str | None = None
    family_params: dict[str, float] = field(default_factory=dict)
    sizes: tuple[int, ...] = ()
    scaling_method: str = "auto"

    @classmethod
    def from_dict(
        cls, config: Mapping[str, Any], source: str | None = None
    ) -> ExperimentConfig:
        """
        Validate a parsed JSON document.

        Args:
            config: the document, flags already merged in
            source: raw JSON text, used only to report line numbers

        Raises:
            ConfigError: unknown keys or invalid values
        """
        _check_keys(config, _TOP_KEYS, "", source)
        command = config.get("command")
        if command not in COMMANDS:
            raise ConfigError(f"'command' must be one of {list(COMMANDS)}, got {command!r}")

        model = None
        if config.get("model") is not None:
            model = _model_spec(config.get("model"), config.get("params", {}), source)
        models = tuple(
            _model_spec(entry.get("model"), entry.get("params", {}), source)
            if isinstance(entry, Mapping)
            else _bad_models(source)
            for entry in config.get("models", [])
        )

        sweep = None
        raw_sweep = config.get("sweep")
        if raw_sweep is not None:
            if not isinstance(raw_sweep, Mapping):
                raise ConfigError(f"'sweep' must be an object{_line_of(source, 'sweep')}")
            _check_keys(raw_sweep, _SWEEP_KEYS, "sweep.", source)
            sweep = SweepAxis(
                parameter=str(raw_sweep.get("parameter", "")),
                start=_number(raw_sweep.get("from"), "from", source),
                stop=_number(raw_sweep.get("to"), "to", source),
                steps=_integer(raw_sweep.get("steps", 1), "steps", source, 1),
            )

        truncate = tuple(_truncation(v, source) for v in config.get("truncate", DEFAULT_TRUNCATE))

        mu = config.get("mu", "auto")
        if mu != "auto":
            mu = _number(mu, "mu", source)
            if mu < 0:
                raise ConfigError(f"'mu' must be >= 0 or \"auto\"{_line_of(source, 'mu')}")

        methods = tuple(config.get("methods", ("krylov", "exact")))
        if not methods or any(m not in METHODS for m in methods):
            raise ConfigError(f"'methods' must be a non-empty subset of {list(METHODS)}")

        fmt = config.get("format", "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError(f"'format' must be csv or json, got {fmt!r}")

        raw_lanczos = config.get("lanczos", {})
        _check_keys(raw_lanczos, _LANCZOS_KEYS, "lanczos.", source)
        max_steps = raw_lanczos.get("max_steps")
        lanczos = LanczosConfig(
            tol=_number(raw_lanczos.get("tol", 1e-8), "tol", source),
            max_steps=None if max_steps is None else _integer(max_steps, "max_steps", source, 1),
            engine=raw_lanczos.get("engine", "auto"),
        )
        if lanczos.engine not in ENGINES:
            raise ConfigError(f"'lanczos.engine' must be one of {list(ENGINES)}")

        raw_quad = config.get("quad", {})
        _check_keys(raw_quad, _QUAD_KEYS, "quad.", source)
        quad = QuadOptions(
            tol=_number(raw_quad.get("tol", 1e-8), "tol", source),
            panel=_number(raw_quad.get("panel", 10.0), "panel", source),
        )
        if quad.tol <= 0 or quad.panel <= 0:
            raise ConfigError("'quad.tol' and 'quad.panel' must be positive")

        family = config.get("family")
        if family is not None and family not in FAMILIES:
            raise ConfigError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}")
        family_params = {
            str(k): _number(v, str(k), source) for k, v in config.get("family_params", {}).items()
        }
        sizes = tuple(_integer(s, "sizes", source, 1) for s in config.get("sizes", ()))
        scaling_method = config.get("scaling_method", "auto")
        if scaling_method not in ("auto", "closed", "quadrature"):
            raise ConfigError("'scaling_method' must be auto, closed or quadrature")

        cfg = cls(
            command=command,
            model=model,
            models=models,
            sweep=sweep,
            truncate=truncate,
            mu=mu,
            methods=methods,
            out=config.get("out"),
            format=fmt,
            threads=_integer(config.get("threads", 1), "threads", source, 1),
            seed=_integer(config.get("seed", 0), "seed", source, 0),
            normalized=bool(config.get("normalized", False)),
            lanczos=lanczos,
            quad=quad,
            dense_cap_sites=_integer(
                config.get("dense_cap_sites", 12), "dense_cap_sites", source, 1
            ),
            dense_cap_dim=_integer(config.get("dense_cap_dim", 4096), "dense_cap_dim", source, 2),
            family=family,
            family_params=family_params,
            sizes=sizes,
            scaling_method=scaling_method,
        )
        cfg._check_command()
        return cfg

    def _check_command(self) -> None:
        needs_model = self.command in ("lanczos", "agp", "sweep")
        if needs_model and self.model is None:
            raise ConfigError(f"'{self.command}' needs a 'model'")
        if self.command == "sweep" and self.sweep is None:
            raise ConfigError("'sweep' command needs a 'sweep' axis")
        if self.sweep is not None and self.model is not None:
            if self.sweep.parameter not in MODEL_PARAMETERS[self.model.name]:
                raise ConfigError(
                    f"sweep parameter {self.sweep.parameter!r} is not a parameter of "
                    f"{self.model.name}; expected one of {list(MODEL_PARAMETERS[self.model.name])}"
                )
        if self.command == "truncation-report" and not (self.models or self.model):
            raise ConfigError("'truncation-report' needs 'models' (or a single 'model')")
        if self.command == "scaling":
            if self.family is None:
                raise ConfigError("'scaling' needs a 'family'")
            if len(set(self.sizes)) < 2:
                raise ConfigError("'scaling' needs at least two distinct 'sizes'")

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready form accepted back by ``from_dict``."""
        out: dict[str, Any] = {
            "command": self.command,
            "truncate": list(self.truncate),
            "mu": self.mu,
            "methods": list(self.methods),
            "out": self.out,
            "format": self.format,
            "threads": self.threads,
            "seed": self.seed,
            "normalized": self.normalized,
            "lanczos": asdict(self.lanczos),
            "quad": {"tol": self.quad.tol, "panel": self.quad.panel},
            "dense_cap_sites": self.dense_cap_sites,
            "dense_cap_dim": self.dense_cap_dim,
        }
        if self.model is not None:
            out["model"] = self.model.name
            out["params"] = dict(self.model.params)
        if self.models:
            out["models"] = [{"model": m.name, "params": dict(m.params)} for m in self.models]
        if self.sweep is not None:
            out["sweep"] = {
                "parameter": self.sweep.parameter,
                "from": self.sweep.start,
                "to": self.sweep.stop,
                "steps": self.sweep.steps,
            }
        if self.family is not None:
            out["family"] = self.family
            out["family_params"] = dict(self.family_params)
            out["sizes"] = list(self.sizes)
            out["scaling_method"] = self.scaling_method
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _bad_models(source: str | None) -> ModelSpec:
    raise ConfigError(f"'models' entries must be objects{_line_of(source, 'models')}")


def _model_spec(name: Any, params: Any, source: str | None) -> ModelSpec:
    if name not in MODEL_PARAMETERS:
        raise ConfigError(
            f"unknown model {name!r}{_line_of(source, 'model')}; "
            f"choose from {sorted(MODEL_PARAMETERS)}"
        )
    if not isinstance(params, Mapping):
        raise ConfigError(f"'params' must be an object{_line_of(source, 'params')}")
    _check_keys(params, set(MODEL_PARAMETERS[name]), f"params ({name}).", source)
    return ModelSpec(name=name, params={k: _number(v, k, source) for k, v in params.items()})


def _truncation(value: Any, source: str | None) -> int | str:
    if value == FULL:
        return FULL
    return _integer(value, "truncate", source, 0)


def load_config(path: str | Path) -> tuple[dict[str, Any], str]:
    """
    Read a JSON config file.

    Returns:
        (document, raw text)

    Raises:
        ConfigError: unreadable file, syntax error (with line and column) or a non-object document
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    logger.debug(f"Loaded config {path}")
    return data, text


def params_hash(name: str, params: Mapping[str, float]) -> str:
    """First 12 hex digits of sha256 over the canonical JSON of the model spec."""
    canonical = json.dumps({"model": name, "params": dict(params)}, sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]
