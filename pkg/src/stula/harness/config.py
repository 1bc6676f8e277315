"""Flat JSON experiment configuration.

Every key is listed in :data:`FIELDS`; anything else is rejected.  The echo
written into result files is :meth:`ExperimentConfig.to_dict`, which includes
defaults, so it re-parses to the same configuration.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from ..errors import ConfigError, InvalidInputError, InvalidParameterError
from ..potentials import get_potential
from ..samplers import SCHEMES

KINDS = ("sample", "lambda_sweep", "beta_sweep_sampling", "spectrum_sweep", "validate", "excess_risk_vs_beta")
METRICS = ("kl", "tv", "w2", "excess_risk")

# fields each kind cannot run without
REQUIRED = {
    "sample": ("beta", "lam", "n_steps"),
    "lambda_sweep": ("beta", "lambdas", "horizon"),
    "beta_sweep_sampling": ("betas", "lam", "n_steps", "record_every"),
    "spectrum_sweep": ("betas",),
    "validate": (),
    "excess_risk_vs_beta": ("betas", "lam", "n_steps"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    potential: str
    seed: int
    output_prefix: str = ""
    # sampling
    beta: float | None = None
    betas: tuple[float, ...] | None = None
    lam: float | None = None
    lambdas: tuple[float, ...] | None = None
    n_steps: int | None = None
    n_chains: int = 1
    burn_in: int | None = None
    thin: int = 1
    scheme: str = "stula"
    init: str = "point"
    x0: float | tuple[float, ...] = 0.0
    init_scale: float = 0.0
    allow_large_step: bool = False
    # lambda sweeps are specified in continuous time so every stepsize covers the same horizon
    horizon: float | None = None
    burn_in_time: float | None = None
    thin_time: float | None = None
    record_every: int | None = None
    # metrics and reference grid
    metrics: tuple[str, ...] = ("kl", "tv", "w2")
    box: tuple[tuple[float, float], ...] | None = None
    n_cells: int | None = None
    n_projections: int = 64
    # spectrum
    k: int = 6
    refine: bool = True
    # validation
    n_samples: int = 100000
    radius: float = 10.0

    def to_dict(self) -> dict:
        d = asdict(self)
        for key, v in d.items():
            if isinstance(v, tuple):
                d[key] = [list(x) if isinstance(x, tuple) else x for x in v]
        return d

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    @property
    def prefix(self) -> str:
        return self.output_prefix or self.kind


FIELDS = {f.name for f in fields(ExperimentConfig)}


def _num(name, v, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"field {name!r} must be a number, got {v!r}")
    if integer:
        if isinstance(v, float) and not v.is_integer():
            raise ConfigError(f"field {name!r} must be an integer, got {v!r}")
        return int(v)
    if not math.isfinite(v):
        raise ConfigError(f"field {name!r} must be finite")
    return float(v)


def _positive(name, v):
    if v is not None and not v > 0:
        raise ConfigError(f"field {name!r} must be positive, got {v!r}")


def _num_list(name, v):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"field {name!r} must be a non-empty list of numbers")
    out = tuple(_num(name, x) for x in v)
    for x in out:
        _positive(name, x)
    return out


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a decoded JSON object and build the configuration."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(data) - FIELDS)
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
    for key in ("kind", "potential"):
        if key not in data:
            raise ConfigError(f"missing required field {key!r}")
    if "seed" not in data or data["seed"] is None:
        raise ConfigError("missing required field 'seed' (an explicit nonzero integer)")
    kind = data["kind"]
    if kind not in KINDS:
        raise ConfigError(f"field 'kind' must be one of {', '.join(KINDS)}; got {kind!r}")
    seed = _num("seed", data["seed"], integer=True)
    if seed == 0:
        raise ConfigError("field 'seed' must be nonzero; choose a seed deliberately")
    if not isinstance(data["potential"], str):
        raise ConfigError("field 'potential' must be a string id")
    try:
        p = get_potential(data["potential"])
    except (InvalidInputError, InvalidParameterError) as exc:
        raise ConfigError(f"field 'potential': {exc}") from None

    kw: dict = {"kind": kind, "potential": data["potential"], "seed": seed}
    for name in ("beta", "lam", "horizon", "burn_in_time", "thin_time", "init_scale", "radius"):
        if data.get(name) is not None:
            kw[name] = _num(name, data[name])
            if name != "init_scale":
                _positive(name, kw[name])
    for name in ("n_steps", "n_chains", "burn_in", "thin", "record_every", "n_cells", "n_projections", "k",
                 "n_samples"):
        if data.get(name) is not None:
            kw[name] = _num(name, data[name], integer=True)
            if name != "burn_in":
                _positive(name, kw[name])
    for name in ("betas", "lambdas"):
        if data.get(name) is not None:
            kw[name] = _num_list(name, data[name])
    for name in ("allow_large_step", "refine"):
        if name in data:
            if not isinstance(data[name], bool):
                raise ConfigError(f"field {name!r} must be true or false")
            kw[name] = data[name]
    if "output_prefix" in data:
        op = data["output_prefix"]
        if not isinstance(op, str) or "/" in op or "\\" in op:
            raise ConfigError("field 'output_prefix' must be a plain file-name prefix")
        kw["output_prefix"] = op
    if "scheme" in data:
        if data["scheme"] not in SCHEMES:
            raise ConfigError(f"field 'scheme' must be one of {', '.join(SCHEMES)}")
        kw["scheme"] = data["scheme"]
    if "init" in data:
        if data["init"] not in ("point", "gaussian"):
            raise ConfigError("field 'init' must be 'point' or 'gaussian'")
        kw["init"] = data["init"]
    if "x0" in data:
        x0 = data["x0"]
        if isinstance(x0, list):
            if len(x0) != p.dim:
                raise ConfigError(f"field 'x0' must have length {p.dim}")
            kw["x0"] = tuple(_num("x0", v) for v in x0)
        else:
            kw["x0"] = _num("x0", x0)
    if "metrics" in data:
        m = data["metrics"]
        if not isinstance(m, list) or any(x not in METRICS for x in m):
            raise ConfigError(f"field 'metrics' must be a list drawn from {', '.join(METRICS)}")
        kw["metrics"] = tuple(m)
    if data.get("box") is not None:
        kw["box"] = _parse_box(data["box"], p.dim)

    missing = [f for f in REQUIRED[kind] if kw.get(f) is None]
    if missing:
        raise ConfigError(f"kind {kind!r} requires field(s): {', '.join(missing)}")
    if kind == "lambda_sweep" and len(kw["lambdas"]) < 2:
        raise ConfigError("field 'lambdas': a lambda sweep needs at least 2 stepsizes")
    if kw.get("init") == "gaussian" and not kw.get("init_scale", 0.0) > 0:
        raise ConfigError("field 'init_scale' must be positive for a gaussian init")
    if kw.get("n_projections", 64) < 8:
        raise ConfigError("field 'n_projections' must be >= 8")
    if kind == "spectrum_sweep" and kw.get("k", 6) < 2:
        raise ConfigError("field 'k' must be >= 2")
    if kind == "excess_risk_vs_beta" and p.known_minimum is None:
        raise ConfigError(f"potential {p.name!r} has no known minimum; excess risk is undefined")
    return ExperimentConfig(**kw)


def _parse_box(box, dim: int) -> tuple[tuple[float, float], ...]:
    if isinstance(box, list) and len(box) == 2 and all(isinstance(v, (int, float)) for v in box):
        box = [box] * dim
    if not isinstance(box, list) or len(box) != dim or any(not isinstance(b, list) or len(b) != 2 for b in box):
        raise ConfigError(f"field 'box' must be [lo, hi] or {dim} such pairs")
    out = tuple((_num("box", lo), _num("box", hi)) for lo, hi in box)
    if any(hi <= lo for lo, hi in out):
        raise ConfigError("field 'box' needs lo < hi on every axis")
    return out


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(data)
