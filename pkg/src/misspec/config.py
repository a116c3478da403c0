"""Run configuration: a line-oriented `key = value` format with [section] headers.

Every key belongs to one section; keys may also appear before the first
header.  Command-line `--key value` flags override file values.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any

COMMANDS = ("capacity", "misspecified-batch", "misspecified-online", "constrained", "sandwich",
            "combined", "nml", "pnml", "add-beta", "asymptotic", "simulate", "reproduce-table1")


class ConfigError(ValueError):
    """Syntax or precondition error in a run configuration."""


def _int_list(text: str) -> tuple[int, ...]:
    parts = [p.strip() for p in text.replace(";", ",").split(",") if p.strip()]
    return tuple(_int(p) for p in parts)


def _int_list_or_empty(text: str) -> tuple[int, ...]:
    return _int_list(text) if text.strip() else ()


def _opt_float(text: str) -> float | None:
    return None if text.strip().lower() in ("auto", "none", "") else float(text)


def _opt_int(text: str) -> int | None:
    return None if text.strip().lower() in ("auto", "none", "") else _int(text)


def _int(text: str) -> int:
    v = float(text)
    if not v.is_integer():
        raise ValueError(f"{text!r} is not an integer")
    return int(v)


# key -> (section, parser)
_KEYS: dict[str, tuple[str, Any]] = {
    "command": ("run", str),
    "out": ("run", str),
    "seed": ("run", _int),
    "family": ("model", str),
    "phi_lo": ("model", float),
    "phi_hi": ("model", float),
    "theta_lo": ("model", float),
    "theta_hi": ("model", float),
    "grid": ("model", _opt_int),
    "theta_support": ("model", _int_list_or_empty),
    "n": ("solver", _int),
    "n_list": ("solver", _int_list_or_empty),
    "l": ("solver", _int),
    "lambda": ("solver", _opt_float),
    "eps": ("solver", _opt_float),
    "max_iter": ("solver", _int),
    "mode": ("solver", str),
    "stage2": ("solver", str),
    "alpha": ("solver", float),
    "k": ("solver", _opt_int),
    "phi": ("simulate", float),
    "trials": ("simulate", _int),
    "predictor": ("simulate", str),
}
SECTIONS = tuple(sorted({s for s, _ in _KEYS.values()}))
_FIELD = {"lambda": "lam"}


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters.

    grid=None picks 1001 points for Bernoulli, lattice resolution 20 for
    multinomial(d) and 21 points per axis for the binary Markov family.
    lam and eps None pick the solver defaults.
    """

    command: str
    out: str | None = None
    seed: int = 0
    family: str = "bernoulli"
    phi_lo: float = 0.0
    phi_hi: float = 1.0
    theta_lo: float = 0.25
    theta_hi: float = 0.75
    grid: int | None = None
    theta_support: tuple[int, ...] = ()
    n: int = 100
    n_list: tuple[int, ...] = ()
    l: int = 1
    lam: float | None = None
    eps: float | None = None
    max_iter: int = 100_000
    mode: str = "online"
    stage2: str = "restrict"
    alpha: float = 0.1
    k: int | None = None
    phi: float = 0.1
    trials: int = 1000
    predictor: str = "ab"

    def __post_init__(self):
        validate(self)

    def grid_size(self) -> int:
        if self.grid is not None:
            return self.grid
        if self.family.startswith("multinomial"):
            return 20
        if self.family.startswith("markov"):
            return 21
        return 1001

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["theta_support"] = list(self.theta_support)
        d["n_list"] = list(self.n_list)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunConfig":
        d = dict(d)
        d["theta_support"] = tuple(d.get("theta_support", ()))
        d["n_list"] = tuple(d.get("n_list", ()))
        return cls(**d)


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def validate(c: RunConfig) -> None:
    from .families import parse_family

    _require(c.command in COMMANDS, f"command must be one of {', '.join(COMMANDS)}; got {c.command!r}")
    try:
        parse_family(c.family)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    _require(c.n >= 1, f"n must be a positive integer; got {c.n}")
    _require(all(v >= 1 for v in c.n_list), "n_list entries must be positive integers")
    _require(c.l >= 1, f"l must be a positive integer; got {c.l}")
    _require(c.max_iter >= 1, f"max_iter must be at least 1; got {c.max_iter}")
    _require(c.lam is None or c.lam > 0, f"lambda must be positive; got {c.lam}")
    _require(c.eps is None or c.eps > 0, f"eps must be positive; got {c.eps}")
    _require(c.grid is None or c.grid >= 2, f"grid must be at least 2; got {c.grid}")
    _require(0 <= c.phi_lo <= c.theta_lo < c.theta_hi <= c.phi_hi <= 1,
             "need 0 <= phi_lo <= theta_lo < theta_hi <= phi_hi <= 1")
    _require(c.mode in ("online", "batch"), f"mode must be 'online' or 'batch'; got {c.mode!r}")
    _require(c.stage2 in ("restrict", "project"), f"stage2 must be 'restrict' or 'project'; got {c.stage2!r}")
    _require(0 < c.alpha < 1, f"alpha must lie in (0, 1); got {c.alpha}")
    _require(c.k is None or 0 <= c.k <= c.n, f"k must lie in [0, n]; got {c.k}")
    _require(0 <= c.phi <= 1, f"phi must lie in [0, 1]; got {c.phi}")
    _require(c.trials >= 1, f"trials must be at least 1; got {c.trials}")
    _require(c.predictor in ("ab", "kt", "laplace"), f"predictor must be ab, kt or laplace; got {c.predictor!r}")
    _require(c.seed >= 0, f"seed must be nonnegative; got {c.seed}")


def _convert(key: str, raw: str, where: str):
    try:
        return _KEYS[key][1](raw.strip())
    except (ValueError, TypeError) as e:
        raise ConfigError(f"{where}: bad value for {key!r}: {e}") from None


def parse_assignments(text: str) -> dict[str, Any]:
    """Parse config text into raw typed values without validation."""
    values: dict[str, Any] = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        where = f"line {lineno}"
        if s.startswith("["):
            if not s.endswith("]"):
                raise ConfigError(f"{where}: unterminated section header")
            section = s[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"{where}: unknown section [{section}]")
            continue
        if "=" not in s:
            raise ConfigError(f"{where}: expected 'key = value'")
        key, raw = (p.strip() for p in s.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if section is not None and _KEYS[key][0] != section:
            raise ConfigError(f"{where}: key {key!r} belongs in [{_KEYS[key][0]}], not [{section}]")
        if key in values:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        values[key] = _convert(key, raw, where)
    return values


def build_config(values: dict[str, Any]) -> RunConfig:
    if "command" not in values:
        raise ConfigError("missing required key 'command'")
    kw = {_FIELD.get(k, k): v for k, v in values.items()}
    return RunConfig(**kw)


def parse_config(text: str, overrides: dict[str, str] | None = None) -> RunConfig:
    """Parse and validate; overrides map key -> raw string and win over the file."""
    values = parse_assignments(text)
    for key, raw in (overrides or {}).items():
        if key not in _KEYS:
            raise ConfigError(f"unknown option --{key}")
        values[key] = _convert(key, raw, f"option --{key}")
    return build_config(values)


def format_config(c: RunConfig) -> str:
    """Serialize to config text that parses back to an equal RunConfig."""
    d = c.to_dict()
    lines = []
    for sec in ("run", "model", "solver", "simulate"):
        lines.append(f"[{sec}]")
        for key, (s, _) in _KEYS.items():
            if s != sec:
                continue
            v = d[_FIELD.get(key, key)]
            if v is None:
                if key == "out":
                    continue
                text = "auto"
            elif isinstance(v, list):
                text = ", ".join(str(x) for x in v)
            elif isinstance(v, float):
                text = repr(v)
            else:
                text = str(v)
            lines.append(f"{key} = {text}")
        lines.append("")
    return "\n".join(lines)


@dataclass
class RunManifest:
    config: dict[str, Any]
    version: str
    timestamp: str
    rng: dict[str, Any]
    results: list[dict[str, Any]] = field(default_factory=list)
    diagnostics: dict[str, Any] = field(default_factory=dict)
    artifacts: list[str] = field(default_factory=list)

    def serialize(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def parse(cls, text: str) -> "RunManifest":
        d = json.loads(text)
        names = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - names
        if extra:
            raise ValueError(f"unknown manifest fields: {sorted(extra)}")
        return cls(**d)
