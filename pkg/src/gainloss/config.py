"""Run configuration: flat `key = value` files with `#` comments."""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields

from .montecarlo import SimConfig
from .preferences import PreferenceParams
from .processes import LAWS, ProcessParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    prefs: PreferenceParams = field(default_factory=PreferenceParams)
    params: ProcessParams = field(default_factory=ProcessParams)
    model: int = 2
    grid: tuple = (41, 201)
    quad_order: int = 21
    sim: SimConfig = field(default_factory=SimConfig)
    fmt: str = "json"
    seed: int = 20240101
    law: str | None = None
    tol: float = 1e-10
    max_iter: int = 10_000


PREF_KEYS = {"beta": "beta", "theta": "theta", "b": "b", "lambda": "lam", "gamma": "gamma"}
PROC_KEYS = {f.name: f.name for f in fields(ProcessParams)}
SIM_KEYS = ("n_paths", "horizon", "burn_in")
OTHER_KEYS = ("model", "grid", "quad_order", "format", "seed", "law", "tol", "max_iter")


def parse_grid(text: str) -> tuple:
    try:
        ne, ny = (int(t) for t in str(text).lower().split("x"))
    except ValueError:
        raise ConfigError(f"grid: expected '<ne>x<ny>', got {text!r}") from None
    if ne < 2 or ny < 2:
        raise ConfigError("grid: both axes need at least 2 nodes")
    return ne, ny


def read_config_file(path) -> dict:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",),
                                   delimiters=("=",))
    try:
        with open(path) as fh:
            cp.read_string("[run]\n" + fh.read())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except configparser.Error as e:
        raise ConfigError(f"malformed config {path}: {e}") from None
    return dict(cp["run"])


def _num(key, val, typ):
    try:
        return typ(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected {typ.__name__}, got {val!r}") from None


def build_config(values: dict) -> RunConfig:
    """Validate a flat mapping of settings; every failure names its field."""
    known = set(PREF_KEYS) | set(PROC_KEYS) | set(SIM_KEYS) | set(OTHER_KEYS)
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown setting(s): {', '.join(unknown)}")
    base_p = PreferenceParams()
    pk = {PREF_KEYS[k]: _num(k, values[k], float) for k in PREF_KEYS if k in values}
    try:
        prefs = base_p.replace(**pk)
    except ValueError as e:
        raise ConfigError(f"preferences: {e}") from None
    qk = {k: _num(k, values[k], float) for k in PROC_KEYS if k in values}
    try:
        params = ProcessParams().replace(**qk)
    except ValueError as e:
        raise ConfigError(f"process parameters: {e}") from None
    model = _num("model", values.get("model", 2), int)
    if model not in (1, 2):
        raise ConfigError("model: must be 1 or 2")
    grid = parse_grid(values.get("grid", "41x201"))
    qo = _num("quad_order", values.get("quad_order", 21), int)
    if not 1 <= qo <= 200:
        raise ConfigError("quad_order: must lie in [1, 200]")
    fmt = str(values.get("format", "json"))
    if fmt not in ("csv", "json"):
        raise ConfigError("format: must be csv or json")
    seed = _num("seed", values.get("seed", 20240101), int)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed: must be an unsigned 64-bit integer")
    law = values.get("law")
    if law is not None and law not in LAWS:
        raise ConfigError(f"law: must be one of {LAWS}")
    tol = _num("tol", values.get("tol", 1e-10), float)
    if not tol > 0:
        raise ConfigError("tol: must be > 0")
    max_iter = _num("max_iter", values.get("max_iter", 10_000), int)
    if max_iter < 1:
        raise ConfigError("max_iter: must be >= 1")
    sk = {k: _num(k, values[k], int) for k in SIM_KEYS if k in values}
    try:
        sim = SimConfig(seed=seed, **sk)
    except ValueError as e:
        raise ConfigError(f"simulation: {e}") from None
    return RunConfig(prefs, params, model, grid, qo, sim, fmt, seed, law, tol, max_iter)
