"""Experiment configuration: a sectioned TOML document mapped onto typed settings.

Sections are ``topology``, ``rf``, ``fso``, ``sim`` and ``sweep``; every key
is optional and defaults to the reference-scenario value. Unknown sections or keys are
rejected.
"""

from dataclasses import dataclass, field, replace
import math
import sys

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .capacity import AccessMode
from .channels import WEATHER, SystemParams
from .numerics import DomainError
from .simulator import BenchmarkKind

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "load_config", "dump_config",
           "interpolate_cn2"]


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


INT, FLOAT, FLOATS, PAIR, STR, STRS = "int", "float", "floats", "pair", "str", "strs"

# section -> key -> (SystemParams field or None, kind)
SCHEMA = {
    "topology": {
        "users": ("users", INT),
        "relay_antennas": ("relay_antennas", INT),
        "dest_antennas": ("dest_antennas", INT),
    },
    "rf": {
        "user_distance_m": ("user_distance_m", FLOATS),
        "user_power_w": ("user_power_w", FLOATS),
        "user_rate_bits": ("user_rate_bits", FLOATS),
        "access_gains_dbi": ("access_gains_dbi", PAIR),
        "access_rice": ("access_rice", PAIR),
        "relay_power_w": ("relay_rf_power_w", FLOAT),
        "backhaul_gains_dbi": ("backhaul_gains_dbi", PAIR),
        "backhaul_rice": ("backhaul_rice", PAIR),
        "wavelength_m": ("rf_wavelength_m", FLOAT),
        "bandwidth_hz": ("rf_bandwidth_hz", FLOAT),
        "ref_distance_m": ("ref_distance_m", FLOAT),
        "pathloss_exponent": ("pathloss_exponent", FLOAT),
        "noise_density_dbm_per_mhz": ("noise_density_dbm_per_mhz", FLOAT),
        "noise_figure_db": ("noise_figure_db", FLOAT),
        "access_mode": (None, STR),
    },
    "fso": {
        "power_w": ("fso_power_w", FLOAT),
        "wavelength_m": ("fso_wavelength_m", FLOAT),
        "bandwidth_hz": ("fso_bandwidth_hz", FLOAT),
        "responsivity": ("responsivity", FLOAT),
        "noise_var": ("fso_noise_var", FLOAT),
        "divergence_rad": ("divergence_rad", FLOAT),
        "aperture_radius_m": ("aperture_radius_m", FLOAT),
    },
    "sim": {
        "symbols_per_block": ("symbols_per_block", INT),
        "blocks": ("blocks", INT),
        "samples": ("mc_samples", INT),
        "seed": ("seed", INT),
        "quad_order": ("quad_order", INT),
        "tol": (None, FLOAT),
        "max_iters": (None, INT),
    },
    "sweep": {
        "distances_m": (None, FLOATS),
        "weather": (None, STRS),
        "kappa_db_per_m": (None, FLOATS),
        "cn2": (None, FLOATS),
        "protocols": (None, STRS),
        "output": (None, STR),
    },
}

_TABLE_KAPPA = np.log([k for k, _ in WEATHER.values()])
_TABLE_CN2 = np.log([c for _, c in WEATHER.values()])


def interpolate_cn2(kappa_db_per_m):
    """Turbulence strength matched to an attenuation by log-log interpolation of the named conditions.

    Values outside the named range take the nearest endpoint.
    """
    return float(np.exp(np.interp(math.log(kappa_db_per_m), _TABLE_KAPPA, _TABLE_CN2)))


@dataclass(frozen=True)
class ExperimentConfig:
    base: SystemParams = field(default_factory=SystemParams)
    weather: tuple = tuple(WEATHER.values())
    distances: tuple = (1000.0, 2000.0)
    protocols: tuple = tuple(BenchmarkKind)
    access_mode: AccessMode = AccessMode.FIXED_RATE_ZF
    output: str = "sweep.csv"
    tol: float = 1e-3
    max_iters: int = 10_000

    @property
    def seed(self):
        return self.base.seed

    def with_overrides(self, seed=None, blocks=None, samples=None, output=None):
        base_changes = {}
        if seed is not None:
            base_changes["seed"] = seed
        if blocks is not None:
            base_changes["blocks"] = blocks
        if samples is not None:
            base_changes["mc_samples"] = samples
        try:
            base = replace(self.base, **base_changes)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        return replace(self, base=base, output=self.output if output is None else output)


def _where(section, key):
    return f"[{section}] {key}"


def _coerce(value, kind, section, key):
    where = _where(section, key)
    is_num = lambda v: isinstance(v, (int, float)) and not isinstance(v, bool)  # noqa: E731
    if kind == INT:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if kind == FLOAT:
        if not is_num(value):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if kind == STR:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if kind == STRS:
        if not (isinstance(value, list) and value and all(isinstance(v, str) for v in value)):
            raise ConfigError(f"{where}: expected a non-empty list of strings, got {value!r}")
        return tuple(value)
    if kind == FLOATS:
        if is_num(value):
            return float(value)
        if not (isinstance(value, list) and value and all(is_num(v) for v in value)):
            raise ConfigError(f"{where}: expected a number or non-empty list of numbers, got {value!r}")
        return tuple(float(v) for v in value)
    if kind == PAIR:
        if not (isinstance(value, list) and len(value) == 2 and all(is_num(v) for v in value)):
            raise ConfigError(f"{where}: expected a list of two numbers, got {value!r}")
        return tuple(float(v) for v in value)
    raise AssertionError(kind)


def _enum(cls, value, where):
    for member in cls:
        if member.value == value:
            return member
    choices = ", ".join(m.value for m in cls)
    raise ConfigError(f"{where}: unknown value {value!r} (choose from {choices})")


def parse_config(text):
    """Parse and validate a TOML experiment document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    param_kwargs, extra = {}, {}
    for section, body in doc.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key, value in body.items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"{_where(section, key)}: unknown key")
            target, kind = SCHEMA[section][key]
            value = _coerce(value, kind, section, key)
            if target is None:
                extra[(section, key)] = value
            else:
                param_kwargs[target] = value

    try:
        base = SystemParams(**param_kwargs)
    except DomainError as exc:
        raise ConfigError(f"invalid parameters: {exc}") from None

    cfg = {}
    mode = extra.get(("rf", "access_mode"))
    if mode is not None:
        cfg["access_mode"] = _enum(AccessMode, mode, _where("rf", "access_mode"))
    if ("sim", "tol") in extra:
        tol = extra[("sim", "tol")]
        if not 0 < tol < 1:
            raise ConfigError(f"{_where('sim', 'tol')}: must lie in (0, 1), got {tol}")
        cfg["tol"] = tol
    if ("sim", "max_iters") in extra:
        if extra[("sim", "max_iters")] < 1:
            raise ConfigError(f"{_where('sim', 'max_iters')}: must be positive")
        cfg["max_iters"] = extra[("sim", "max_iters")]
    if ("sweep", "distances_m") in extra:
        d = extra[("sweep", "distances_m")]
        d = (d,) if isinstance(d, float) else d
        if any(not (math.isfinite(x) and x > 0) for x in d):
            raise ConfigError(f"{_where('sweep', 'distances_m')}: distances must be positive")
        cfg["distances"] = d
    cfg["weather"] = _weather_points(extra)
    if ("sweep", "protocols") in extra:
        where = _where("sweep", "protocols")
        kinds = tuple(_enum(BenchmarkKind, v, where) for v in extra[("sweep", "protocols")])
        if len(set(kinds)) != len(kinds):
            raise ConfigError(f"{where}: duplicate protocol")
        cfg["protocols"] = kinds
    if ("sweep", "output") in extra:
        cfg["output"] = extra[("sweep", "output")]
    return ExperimentConfig(base=base, **cfg)


def _weather_points(extra):
    names = extra.get(("sweep", "weather"))
    kappas = extra.get(("sweep", "kappa_db_per_m"))
    cn2s = extra.get(("sweep", "cn2"))
    if names is not None and (kappas is not None or cn2s is not None):
        raise ConfigError("[sweep] give either weather names or kappa_db_per_m/cn2 lists, not both")
    if names is not None:
        where = _where("sweep", "weather")
        unknown = [n for n in names if n not in WEATHER]
        if unknown:
            raise ConfigError(f"{where}: unknown condition {unknown[0]!r} "
                              f"(choose from {', '.join(WEATHER)})")
        return tuple(WEATHER[n] for n in names)
    if kappas is None:
        if cn2s is not None:
            raise ConfigError("[sweep] cn2: needs a matching kappa_db_per_m list")
        return tuple(WEATHER.values())
    kappas = (kappas,) if isinstance(kappas, float) else kappas
    if any(not (math.isfinite(k) and k > 0) for k in kappas):
        raise ConfigError(f"{_where('sweep', 'kappa_db_per_m')}: attenuations must be positive")
    if cn2s is None:
        cn2s = tuple(interpolate_cn2(k) for k in kappas)
    cn2s = (cn2s,) if isinstance(cn2s, float) else cn2s
    if len(cn2s) != len(kappas):
        raise ConfigError(f"{_where('sweep', 'cn2')}: needs {len(kappas)} entries to match "
                          f"kappa_db_per_m, got {len(cn2s)}")
    if any(not (math.isfinite(c) and c > 0) for c in cn2s):
        raise ConfigError(f"{_where('sweep', 'cn2')}: values must be positive")
    return tuple(zip(kappas, cn2s))


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def _toml_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialise {value!r}")


def dump_config(cfg):
    """Canonical TOML text for ``cfg``; ``parse_config(dump_config(cfg)) == cfg``."""
    extras = {
        ("rf", "access_mode"): cfg.access_mode.value,
        ("sim", "tol"): cfg.tol,
        ("sim", "max_iters"): cfg.max_iters,
        ("sweep", "distances_m"): list(cfg.distances),
        ("sweep", "kappa_db_per_m"): [k for k, _ in cfg.weather],
        ("sweep", "cn2"): [c for _, c in cfg.weather],
        ("sweep", "protocols"): [p.value for p in cfg.protocols],
        ("sweep", "output"): cfg.output,
    }
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (target, _) in keys.items():
            if target is not None:
                value = getattr(cfg.base, target)
            elif (section, key) in extras:
                value = extras[(section, key)]
            else:
                continue
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)
