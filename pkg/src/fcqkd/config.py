"""Session configuration: YAML document <-> SI dataclasses.

Document layout (every key optional; see README for the full table)::

    system:
      delta_omega: 1 GHz        # or omega1/omega2 explicitly
      omega0: 1e15 rad/s
      sigma1: 0.1 GHz
      sigma2: 0.1 GHz
      sigma_inf: 1 THz
      gamma1: ...               # default: matching sigma
      frequency_convention: angular   # or "cycles": multiply Hz-type units by 2*pi
    channel:
      length: 100 km
      beta: 1 ps^2/km
      beta_im: 0 ps^2/km
      loss: 0.35 dB/km
      group_delay: 5000 ns/km
    eve:
      enabled: false
      x_e: 0 km
      intercept_probability: 1.0
      which: min                # 1, 2 or min
    run:
      n_rounds: 10000
      master_seed: 0
      min_check_rounds: 30
      threshold_k: 5
      threshold_f: 0.25
      margin_kappa: 1
      priors: [0.333.., 0.333.., 0.333..]
      efficiency: 1.0
      emission_period: null     # default 100x the widest arrival spread

Quantities are ``"<number> <unit>"`` strings or bare numbers in the key's
default unit (rad/s for frequencies, km, ps^2/km, dB/km, ns/km). By default
"GHz" means 1e9 rad/s, matching how the protocol quotes its widths.
"""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Optional

import yaml

from .channel import DB_PER_KM_DEFAULT, GROUP_SLOWNESS_DEFAULT, FiberChannel
from .security import SystemParams, paper_system


class ConfigError(ValueError):
    """Parse or validation failure; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class EveConfig:
    enabled: bool = False
    x_e: float = 0.0
    intercept_probability: float = 1.0
    which: Optional[int] = None


@dataclass(frozen=True)
class RunConfig:
    n_rounds: int = 10_000
    master_seed: int = 0
    min_check_rounds: int = 30
    threshold_k: float = 5.0
    threshold_f: float = 0.25
    priors: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    efficiency: float = 1.0
    emission_period: Optional[float] = None


@dataclass(frozen=True)
class SessionConfig:
    system: SystemParams
    channel: FiberChannel
    eve: EveConfig = field(default_factory=EveConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def with_eve(self, enabled: bool = True, **kw) -> "SessionConfig":
        return replace(self, eve=replace(self.eve, enabled=enabled, **kw))

    def with_run(self, **kw) -> "SessionConfig":
        return replace(self, run=replace(self.run, **kw))

    def with_channel(self, **kw) -> "SessionConfig":
        return replace(self, channel=replace(self.channel, **kw))

    def with_system(self, **kw) -> "SessionConfig":
        return replace(self, system=replace(self.system, **kw))


def paper_config(length: float = 100e3, loss_db_per_km: float = 0.0, **run) -> SessionConfig:
    """Published parameter set over a lossless (by default) 1 ps**2/km fiber."""
    return SessionConfig(
        system=paper_system(),
        channel=FiberChannel(length=length, beta_re=1e-27, loss_db_per_km=loss_db_per_km),
        run=RunConfig(**run),
    )


# -------------------------------------------------------------------- units

# Factors to SI. Frequency units are per-second magnitudes; the cycles
# convention multiplies Hz-type units by 2*pi afterwards.
UNITS = {
    "frequency": {
        "rad/s": 1.0, "1/s": 1.0, "s^-1": 1.0, "/s": 1.0,
        "hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9, "thz": 1e12,
    },
    "length": {"m": 1.0, "km": 1e3, "mm": 1e-3},
    "gvd": {"s^2/m": 1.0, "ps^2/km": 1e-27, "fs^2/mm": 1e-27, "ps^2/m": 1e-24, "fs^2/m": 1e-30},
    "attenuation": {"db/km": 1.0, "db/m": 1e3},
    "slowness": {"s/m": 1.0, "ns/km": 1e-12, "ns/m": 1e-9, "us/km": 1e-9, "ps/m": 1e-12},
}
HZ_UNITS = {"hz", "khz", "mhz", "ghz", "thz"}
DEFAULT_UNIT = {
    "frequency": "rad/s", "length": "km", "gvd": "ps^2/km",
    "attenuation": "db/km", "slowness": "ns/km",
}
SI_UNIT = {"frequency": "rad/s", "length": "m", "gvd": "s^2/m",
           "attenuation": "dB/km", "slowness": "s/m"}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\s].*)?$")


def parse_quantity(value: Any, kind: str, *, cycles: bool = False, key: str = "?") -> float:
    """Convert ``"1 ps^2/km"``-style strings or bare numbers to SI."""
    if isinstance(value, bool):
        raise ConfigError([f"{key}: expected a quantity, got {value!r}"])
    if isinstance(value, (int, float)):
        number, unit = float(value), DEFAULT_UNIT[kind]
    elif isinstance(value, str):
        m = _QUANTITY.match(value)
        if not m:
            raise ConfigError([f"{key}: cannot parse quantity {value!r}"])
        number = float(m.group(1))
        unit = (m.group(2) or DEFAULT_UNIT[kind]).strip().lower().replace(" ", "").replace("**", "^")
    else:
        raise ConfigError([f"{key}: expected a quantity, got {value!r}"])
    table = UNITS[kind]
    if unit not in table:
        raise ConfigError([f"{key}: unknown {kind} unit {unit!r} (known: {', '.join(table)})"])
    si = number * table[unit]
    if kind == "frequency" and cycles and unit in HZ_UNITS:
        si *= 2.0 * math.pi
    return si


def _fmt_si(value: float, kind: str) -> str:
    return f"{value!r} {SI_UNIT[kind]}"


# --------------------------------------------------------------------- parse

_SYSTEM_FREQ = ("omega0", "omega1", "omega2", "delta_omega", "sigma1", "sigma2", "sigma_inf",
                "gamma1", "gamma2", "gamma_inf")
_SCHEMA = {
    "system": set(_SYSTEM_FREQ) | {"frequency_convention"},
    "channel": {"length", "beta", "beta_im", "loss", "group_delay"},
    "eve": {"enabled", "x_e", "intercept_probability", "which"},
    "run": {"n_rounds", "master_seed", "min_check_rounds", "threshold_k", "threshold_f",
            "margin_kappa", "priors", "efficiency", "emission_period"},
}


def load_document(text: str) -> dict:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError([f"parse error{where}: {getattr(exc, 'problem', exc)}"]) from exc
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(["top level must be a mapping"])
    return doc


def parse_config(text: str) -> SessionConfig:
    """Parse a YAML document into a validated :class:`SessionConfig`.

    Raises
    ------
    ConfigError
        With every violated constraint, each naming its key.
    """
    return config_from_dict(load_document(text))


def config_from_dict(doc: dict) -> SessionConfig:
    errors: list[str] = []
    sections = {}
    for name in doc:
        if name not in _SCHEMA:
            errors.append(f"{name}: unknown section")
    for name, allowed in _SCHEMA.items():
        sec = doc.get(name) or {}
        if not isinstance(sec, dict):
            errors.append(f"{name}: must be a mapping")
            sec = {}
        for k in sec:
            if k not in allowed:
                errors.append(f"{name}.{k}: unknown key")
        sections[name] = sec

    def q(section, key, kind, default, cycles=False):
        raw = sections[section].get(key)
        if raw is None:
            return default
        try:
            return parse_quantity(raw, kind, cycles=cycles, key=f"{section}.{key}")
        except ConfigError as exc:
            errors.extend(exc.errors)
            return default

    def num(section, key, default, cast=float):
        raw = sections[section].get(key)
        if raw is None:
            return default
        try:
            if isinstance(raw, bool) and cast is not bool:
                raise TypeError
            if cast is int and isinstance(raw, float) and not raw.is_integer():
                raise TypeError
            return cast(raw)
        except (TypeError, ValueError):
            errors.append(f"{section}.{key}: expected {cast.__name__}, got {raw!r}")
            return default

    # system
    s = sections["system"]
    conv = s.get("frequency_convention", "angular")
    if conv not in ("angular", "cycles"):
        errors.append(f"system.frequency_convention: must be 'angular' or 'cycles', got {conv!r}")
    cycles = conv == "cycles"
    base = paper_system()
    f = {k: q("system", k, "frequency", None, cycles) for k in _SYSTEM_FREQ}
    omega0 = f["omega0"] if f["omega0"] is not None else base.omega0
    if f["omega1"] is not None and f["omega2"] is not None:
        omega1, omega2 = f["omega1"], f["omega2"]
        if f["delta_omega"] is not None and not math.isclose(abs(omega1 - omega2), f["delta_omega"],
                                                             rel_tol=1e-9):
            errors.append("system.delta_omega: inconsistent with |omega1 - omega2|")
    elif f["omega1"] is not None or f["omega2"] is not None:
        dw = f["delta_omega"] if f["delta_omega"] is not None else base.delta_omega
        if f["omega1"] is not None:
            omega1, omega2 = f["omega1"], f["omega1"] + dw
        else:
            omega1, omega2 = f["omega2"] - dw, f["omega2"]
    else:
        dw = f["delta_omega"] if f["delta_omega"] is not None else base.delta_omega
        omega1, omega2 = omega0 - dw / 2, omega0 + dw / 2
    sigma1 = f["sigma1"] if f["sigma1"] is not None else base.sigma1
    sigma2 = f["sigma2"] if f["sigma2"] is not None else base.sigma2
    sigma_inf = f["sigma_inf"] if f["sigma_inf"] is not None else base.sigma_inf
    kappa = num("run", "margin_kappa", 1.0)
    system = dict(
        omega1=omega1, omega2=omega2, omega0=omega0,
        sigma1=sigma1, sigma2=sigma2, sigma_inf=sigma_inf,
        gamma1=f["gamma1"] if f["gamma1"] is not None else sigma1,
        gamma2=f["gamma2"] if f["gamma2"] is not None else sigma2,
        gamma_inf=f["gamma_inf"] if f["gamma_inf"] is not None else sigma_inf,
        margin_kappa=kappa,
    )
    for k, v in system.items():
        if k != "margin_kappa" and not v > 0:
            errors.append(f"system.{k}: must be positive, got {v!r}")
    for k in ("sigma1", "sigma2", "sigma_inf"):
        if system[k] >= system["omega0"]:
            errors.append(f"system.{k}: must be smaller than the carrier omega0")
    if not kappa >= 1:
        errors.append(f"run.margin_kappa: must be >= 1, got {kappa!r}")

    # channel
    length = q("channel", "length", "length", 100e3)
    beta_re = q("channel", "beta", "gvd", 1e-27)
    beta_im = q("channel", "beta_im", "gvd", 0.0)
    loss = q("channel", "loss", "attenuation", DB_PER_KM_DEFAULT)
    alpha = q("channel", "group_delay", "slowness", GROUP_SLOWNESS_DEFAULT)
    if not length >= 0:
        errors.append(f"channel.length: must be >= 0, got {length!r}")
    if not beta_im >= 0:
        errors.append(f"channel.beta_im: must be >= 0, got {beta_im!r}")
    if not loss >= 0:
        errors.append(f"channel.loss: must be >= 0, got {loss!r}")
    if not alpha > 0:
        errors.append(f"channel.group_delay: must be > 0, got {alpha!r}")

    # eve
    e = sections["eve"]
    enabled = e.get("enabled", False)
    if not isinstance(enabled, bool):
        errors.append(f"eve.enabled: expected true/false, got {enabled!r}")
        enabled = False
    x_e = q("eve", "x_e", "length", 0.0)
    p_int = num("eve", "intercept_probability", 1.0)
    which_raw = e.get("which", "min")
    which = None
    if which_raw in (1, 2):
        which = int(which_raw)
    elif which_raw not in ("min", None):
        errors.append(f"eve.which: must be 1, 2 or 'min', got {which_raw!r}")
    if not 0 <= x_e <= max(length, 0.0):
        errors.append(f"eve.x_e: must lie in [0, channel.length], got {x_e!r}")
    if not 0 <= p_int <= 1:
        errors.append(f"eve.intercept_probability: must be in [0, 1], got {p_int!r}")

    # run
    n_rounds = num("run", "n_rounds", 10_000, int)
    seed = num("run", "master_seed", 0, int)
    min_check = num("run", "min_check_rounds", 30, int)
    k = num("run", "threshold_k", 5.0)
    fth = num("run", "threshold_f", 0.25)
    eff = num("run", "efficiency", 1.0)
    period = sections["run"].get("emission_period")
    if period is not None:
        try:
            period = _parse_time(period)
        except ConfigError as exc:
            errors.extend(exc.errors)
            period = None
    priors_raw = sections["run"].get("priors", (1 / 3, 1 / 3, 1 / 3))
    priors = (1 / 3, 1 / 3, 1 / 3)
    try:
        priors = tuple(float(p) for p in priors_raw)
        if len(priors) != 3:
            raise ValueError
        if any(p < 0 for p in priors) or not math.isclose(sum(priors), 1.0, abs_tol=1e-9):
            errors.append(f"run.priors: must be three non-negative numbers summing to 1, got {priors_raw!r}")
    except (TypeError, ValueError):
        errors.append(f"run.priors: must be a list of three numbers, got {priors_raw!r}")
    if not n_rounds >= 0:
        errors.append(f"run.n_rounds: must be >= 0, got {n_rounds!r}")
    if not seed >= 0:
        errors.append(f"run.master_seed: must be >= 0, got {seed!r}")
    if not min_check >= 1:
        errors.append(f"run.min_check_rounds: must be >= 1, got {min_check!r}")
    if not k > 0:
        errors.append(f"run.threshold_k: must be > 0, got {k!r}")
    if not fth >= 0:
        errors.append(f"run.threshold_f: must be >= 0, got {fth!r}")
    if not 0 <= eff <= 1:
        errors.append(f"run.efficiency: must be in [0, 1], got {eff!r}")
    if period is not None and not period > 0:
        errors.append(f"run.emission_period: must be > 0, got {period!r}")

    if errors:
        raise ConfigError(errors)
    return SessionConfig(
        system=SystemParams(**system),
        channel=FiberChannel(length=length, alpha=alpha, beta_re=beta_re, beta_im=beta_im,
                             loss_db_per_km=loss),
        eve=EveConfig(enabled=enabled, x_e=x_e, intercept_probability=p_int, which=which),
        run=RunConfig(n_rounds=n_rounds, master_seed=seed, min_check_rounds=min_check,
                      threshold_k=k, threshold_f=fth, priors=priors, efficiency=eff,
                      emission_period=period),
    )


_TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12}


def _parse_time(value) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    m = _QUANTITY.match(str(value))
    unit = (m.group(2) or "s").strip().lower() if m else None
    if not m or unit not in _TIME_UNITS:
        raise ConfigError([f"run.emission_period: cannot parse time {value!r}"])
    return float(m.group(1)) * _TIME_UNITS[unit]


# ---------------------------------------------------------------------- emit


def config_to_dict(cfg: SessionConfig) -> dict:
    """SI echo of a configuration; :func:`config_from_dict` inverts it exactly."""
    s = cfg.system
    ch = cfg.channel
    return {
        "system": {
            "frequency_convention": "angular",
            **{k: _fmt_si(getattr(s, k), "frequency")
               for k in ("omega0", "omega1", "omega2", "sigma1", "sigma2", "sigma_inf",
                         "gamma1", "gamma2", "gamma_inf")},
        },
        "channel": {
            "length": _fmt_si(ch.length, "length"),
            "beta": _fmt_si(ch.beta_re, "gvd"),
            "beta_im": _fmt_si(ch.beta_im, "gvd"),
            "loss": _fmt_si(ch.loss_db_per_km, "attenuation"),
            "group_delay": _fmt_si(ch.alpha, "slowness"),
        },
        "eve": {
            "enabled": cfg.eve.enabled,
            "x_e": _fmt_si(cfg.eve.x_e, "length"),
            "intercept_probability": cfg.eve.intercept_probability,
            "which": cfg.eve.which if cfg.eve.which is not None else "min",
        },
        "run": {
            **{k: v for k, v in asdict(cfg.run).items() if k not in ("priors", "emission_period")},
            "priors": list(cfg.run.priors),
            "emission_period": None if cfg.run.emission_period is None
            else f"{cfg.run.emission_period!r} s",
            "margin_kappa": s.margin_kappa,
        },
    }


def emit_config(cfg: SessionConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=True)
