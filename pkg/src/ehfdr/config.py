"""Scenario configuration: flat dotted ``key = value`` text or JSON.

Keys carry their unit as a suffix (``_db``, ``_dbm``, ``_dbi``, ``_m``,
``_khz``, ``_s``).  A value may repeat the unit (``-95 dBm``) but a
mismatching unit is an error, as is any unknown key.  Grids use
``start..stop:step`` (stop included) or comma lists.  Defaults reproduce
the standard simulation setup exactly.
"""

import json
import math
import re
from dataclasses import dataclass

import numpy as np

from .channel import SystemParams, db_to_linear, dbm_to_watts
from .errors import ConfigError
from .relay import Scheme

_UNITS = {"db": "dB", "dbm": "dBm", "dbi": "dBi", "m": "m", "khz": "kHz", "s": "s"}


@dataclass(frozen=True)
class _Key:
    kind: str
    default: object
    choices: tuple = ()


SCHEMA = {
    "system.eta": _Key("float", 0.8),
    "system.pathloss_db": _Key("float", -30.0),
    "system.ant_gain_src_dbi": _Key("float", 18.0),
    "system.ant_gain_relay_dbi": _Key("float", 8.0),
    "system.pathloss_exponent": _Key("float", 3.0),
    "system.d1_m": _Key("float", 10.0),
    "system.d2_m": _Key("float", 10.0),
    "system.d3_m": _Key("float", 20.0),
    "system.lambda1": _Key("float", 1.0),
    "system.lambda2": _Key("float", 1.0),
    "system.lambda3": _Key("float", 1.0),
    "system.noise_relay_dbm": _Key("float", -95.0),
    "system.noise_dest_dbm": _Key("float", -95.0),
    "system.rsi_sigma02": _Key("float", 0.1),
    "system.rician_k_db": _Key("float", 6.0),
    "system.bandwidth_khz": _Key("float", 200.0),
    "system.rate_bps_hz": _Key("float", 2.0),
    "system.gamma_th_db": _Key("optional_float", None),
    "system.block_time_s": _Key("float", 1.0),
    "run.scheme": _Key("schemes", ("maximum", "sinr", "target")),
    "run.mode": _Key("choice", "delay_limited", ("delay_limited", "delay_tolerant", "instantaneous")),
    "run.ps_dbm": _Key("grid", (10.0, 20.0, 30.0, 40.0, 50.0)),
    "run.n_blocks": _Key("int", 100000),
    "run.seed": _Key("int", 20240601),
    "run.alpha": _Key("optional_float", None),
    "run.gamma_hat_db": _Key("optional_float", None),
    "run.gamma_hat_slope": _Key("float", 0.3),
    "run.kappa": _Key("float", 0.0),
    "run.ps_fixed_dbm": _Key("float", 30.0),
    "sweep.axis": _Key("choice", "ps", ("ps", "gamma_hat", "sigma02")),
    "sweep.channel": _Key("choice", "fading", ("fading", "fixed")),
    "sweep.gamma_hat_db": _Key("grid", (10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 16.0, 17.0, 18.0, 19.0, 20.0)),
    "sweep.sigma02": _Key("grid", (0.01, 0.05, 0.1, 0.2, 0.4)),
    "sweep.placement": _Key("grid", tuple(round(0.1 * i, 10) for i in range(1, 10))),
    "sweep.kappa": _Key("grid", (0.0, 0.05, 0.1, 0.15, 0.2)),
    "channel.g0": _Key("float", 0.342),
    "channel.g1": _Key("float", 1.898),
    "channel.g2": _Key("float", 0.986),
    "channel.g3": _Key("float", 1.0),
    "csi.experiment": _Key("choice", "fixed", ("fixed", "fading")),
    "csi.n_draws": _Key("int", 20000),
    "output.path": _Key("optional_str", None),
    "output.format": _Key("choice", "csv", ("csv", "json")),
}


def _where(key, line):
    return f"line {line}, key {key!r}" if line else f"key {key!r}"


def _unit_of(key):
    suffix = key.rsplit("_", 1)[-1]
    return _UNITS.get(suffix) if "_" in key.rsplit(".", 1)[-1] else None


def _strip_unit(key, text, line):
    """Remove a trailing unit token, checking that it matches the key's unit."""
    parts = text.rsplit(None, 1)
    if len(parts) == 2 and re.fullmatch(r"[A-Za-z]+", parts[1]) and parts[1].lower() in {
        u.lower() for u in _UNITS.values()
    }:
        expected = _unit_of(key)
        if expected is None or parts[1].lower() != expected.lower():
            raise ConfigError(f"{_where(key, line)}: unit {parts[1]!r} does not match the key "
                              f"(expected {expected or 'no unit'})")
        return parts[0]
    return text


def _number(key, text, line):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{_where(key, line)}: {text!r} is not a number") from None
    if not math.isfinite(value):
        raise ConfigError(f"{_where(key, line)}: value must be finite")
    return value


def parse_grid(text, key="grid", line=None):
    """``start..stop:step`` (inclusive) or a comma list; returns a tuple of floats.

    >>> parse_grid("10..50:10")
    (10.0, 20.0, 30.0, 40.0, 50.0)
    """
    text = str(text).strip()
    if ".." in text:
        head, _, step_text = text.rpartition(":")
        start_text, _, stop_text = head.partition("..")
        start = _number(key, start_text.strip(), line)
        stop = _number(key, stop_text.strip(), line)
        step = _number(key, step_text.strip(), line)
        if step <= 0 or stop < start:
            raise ConfigError(f"{_where(key, line)}: range needs start <= stop and a positive step")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 12) for i in range(count))
    values = tuple(_number(key, part.strip(), line) for part in text.split(",") if part.strip())
    if not values:
        raise ConfigError(f"{_where(key, line)}: empty grid")
    return values


def _convert(key, raw, line=None):
    spec = SCHEMA[key]
    if isinstance(raw, (list, tuple)) and spec.kind in ("grid", "schemes"):
        raw = ",".join(str(v) for v in raw)
    if raw is None:
        if spec.kind.startswith("optional"):
            return None
        raise ConfigError(f"{_where(key, line)}: value required")
    text = _strip_unit(key, str(raw).strip(), line)
    kind = spec.kind
    if kind in ("optional_float", "optional_str") and text.lower() in ("", "none", "null"):
        return None
    if kind in ("float", "optional_float"):
        return _number(key, text, line)
    if kind == "int":
        value = _number(key, text, line)
        if value != int(value) or value < 0:
            raise ConfigError(f"{_where(key, line)}: expected a non-negative integer")
        return int(value)
    if kind == "grid":
        return parse_grid(text, key, line)
    if kind == "schemes":
        names = [t.strip().lower() for t in text.split(",") if t.strip()]
        if names == ["all"]:
            names = [s.value for s in Scheme]
        for name in names:
            if name not in {s.value for s in Scheme}:
                raise ConfigError(f"{_where(key, line)}: unknown scheme {name!r}")
        if not names:
            raise ConfigError(f"{_where(key, line)}: no scheme given")
        return tuple(names)
    if kind == "choice":
        value = text.lower()
        if value not in spec.choices:
            raise ConfigError(f"{_where(key, line)}: {text!r} is not one of {', '.join(spec.choices)}")
        return value
    return text


def parse_text(text):
    """Parse flat config text into ``{key: (raw_value, line_number)}``."""
    entries = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = body.partition("=")
        key = key.strip()
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in entries:
            raise ConfigError(f"line {lineno}: key {key!r} given twice")
        entries[key] = (value.strip(), lineno)
    return entries


def _flatten(obj, prefix=""):
    flat = {}
    for k, v in obj.items():
        name = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten(v, name + "."))
        else:
            flat[name] = v
    return flat


def parse_json(text):
    """Parse JSON config (flat dotted keys or nested sections, or a run manifest)."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise ConfigError("JSON config must be an object")
    if "config" in obj and isinstance(obj["config"], dict):
        obj = obj["config"]
    entries = {}
    for key, value in _flatten(obj).items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        entries[key] = (value, None)
    return entries


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved configuration: every schema key with a validated value."""

    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def to_dict(self):
        """JSON-ready flat mapping; feeding it back reproduces this config."""
        out = {}
        for key, value in self.values.items():
            out[key] = list(value) if isinstance(value, tuple) else value
        return out

    def system_params(self):
        v = self.values
        gamma_th = v["system.gamma_th_db"]
        return SystemParams(
            eta=v["system.eta"],
            pathloss_ref=db_to_linear(v["system.pathloss_db"]),
            ant_gain_src=db_to_linear(v["system.ant_gain_src_dbi"]),
            ant_gain_relay=db_to_linear(v["system.ant_gain_relay_dbi"]),
            m=v["system.pathloss_exponent"],
            d1=v["system.d1_m"],
            d2=v["system.d2_m"],
            d3=v["system.d3_m"],
            lambda1=v["system.lambda1"],
            lambda2=v["system.lambda2"],
            lambda3=v["system.lambda3"],
            sigma_r2=dbm_to_watts(v["system.noise_relay_dbm"]),
            sigma_d2=dbm_to_watts(v["system.noise_dest_dbm"]),
            sigma_02=v["system.rsi_sigma02"],
            rician_k=db_to_linear(v["system.rician_k_db"]),
            bandwidth_hz=v["system.bandwidth_khz"] * 1e3,
            rate_bps_hz=v["system.rate_bps_hz"],
            gamma_th=None if gamma_th is None else db_to_linear(gamma_th),
            block_time=v["system.block_time_s"],
        )

    def gamma_hat(self, ps_dbm):
        """Target-relay SINR target (linear) at source power ``ps_dbm``.

        A fixed ``run.gamma_hat_db`` wins; otherwise the target follows the
        power as ``gamma_hat_db = run.gamma_hat_slope * ps_dbm``.
        """
        fixed = self.values["run.gamma_hat_db"]
        if fixed is not None:
            return db_to_linear(fixed)
        return db_to_linear(self.values["run.gamma_hat_slope"] * ps_dbm)


def resolve(entries=None, overrides=None):
    """Validate raw entries (file first, then overrides) into a ScenarioConfig."""
    merged = dict(entries or {})
    for key, value in (overrides or {}).items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        merged[key] = (value, None)
    values = {}
    for key, spec in SCHEMA.items():
        if key in merged:
            raw, line = merged[key]
            values[key] = _convert(key, raw, line)
        else:
            values[key] = spec.default
    cfg = ScenarioConfig(values)
    try:
        cfg.system_params()
    except ValueError as exc:
        raise ConfigError(f"invalid system parameters: {exc}") from None
    if values["run.n_blocks"] < 1 or values["csi.n_draws"] < 1:
        raise ConfigError("run.n_blocks and csi.n_draws must be at least 1")
    alpha = values["run.alpha"]
    if alpha is not None and not 0.0 < alpha < 1.0:
        raise ConfigError("key 'run.alpha': TS factor must lie in (0, 1)")
    if values["run.kappa"] < 0 or any(k < 0 for k in values["sweep.kappa"]):
        raise ConfigError("kappa must be non-negative")
    if any(not 0.0 < r < 1.0 for r in values["sweep.placement"]):
        raise ConfigError("key 'sweep.placement': ratios must lie in (0, 1)")
    return cfg


def load(path=None, overrides=None):
    """Read a config file (``.json`` or flat text) and apply overrides."""
    entries = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
        stripped = text.lstrip()
        entries = parse_json(text) if str(path).endswith(".json") or stripped.startswith("{") else parse_text(text)
    return resolve(entries, overrides)


def format_grid(values):
    return ",".join(f"{v:.12g}" for v in np.atleast_1d(values))
