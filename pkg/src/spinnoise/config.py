"""Run configuration: flat ``key = value`` files with units in the key names.

Example::

    power_mw = 3
    detuning_ghz = 1.5
    theta_deg = 0
    sweep_variable = power
    sweep_values = 1, 2, 3, 4, 5

Sweep values are in mW for ``power``, GHz for ``detuning`` and degrees for
``theta``. Lines starting with ``#`` in an output CSV header use the same
syntax, so any output file can be re-read as a config.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .hamiltonian import SimParams

OUTPUT_ENV = "SPINNOISE_OUTPUT_DIR"

# key -> (SimParams field, factor to SI)
PARAM_KEYS = {
    "rabi_mhz": ("rabi_hz", 1e6),
    "detuning_ghz": ("detuning_hz", 1e9),
    "theta_deg": ("theta_deg", 1.0),
    "larmor_mhz": ("larmor_hz", 1e6),
    "gamma_mhz": ("gamma_hz", 1e6),
    "transit_khz": ("transit_hz", 1e3),
    "time_step_ns": ("time_step_s", 1e-9),
    "duration_ms": ("duration_s", 1e-3),
}
INT_KEYS = {"rng_seed", "n_trajectories"}
FLOAT_KEYS = {"n_atoms"}
GRID_KEYS = {"freq_start_mhz", "freq_stop_mhz", "freq_points"}
RUN_KEYS = {"sweep_variable", "sweep_values", "method", "channel", "output_dir", "emit_plots",
            "injection", "fit_model", "power_mw"}
SWEEP_UNITS = {"power": 1.0, "detuning": 1e9, "theta": 1.0}
SWEEP_RANGES = {"power": (0.0, 100.0), "detuning": (-100e9, 100e9), "theta": (-360.0, 360.0)}
METHODS = ("resolvent", "stochastic", "eigen")
CHANNELS = ("rotation", "ellipticity")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (a usage error)."""


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class RunConfig:
    params: SimParams = field(default_factory=SimParams)
    sweep_variable: str | None = None
    sweep_values: tuple[float, ...] = ()
    method: str = "resolvent"
    channel: str = "rotation"
    output_dir: str = "out"
    emit_plots: bool = False
    injection: str = "z"
    fit_model: str = "two_lorentzians"

    def validate(self, need_sweep: bool = False) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.channel not in CHANNELS:
            raise ConfigError(f"channel must be one of {CHANNELS}, got {self.channel!r}")
        if need_sweep or self.sweep_variable is not None:
            if self.sweep_variable not in SWEEP_UNITS:
                raise ConfigError(f"sweep_variable must be one of {sorted(SWEEP_UNITS)}, got {self.sweep_variable!r}")
            if not self.sweep_values:
                raise ConfigError("sweep grid is empty")
            lo, hi = SWEEP_RANGES[self.sweep_variable]
            grid = np.asarray(self.sweep_si())
            if np.any(grid < lo) or np.any(grid > hi) or not np.all(np.isfinite(grid)):
                raise ConfigError(f"sweep values outside the valid {self.sweep_variable} range")

    def sweep_si(self) -> list[float]:
        """Grid in the units used by :func:`spinnoise.lightshift.splitting_vs`."""
        return [v * SWEEP_UNITS[self.sweep_variable] for v in self.sweep_values]

    def to_entries(self) -> dict[str, str]:
        """Fully-resolved configuration as unit-bearing key/value strings."""
        p = self.params
        out = {}
        if p.power_mw is not None:
            out["power_mw"] = _fmt(float(p.power_mw))
        else:
            out["rabi_mhz"] = _fmt(p.rabi_hz / 1e6)
        for key, (name, factor) in PARAM_KEYS.items():
            if key == "rabi_mhz":
                continue
            out[key] = _fmt(getattr(p, name) / factor)
        out["rng_seed"] = str(p.rng_seed)
        out["n_trajectories"] = str(p.n_trajectories)
        out["n_atoms"] = _fmt(float(p.n_atoms))
        if p.freq_grid is not None:
            out["freq_start_mhz"] = _fmt(p.freq_grid[0] / 1e6)
            out["freq_stop_mhz"] = _fmt(p.freq_grid[1] / 1e6)
            out["freq_points"] = str(int(p.freq_grid[2]))
        if self.sweep_variable is not None:
            out["sweep_variable"] = self.sweep_variable
            out["sweep_values"] = ", ".join(_fmt(float(v)) for v in self.sweep_values)
        out["method"] = self.method
        out["channel"] = self.channel
        out["injection"] = self.injection
        out["fit_model"] = self.fit_model
        return out


def _parse_bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def read_entries(path) -> dict[str, str]:
    """Key/value pairs from a config file or from the header of an output CSV."""
    text = Path(path).read_text()
    lines = []
    for line in text.splitlines():
        s = line.strip()
        if s.startswith("#"):
            s = s[1:].strip()
            if "=" not in s:
                continue
        elif "," in s and "=" not in s:
            continue  # CSV body row
        lines.append(s)
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=(";",), inline_comment_prefixes=None)
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + "\n".join(lines))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return dict(parser["run"])


def _parse_values(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    if ":" in text:  # start:stop:n
        a, b, n = text.split(":")
        return tuple(float(v) for v in np.linspace(float(a), float(b), int(n)))
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def build_config(entries: dict[str, str]) -> RunConfig:
    """Turn unit-bearing key/value strings into a validated :class:`RunConfig`."""
    kw: dict = {}
    run: dict = {}
    grid: dict = {}
    for key, raw in entries.items():
        key = key.strip()
        raw = str(raw).strip()
        try:
            if key in PARAM_KEYS:
                name, factor = PARAM_KEYS[key]
                kw[name] = float(raw) * factor
            elif key in INT_KEYS:
                kw[key] = int(raw)
            elif key in FLOAT_KEYS:
                kw[key] = float(raw)
            elif key in GRID_KEYS:
                grid[key] = float(raw)
            elif key == "power_mw":
                kw["power_mw"] = float(raw)
            elif key == "sweep_values":
                run["sweep_values"] = _parse_values(raw)
            elif key == "emit_plots":
                run["emit_plots"] = _parse_bool(raw)
            elif key in RUN_KEYS:
                run[key] = raw
            elif key.startswith(("meta.", "trend_")) or key in ("method_tag", "rbw_hz", "n_averages", "figure"):
                continue
            else:
                raise ConfigError(f"unknown configuration key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    if grid:
        missing = GRID_KEYS - grid.keys()
        if missing:
            raise ConfigError(f"incomplete frequency grid, missing {sorted(missing)}")
        kw["freq_grid"] = (grid["freq_start_mhz"] * 1e6, grid["freq_stop_mhz"] * 1e6, int(grid["freq_points"]))
    if "power_mw" in kw and "rabi_hz" in kw:
        del kw["rabi_hz"]  # power wins
    try:
        params = SimParams(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(params=params, **run)


def load_config(path=None, overrides: dict[str, str] | None = None) -> RunConfig:
    """File values first, then ``overrides`` (CLI flags), then the output-dir env var."""
    entries = read_entries(path) if path else {}
    overrides = overrides or {}
    # a CLI drive-strength flag replaces whichever form the file used
    if "rabi_mhz" in overrides:
        entries.pop("power_mw", None)
    if "power_mw" in overrides:
        entries.pop("rabi_mhz", None)
    entries.update(overrides)
    cfg = build_config(entries)
    env_out = os.environ.get(OUTPUT_ENV)
    if env_out and "output_dir" not in overrides:
        cfg.output_dir = env_out
    return cfg
