"""Run configuration: a strict flat key=value file format.

Frequencies and couplings are entered as cycles per second (the value
usually quoted, omega/2pi), loss channels as lifetimes in seconds with
`inf` meaning the channel is off. Conversion to angular units happens
only when a DeviceParams is built, never inside RunConfig.

Unknown keys, duplicate keys, and out-of-range values are all hard
errors; parse errors carry the line number.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from importlib import resources

from .errors import ConfigError
from .model import DeviceParams

TWO_PI = 2.0 * math.pi

FREQUENCY_KEYS = (
    "omega_a", "omega_b", "omega_f",
    "omega1_ge", "omega1_es", "omega2_ge", "omega2_es",
)
COUPLING_KEYS = ("g1_ge", "g2_ge", "gf_a", "gf_b")
LIFETIME_KEYS = (
    "kappa_inv_a", "kappa_inv_b", "kappa_inv_f",
    "gamma_inv_1", "gamma_inv_2",
)
REQUIRED_KEYS = FREQUENCY_KEYS + COUPLING_KEYS + LIFETIME_KEYS

PANELS = ("b", "c", "d", "e", "f")

OPTIONAL_KEYS = (
    "n_max", "dt", "n_samples", "grid_n", "workers",
    "tomography_propagator", "cphase_window",
    "fig3_deltas", "fig3_gt_max", "fig3_points",
) + tuple(f"fig7_axis_{p}" for p in PANELS)

PROPAGATORS = ("h2q", "heff_prime")


@dataclass
class RunConfig:
    """Validated configuration; device values stay in entered units."""

    device: dict
    n_max: int = 2
    dt: float | None = None
    n_samples: int = 200
    grid_n: int = 8
    workers: int = 1
    tomography_propagator: str = "h2q"
    cphase_window: float | None = None
    fig3_deltas: tuple = (5.0, 10.0, 25.0)
    fig3_gt_max: float = 0.8
    fig3_points: int = 161
    fig7_axes: dict = field(default_factory=dict)
    source: str = ""
    raw: dict = field(default_factory=dict)

    def device_params(self) -> DeviceParams:
        """Angular-unit device description; lifetimes become rates."""
        d = self.device

        def rate(key):
            v = d[key]
            return 0.0 if math.isinf(v) else 1.0 / v

        return DeviceParams(
            omega_a=TWO_PI * d["omega_a"],
            omega_b=TWO_PI * d["omega_b"],
            omega_f=TWO_PI * d["omega_f"],
            omega1_ge=TWO_PI * d["omega1_ge"],
            omega1_es=TWO_PI * d["omega1_es"],
            omega2_ge=TWO_PI * d["omega2_ge"],
            omega2_es=TWO_PI * d["omega2_es"],
            g1_ge=TWO_PI * d["g1_ge"],
            g2_ge=TWO_PI * d["g2_ge"],
            gf_a=TWO_PI * d["gf_a"],
            gf_b=TWO_PI * d["gf_b"],
            kappa_a=rate("kappa_inv_a"),
            kappa_b=rate("kappa_inv_b"),
            kappa_f=rate("kappa_inv_f"),
            gamma1_ge=rate("gamma_inv_1"),
            gamma2_ge=rate("gamma_inv_2"),
        )


def _parse_float(key: str, text: str, line: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(
            f"line {line}: value for {key!r} is not a number: {text!r}"
        ) from None


def _parse_int(key: str, text: str, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(
            f"line {line}: value for {key!r} is not an integer: {text!r}"
        ) from None


def _parse_float_list(key: str, text: str, line: int) -> tuple:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"line {line}: empty list for {key!r}")
    return tuple(_parse_float(key, p, line) for p in parts)


def parse_config_text(text: str, source: str = "<string>") -> RunConfig:
    entries = {}
    lines = {}
    for n, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].strip()
        if key not in REQUIRED_KEYS and key not in OPTIONAL_KEYS:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        if key in entries:
            raise ConfigError(f"line {n}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"line {n}: empty value for {key!r}")
        entries[key] = value
        lines[key] = n

    for key in REQUIRED_KEYS:
        if key not in entries:
            raise ConfigError(f"missing required key {key!r}")

    device = {}
    for key in REQUIRED_KEYS:
        v = _parse_float(key, entries[key], lines[key])
        if key in FREQUENCY_KEYS:
            if not math.isfinite(v) or v <= 0:
                raise ConfigError(f"{key} must be a finite frequency > 0, got {v!r}")
        elif key in COUPLING_KEYS:
            if not math.isfinite(v) or v < 0:
                raise ConfigError(f"{key} must be a finite coupling >= 0, got {v!r}")
        else:
            if math.isnan(v) or v <= 0:
                raise ConfigError(f"{key} must be a lifetime > 0 (inf allowed), got {v!r}")
        device[key] = v

    cfg = RunConfig(device=device, source=source, raw=dict(entries))

    if "n_max" in entries:
        cfg.n_max = _parse_int("n_max", entries["n_max"], lines["n_max"])
        if cfg.n_max < 1:
            raise ConfigError("n_max must be >= 1")
    if "dt" in entries:
        cfg.dt = _parse_float("dt", entries["dt"], lines["dt"])
        if not math.isfinite(cfg.dt) or cfg.dt <= 0:
            raise ConfigError("dt must be a finite time > 0")
    if "n_samples" in entries:
        cfg.n_samples = _parse_int("n_samples", entries["n_samples"],
                                   lines["n_samples"])
        if cfg.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
    if "grid_n" in entries:
        cfg.grid_n = _parse_int("grid_n", entries["grid_n"], lines["grid_n"])
        if cfg.grid_n < 4:
            raise ConfigError("grid_n must be >= 4")
    if "workers" in entries:
        cfg.workers = _parse_int("workers", entries["workers"], lines["workers"])
        if cfg.workers < 1:
            raise ConfigError("workers must be >= 1")
    if "tomography_propagator" in entries:
        cfg.tomography_propagator = entries["tomography_propagator"]
        if cfg.tomography_propagator not in PROPAGATORS:
            raise ConfigError(
                f"tomography_propagator must be one of {PROPAGATORS}")
    if "cphase_window" in entries:
        cfg.cphase_window = _parse_float(
            "cphase_window", entries["cphase_window"], lines["cphase_window"])
        if not math.isfinite(cfg.cphase_window) or cfg.cphase_window <= 0:
            raise ConfigError("cphase_window must be a finite time > 0")
    if "fig3_deltas" in entries:
        cfg.fig3_deltas = _parse_float_list(
            "fig3_deltas", entries["fig3_deltas"], lines["fig3_deltas"])
        if any(d <= 1.0 for d in cfg.fig3_deltas):
            raise ConfigError("fig3_deltas values must exceed 1")
    if "fig3_gt_max" in entries:
        cfg.fig3_gt_max = _parse_float(
            "fig3_gt_max", entries["fig3_gt_max"], lines["fig3_gt_max"])
        if not math.isfinite(cfg.fig3_gt_max) or cfg.fig3_gt_max <= 0:
            raise ConfigError("fig3_gt_max must be > 0")
    if "fig3_points" in entries:
        cfg.fig3_points = _parse_int(
            "fig3_points", entries["fig3_points"], lines["fig3_points"])
        if cfg.fig3_points < 2:
            raise ConfigError("fig3_points must be >= 2")
    for p in PANELS:
        key = f"fig7_axis_{p}"
        if key in entries:
            cfg.fig7_axes[p] = _parse_float_list(key, entries[key], lines[key])

    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, source=str(path))


def available_presets() -> tuple:
    root = resources.files("darklink") / "presets"
    names = sorted(
        entry.name[:-4] for entry in root.iterdir()
        if entry.name.endswith(".cfg"))
    return tuple(names)


def load_preset(name: str) -> RunConfig:
    ref = resources.files("darklink") / "presets" / f"{name}.cfg"
    try:
        text = ref.read_text(encoding="utf-8")
    except (FileNotFoundError, OSError):
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(available_presets())}"
        ) from None
    return parse_config_text(text, source=f"preset:{name}")


def resolve_config(spec: str) -> RunConfig:
    """Treat the argument as a file path when one exists, otherwise as a
    shipped preset name."""
    if os.path.exists(spec):
        return load_config(spec)
    return load_preset(spec)
