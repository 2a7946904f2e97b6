"""Experiment configuration: a flat ``key = value`` text format.

One pair per line, ``#`` starts a comment, vectors are comma separated.
Missing keys keep their defaults (the full-size reference scenario);
unknown keys are rejected. Example::

    # small scenario for quick runs
    m_antennas = 8
    ris_nx = 8
    ris_nz = 8
    bs_pos = 0, 20, 4
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

from lcris.channel import ChannelParams, db_to_linear
from lcris.errors import ConfigError
from lcris.temperature import LcCellModel, celsius_to_kelvin

# above this many BS-antenna x RIS-element products a run must be requested explicitly
FULL_SCALE_PRODUCT = 16_384


@dataclass(frozen=True)
class ExperimentConfig:
    frequency: float = 28e9
    power_dbm: float = 40.0
    noise_dbm: float = -80.0
    m_antennas: int = 64
    ris_nx: int = 40
    ris_nz: int = 40
    users: int = 2
    t_ref_k: float = 300.0
    t_clear_k: float = 400.0
    alpha: float = 0.25
    temperature_c: float = 55.0
    bs_pos: Tuple[float, float, float] = (0.0, 20.0, 4.0)
    ris_pos: Tuple[float, float, float] = (0.0, 0.0, 4.0)
    ue_region: Tuple[float, ...] = (-5.0, 5.0, 5.0, 15.0, 1.5, 1.5)
    rician_bs_ris_db: float = 10.0
    rician_ris_ue_db: float = 10.0
    rician_bs_ue_db: float = 10.0
    pathloss_exponent: float = 2.0
    c0_db: float = -61.0
    d0: float = 1.0
    direct_extra_loss_db: float = 10.0
    epsilon: float = 1e-3
    i_max: int = 20
    restarts: int = 1
    trials: int = 50
    seed: int = 0
    random_phase_precoder: str = "optimized"
    lc_cell_gap_m: Optional[float] = None
    full_scale: bool = False

    def __post_init__(self):
        positive = ("frequency", "m_antennas", "ris_nx", "ris_nz", "users", "trials", "epsilon",
                    "i_max", "d0", "t_clear_k")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)!r}")
        if not 0 < self.t_ref_k < self.t_clear_k:
            raise ConfigError("need 0 < t_ref_k < t_clear_k")
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.direct_extra_loss_db < 0:
            raise ConfigError("direct_extra_loss_db must be >= 0")
        if self.random_phase_precoder not in ("optimized", "mrt"):
            raise ConfigError("random_phase_precoder must be 'optimized' or 'mrt'")
        if len(self.bs_pos) != 3 or len(self.ris_pos) != 3:
            raise ConfigError("bs_pos and ris_pos need three coordinates")
        if len(self.ue_region) != 6:
            raise ConfigError("ue_region needs xmin, xmax, ymin, ymax, zmin, zmax")
        lo, hi = self.ue_region[0::2], self.ue_region[1::2]
        if any(b < a for a, b in zip(lo, hi)):
            raise ConfigError(f"empty ue_region {self.ue_region}")
        if self.temperature_k > self.t_clear_k:
            raise ConfigError("temperature_c lies above the clearing point")
        if self.lc_cell_gap_m is not None and not self.lc_cell_gap_m > 0:
            raise ConfigError("lc_cell_gap_m must be positive")
        # validates alpha range and friends
        self.lc_model()

    @property
    def n_elements(self) -> int:
        return self.ris_nx * self.ris_nz

    @property
    def temperature_k(self) -> float:
        return float(celsius_to_kelvin(self.temperature_c))

    @property
    def power_w(self) -> float:
        return float(db_to_linear(self.power_dbm - 30.0))

    @property
    def noise_w(self) -> float:
        return float(db_to_linear(self.noise_dbm - 30.0))

    @property
    def wavelength(self) -> float:
        return self.channel_params().wavelength

    @property
    def is_large(self) -> bool:
        return self.m_antennas * self.n_elements > FULL_SCALE_PRODUCT

    def channel_params(self) -> ChannelParams:
        return ChannelParams(
            carrier_frequency=self.frequency,
            rician_bs_ris=self.rician_bs_ris_db,
            rician_ris_ue=self.rician_ris_ue_db,
            rician_bs_ue=self.rician_bs_ue_db,
            pathloss_exponent=self.pathloss_exponent,
            c0_db=self.c0_db,
            d0=self.d0,
            direct_extra_loss_db=self.direct_extra_loss_db,
        )

    def lc_model(self) -> LcCellModel:
        gap = self.lc_cell_gap_m
        return LcCellModel(
            t_ref=self.t_ref_k,
            t_clear=self.t_clear_k,
            alpha=self.alpha,
            wavelength=self.channel_params().wavelength if gap else None,
            cell_gap=gap,
        )

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


# the reduced scenario used for quick runs and the test-suite
DESK_OVERRIDES = dict(m_antennas=8, ris_nx=8, ris_nz=8, users=2, trials=50)


def desk_config(**changes) -> ExperimentConfig:
    return ExperimentConfig(**{**DESK_OVERRIDES, **changes})


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int(text: str) -> int:
    value = float(text) if any(c in text for c in ".eE") and not text.lower().startswith("0x") else None
    if value is not None:
        if not value.is_integer():
            raise ValueError(f"not an integer: {text!r}")
        return int(value)
    return int(text, 0)


def _parse_value(key: str, text: str):
    default = _FIELDS[key].default
    if isinstance(default, bool):
        return _parse_bool(text)
    if isinstance(default, int):
        return _parse_int(text)
    if isinstance(default, float) or (default is None and key == "lc_cell_gap_m"):
        if key == "lc_cell_gap_m" and text.lower() in ("", "none"):
            return None
        value = float(text)
        if math.isnan(value):
            raise ValueError("NaN is not allowed")
        return value
    if isinstance(default, tuple):
        parts = [p for p in text.replace(",", " ").split() if p]
        return tuple(float(p) for p in parts)
    return text


def parse_config_text(text: str, source: str = "<string>") -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, val = (part.strip() for part in line.partition("="))
        if key not in _FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _parse_value(key, val)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
    try:
        return ExperimentConfig(**values)
    except ConfigError as exc:
        key = next((k for k in values if k in str(exc)), None)
        where = f" (key {key!r}, line {_line_of(text, key)})" if key else ""
        raise ConfigError(f"{source}: {exc}{where}") from None


def _line_of(text: str, key: str) -> int:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if raw.split("#", 1)[0].partition("=")[0].strip() == key:
            return lineno
    return 0


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, str(path))


def format_config(cfg: ExperimentConfig) -> str:
    """Render ``cfg`` in the same key = value format (round-trips through parse_config_text)."""
    lines = []
    for name in _FIELDS:
        value = getattr(cfg, name)
        if value is None:
            continue
        if isinstance(value, tuple):
            value = ", ".join(repr(float(v)) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{name} = {value}")
    return "\n".join(lines) + "\n"
