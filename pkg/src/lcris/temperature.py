"""Thermal model of a nematic liquid-crystal phase-shifter cell.

Temperatures are in Kelvin throughout. The phase ceiling only needs the
reference and clearing temperatures plus the structure exponent; the
refractive-index and birefringence helpers additionally need the
fitting constants or the cell geometry.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from lcris.errors import ConfigError

ALPHA_RANGE = (0.20, 0.25)
KELVIN_OFFSET = 273.15
TWO_PI = 2.0 * math.pi


def celsius_to_kelvin(t_c):
    return t_c + KELVIN_OFFSET


def kelvin_to_celsius(t_k):
    return t_k - KELVIN_OFFSET


@dataclass(frozen=True)
class LcCellModel:
    """Material and geometry constants of one LC cell.

    ``delta_n0`` may be given directly; otherwise it is derived from
    ``wavelength`` and ``cell_gap`` so that the cell reaches a full 2*pi
    swing at ``t_ref``.
    """

    t_ref: float = 300.0
    t_clear: float = 400.0
    alpha: float = 0.25
    fit_a: Optional[float] = None
    fit_b: Optional[float] = None
    wavelength: Optional[float] = None
    cell_gap: Optional[float] = None
    delta_n0_override: Optional[float] = None
    allow_any_alpha: bool = False

    def __post_init__(self):
        if not (0.0 < self.t_ref < self.t_clear):
            raise ConfigError(
                f"need 0 < t_ref < t_clear, got t_ref={self.t_ref}, t_clear={self.t_clear}"
            )
        lo, hi = ALPHA_RANGE
        if not (lo <= self.alpha <= hi):
            if not self.allow_any_alpha:
                raise ConfigError(f"alpha={self.alpha} outside [{lo}, {hi}]")
            warnings.warn(f"alpha={self.alpha} outside the usual [{lo}, {hi}] range")
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if (self.wavelength is None) != (self.cell_gap is None):
            raise ConfigError("wavelength and cell_gap must be given together")
        if self.wavelength is not None and (self.wavelength <= 0 or self.cell_gap <= 0):
            raise ConfigError("wavelength and cell_gap must be positive")
        if self.delta_n0_override is not None and self.delta_n0_override <= 0:
            raise ConfigError("delta_n0 must be positive")

    @property
    def delta_n0(self) -> Optional[float]:
        if self.delta_n0_override is not None:
            return self.delta_n0_override
        if self.wavelength is None:
            return None
        return (self.wavelength / self.cell_gap) * (1.0 - self.t_ref / self.t_clear) ** (-self.alpha)


def _check_temperature(model: LcCellModel, t):
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr > model.t_clear):
        raise ValueError(
            f"temperature above clearing point {model.t_clear} K: nematic phase lost"
        )
    if np.any(t_arr < 0):
        raise ValueError("temperature must be non-negative Kelvin")
    return t_arr


def _order_parameter(model: LcCellModel, t_arr):
    # (t_c - t) / t_c rather than 1 - t / t_c: exact near the clearing point
    return np.clip((model.t_clear - t_arr) / model.t_clear, 0.0, None) ** model.alpha


def _as_output(value, t):
    return float(value) if np.ndim(t) == 0 else value


def birefringence(model: LcCellModel, t):
    """Delta n(T) = Delta n0 * (1 - T/Tc)**alpha."""
    t_arr = _check_temperature(model, t)
    if model.delta_n0 is None:
        raise ConfigError("birefringence needs delta_n0 or (wavelength, cell_gap)")
    return _as_output(model.delta_n0 * _order_parameter(model, t_arr), t)


def refractive_indices(model: LcCellModel, t):
    """Extraordinary and ordinary indices from the four-parameter fit."""
    if model.fit_a is None or model.fit_b is None:
        raise ConfigError("refractive_indices needs fit_a and fit_b")
    if model.delta_n0 is None:
        raise ConfigError("refractive_indices needs delta_n0 or (wavelength, cell_gap)")
    t_arr = _check_temperature(model, t)
    base = model.fit_a - model.fit_b * t_arr
    s = model.delta_n0 * _order_parameter(model, t_arr)
    n_e = base + 2.0 * s / 3.0
    n_o = base - s / 3.0
    return _as_output(n_e, t), _as_output(n_o, t)


def theta_max(model: LcCellModel, t):
    """Largest phase shift the cell can produce at temperature ``t``.

    Exceeds 2*pi below the reference temperature; callers that use it as
    an optimization ceiling should go through :func:`phase_ceiling`.
    """
    t_arr = _check_temperature(model, t)
    ratio = (model.t_clear - t_arr) / (model.t_clear - model.t_ref)
    return _as_output(TWO_PI * np.clip(ratio, 0.0, None) ** model.alpha, t)


def phase_ceiling(model: LcCellModel, t) -> float:
    """theta_max clamped to 2*pi, since phases are only meaningful modulo 2*pi."""
    return min(float(theta_max(model, t)), TWO_PI)
