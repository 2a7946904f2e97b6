"""Temperature-aware phase-shift design for liquid-crystal RIS downlinks."""

from lcris.errors import ConfigError, LcrisError, NumericalFailure
from lcris.temperature import LcCellModel, theta_max

__all__ = [
    "ConfigError",
    "LcCellModel",
    "LcrisError",
    "NumericalFailure",
    "theta_max",
]

__version__ = "0.1.0"
