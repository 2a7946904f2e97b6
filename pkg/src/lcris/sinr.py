"""Per-user SINR of the RIS-assisted downlink.

Phase convention: a phase vector ``theta`` is stored as the reflection
vector ``v = exp(1j*theta)`` and applied through its conjugate transpose,
so the composite channel of user k is

    f_k^H = v^H H_k + h_{d,k}^H,   H_k = diag(h_k^H) G,

i.e. element n multiplies its cascaded path by ``exp(-1j*theta_n)``.
Equivalently ``f_k^H = h_k^H diag(conj(v)) G + h_{d,k}^H``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from lcris.channel import ChannelSet, linear_to_db

TWO_PI = 2.0 * math.pi
POWER_SLACK = 1e-9


@dataclass(frozen=True)
class PhaseVector:
    theta: np.ndarray
    ceiling: float = TWO_PI

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).ravel()
        if self.ceiling > TWO_PI or self.ceiling < 0:
            raise ValueError(f"phase ceiling must lie in [0, 2pi], got {self.ceiling}")
        if np.any(theta < 0) or np.any(theta > self.ceiling):
            raise ValueError("phases must lie in [0, ceiling]")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def clipped(cls, theta, ceiling: float) -> "PhaseVector":
        return cls(np.clip(theta, 0.0, ceiling), ceiling)

    @property
    def size(self) -> int:
        return self.theta.size


@dataclass(frozen=True)
class Precoder:
    """Columns of ``w`` are the per-user beams; sum power must respect the budget."""

    w: np.ndarray
    power_budget: float

    def __post_init__(self):
        w = np.array(self.w, dtype=complex)
        if w.ndim != 2:
            raise ValueError("precoder must be an M x K matrix")
        if self.power_budget < 0:
            raise ValueError("power budget must be non-negative")
        used = float(np.sum(np.abs(w) ** 2))
        if used > self.power_budget * (1.0 + POWER_SLACK):
            raise ValueError(f"precoder uses {used:g} W > budget {self.power_budget:g} W")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.w) ** 2))


@dataclass(frozen=True)
class SinrReport:
    per_user: np.ndarray

    @property
    def min_linear(self) -> float:
        return float(np.min(self.per_user))

    @property
    def min_db(self) -> float:
        return float(linear_to_db(self.min_linear))


def reflection_vector(phases: PhaseVector) -> np.ndarray:
    return np.exp(1j * phases.theta)


def effective_channel(ch: ChannelSet, k: int) -> np.ndarray:
    """H_k = diag(h_k^H) G, shape N x M."""
    if not 0 <= k < ch.n_users:
        raise IndexError(f"user index {k} out of range for K={ch.n_users}")
    return ch.h[k].conj()[:, None] * ch.G


def effective_user_channels(ch: ChannelSet, phases: PhaseVector | None) -> np.ndarray:
    """Rows f_k (K x M) such that user k sees ``f_k^H w``.

    ``phases=None`` drops the RIS path altogether.
    """
    if phases is None:
        return np.array(ch.h_d)
    if phases.size != ch.n_elements:
        raise ValueError(f"expected {ch.n_elements} phases, got {phases.size}")
    v = reflection_vector(phases)
    return (ch.h * v[None, :]) @ ch.G.conj() + ch.h_d


def _noise_vector(noise, k: int) -> np.ndarray:
    sigma2 = np.broadcast_to(np.asarray(noise, dtype=float), (k,)).copy()
    if np.any(sigma2 <= 0):
        raise ValueError("noise variances must be positive")
    return sigma2


def sinr_from_effective(f: np.ndarray, w: np.ndarray, noise) -> np.ndarray:
    """Linear SINR of each user given composite channels ``f`` (K x M) and beams ``w`` (M x K)."""
    k = f.shape[0]
    if w.shape != (f.shape[1], k):
        raise ValueError(f"precoder shape {w.shape} does not match channels {f.shape}")
    gains = np.abs(f.conj() @ w) ** 2          # [k, j] = |f_k^H w_j|^2
    signal = np.diag(gains)
    interference = gains.sum(axis=1) - signal
    return signal / (interference + _noise_vector(noise, k))


def sinr_per_user(ch: ChannelSet, w: Precoder, phases: PhaseVector | None, noise) -> SinrReport:
    f = effective_user_channels(ch, phases)
    return SinrReport(sinr_from_effective(f, w.w, noise))
