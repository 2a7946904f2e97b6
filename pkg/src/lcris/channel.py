"""Array geometry, far-field steering vectors, pathloss and Rician links.

Conventions
-----------
* Element offsets are measured from the first element of the array
  (index 0), so a steering vector always starts with 1. ``center`` is the
  reference point used for link distances and angles.
* A UPA on the xz-plane is flattened with the x index running fastest:
  ``n = iz * nx + ix``.
* For a link ``tx -> rx`` the transmit steering vector points from the tx
  center to the rx center, the receive one points back at the tx, and the
  LoS matrix is ``a_rx a_tx^H`` (shape ``n_rx x n_tx``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from lcris.errors import ConfigError

SPEED_OF_LIGHT = 299_792_458.0

ULA_X = "ula-x"
UPA_XZ = "upa-xz"


@dataclass(frozen=True)
class ArrayGeometry:
    kind: str
    counts: Tuple[int, ...]
    element_spacing: float
    center: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.kind not in (ULA_X, UPA_XZ):
            raise ConfigError(f"unknown array kind {self.kind!r}")
        expected = 1 if self.kind == ULA_X else 2
        if len(self.counts) != expected:
            raise ConfigError(f"{self.kind} needs {expected} count(s), got {self.counts}")
        if any(int(c) < 1 for c in self.counts):
            raise ConfigError(f"element counts must be >= 1, got {self.counts}")
        if not self.element_spacing > 0:
            raise ConfigError("element_spacing must be positive")

    @classmethod
    def ula(cls, m: int, spacing: float, center=(0.0, 0.0, 0.0)) -> "ArrayGeometry":
        return cls(ULA_X, (int(m),), float(spacing), tuple(map(float, center)))

    @classmethod
    def upa(cls, nx: int, nz: int, spacing: float, center=(0.0, 0.0, 0.0)) -> "ArrayGeometry":
        return cls(UPA_XZ, (int(nx), int(nz)), float(spacing), tuple(map(float, center)))

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    def element_offsets(self) -> np.ndarray:
        """(size, 3) element positions relative to element 0."""
        d = self.element_spacing
        if self.kind == ULA_X:
            idx = np.arange(self.counts[0])
            return np.stack([idx * d, np.zeros_like(idx, float), np.zeros_like(idx, float)], axis=1)
        nx, nz = self.counts
        ix, iz = np.meshgrid(np.arange(nx), np.arange(nz), indexing="xy")
        ix, iz = ix.ravel(), iz.ravel()
        return np.stack([ix * d, np.zeros(ix.size), iz * d], axis=1).astype(float)


@dataclass(frozen=True)
class ChannelParams:
    carrier_frequency: float = 28e9
    rician_bs_ris: float = 10.0
    rician_ris_ue: float = 10.0
    rician_bs_ue: float = 10.0
    pathloss_exponent: float = 2.0
    c0_db: float = -61.0
    d0: float = 1.0
    direct_extra_loss_db: float = 10.0

    def __post_init__(self):
        if self.carrier_frequency <= 0:
            raise ConfigError("carrier_frequency must be positive")
        if self.pathloss_exponent < 0:
            raise ConfigError("pathloss_exponent must be >= 0")
        if self.d0 <= 0:
            raise ConfigError("d0 must be positive")
        if self.direct_extra_loss_db < 0:
            raise ConfigError("direct_extra_loss_db must be >= 0")
        for name in ("rician_bs_ris", "rician_ris_ue", "rician_bs_ue", "c0_db"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency


@dataclass(frozen=True)
class ChannelSet:
    """One channel realization.

    ``G`` is RIS <- BS (N x M). ``h`` stacks the RIS -> UE vectors as rows
    (K x N) and ``h_d`` the BS -> UE vectors (K x M); both enter the
    received signal conjugated, as ``h_k^H``.
    """

    G: np.ndarray
    h: np.ndarray
    h_d: np.ndarray
    ue_positions: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    def __post_init__(self):
        n, m = np.shape(self.G)
        if np.ndim(self.h) != 2 or np.shape(self.h)[1] != n:
            raise ValueError(f"h must be K x {n}, got {np.shape(self.h)}")
        k = np.shape(self.h)[0]
        if np.shape(self.h_d) != (k, m):
            raise ValueError(f"h_d must be {k} x {m}, got {np.shape(self.h_d)}")
        for name in ("G", "h", "h_d"):
            arr = np.array(getattr(self, name), dtype=complex)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_elements(self) -> int:
        return self.G.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.G.shape[1]

    @property
    def n_users(self) -> int:
        return self.h.shape[0]


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


def pathloss_linear(d: float, params: ChannelParams) -> float:
    """Distance-dependent power gain C0 * (d0/d)**exponent."""
    if not d > 0:
        raise ValueError(f"distance must be positive, got {d}")
    return 10.0 ** (params.c0_db / 10.0) * (params.d0 / d) ** params.pathloss_exponent


def direction(azimuth: float, elevation: float) -> np.ndarray:
    ce = math.cos(elevation)
    return np.array([ce * math.cos(azimuth), ce * math.sin(azimuth), math.sin(elevation)])


def angles_of(vec) -> Tuple[float, float]:
    """(azimuth, elevation) of a nonzero 3-vector."""
    v = np.asarray(vec, dtype=float)
    v = v / np.linalg.norm(v)
    return math.atan2(v[1], v[0]), math.asin(np.clip(v[2], -1.0, 1.0))


def steering_from_direction(geom: ArrayGeometry, unit_dir, wavelength: float) -> np.ndarray:
    k = 2.0 * math.pi / wavelength
    return np.exp(1j * k * (geom.element_offsets() @ np.asarray(unit_dir, dtype=float)))


def steering_vector(geom: ArrayGeometry, azimuth: float, elevation: float,
                    wavelength: float) -> np.ndarray:
    """Far-field plane-wave response exp(i 2pi/lambda d(psi)^T u_n)."""
    if not wavelength > 0:
        raise ValueError("wavelength must be positive")
    return steering_from_direction(geom, direction(azimuth, elevation), wavelength)


def los_matrix(tx: ArrayGeometry, rx: ArrayGeometry, wavelength: float) -> np.ndarray:
    los = np.asarray(rx.center, float) - np.asarray(tx.center, float)
    if not np.linalg.norm(los) > 0:
        raise ValueError("tx and rx centers coincide")
    az, el = angles_of(los)
    a_tx = steering_vector(tx, az, el, wavelength)
    az_back, el_back = angles_of(-los)
    a_rx = steering_vector(rx, az_back, el_back, wavelength)
    return np.outer(a_rx, a_tx.conj())


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1) samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def rician_channel(tx: ArrayGeometry, rx: ArrayGeometry, rician_db: float, gain: float,
                   rng: np.random.Generator, wavelength: float) -> np.ndarray:
    """sqrt(gain) * (sqrt(K/(1+K)) H_los + sqrt(1/(1+K)) H_nlos), n_rx x n_tx."""
    if not gain > 0:
        raise ValueError("gain must be positive")
    nlos = complex_gaussian(rng, (rx.size, tx.size))
    k_lin = float(db_to_linear(rician_db))
    if math.isinf(k_lin):
        w_los, w_nlos = 1.0, 0.0
    else:
        w_los, w_nlos = math.sqrt(k_lin / (1.0 + k_lin)), math.sqrt(1.0 / (1.0 + k_lin))
    h = w_los * los_matrix(tx, rx, wavelength) + w_nlos * nlos
    return math.sqrt(gain) * h


def draw_ue_positions(region, k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draws in an axis-aligned box ``(xmin, xmax, ymin, ymax, zmin, zmax)``."""
    lo = np.asarray(region[0::2], dtype=float)
    hi = np.asarray(region[1::2], dtype=float)
    if np.any(hi < lo):
        raise ConfigError(f"empty UE placement region {tuple(region)}")
    return lo + (hi - lo) * rng.random((k, 3))


def generate_channel_set(cfg, rng: np.random.Generator) -> ChannelSet:
    """Draw UE positions and all links for one trial.

    Draw order is fixed (UE positions, direct links, BS-RIS, RIS-UE) so the
    direct links of a given stream do not depend on the RIS size.
    """
    params = cfg.channel_params()
    lam = params.wavelength
    bs = ArrayGeometry.ula(cfg.m_antennas, lam / 2, cfg.bs_pos)
    ris = ArrayGeometry.upa(cfg.ris_nx, cfg.ris_nz, lam / 2, cfg.ris_pos)
    k = cfg.users

    ue_pos = draw_ue_positions(cfg.ue_region, k, rng)
    blockage = float(db_to_linear(-params.direct_extra_loss_db))

    h_d = np.empty((k, bs.size), dtype=complex)
    for i in range(k):
        ue = ArrayGeometry.ula(1, lam / 2, ue_pos[i])
        gain = pathloss_linear(_distance(bs, ue), params) * blockage
        # 1 x M row is h_d^H
        h_d[i] = rician_channel(bs, ue, params.rician_bs_ue, gain, rng, lam)[0].conj()

    g_gain = pathloss_linear(_distance(bs, ris), params)
    G = rician_channel(bs, ris, params.rician_bs_ris, g_gain, rng, lam)

    h = np.empty((k, ris.size), dtype=complex)
    for i in range(k):
        ue = ArrayGeometry.ula(1, lam / 2, ue_pos[i])
        gain = pathloss_linear(_distance(ris, ue), params)
        h[i] = rician_channel(ris, ue, params.rician_ris_ue, gain, rng, lam)[0].conj()

    return ChannelSet(G=G, h=h, h_d=h_d, ue_positions=ue_pos)


def _distance(a: ArrayGeometry, b: ArrayGeometry) -> float:
    return float(np.linalg.norm(np.asarray(a.center) - np.asarray(b.center)))


def random_channel_set(n: int, m: int, k: int, rng: np.random.Generator,
                       direct_scale: float = 1.0, ris_scale: float = 1.0) -> ChannelSet:
    """Unit-variance i.i.d. Rayleigh links; handy for small test instances."""
    return ChannelSet(
        G=ris_scale * complex_gaussian(rng, (n, m)),
        h=complex_gaussian(rng, (k, n)),
        h_d=direct_scale * complex_gaussian(rng, (k, m)),
    )

