"""Base-station precoders for a fixed RIS configuration.

The max-min design works on noise-normalized channels ``g_k = f_k / sigma_k``
and relies on uplink-downlink duality: a set of SINR targets is reachable
in the downlink with sum power P iff the virtual uplink with unit receiver
noise reaches it with the same sum power. The uplink minimum-power point
is the fixed point of

    q_k = gamma / (g_k^H (I + sum_{j != k} q_j g_j g_j^H)^{-1} g_k),

which, iterated from q = 0, increases monotonically to that point, so
exceeding the budget on the way is a proof of infeasibility.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from lcris.errors import NumericalFailure
from lcris.sinr import Precoder, sinr_from_effective

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PrecoderOptions:
    sinr_tol: float = 1e-4
    fp_tol: float = 1e-10
    fp_max_iters: int = 500

    def __post_init__(self):
        if self.sinr_tol <= 0 or self.fp_tol <= 0 or self.fp_max_iters < 1:
            raise ValueError("precoder tolerances must be positive")


def mrt_precoder(channels, total_power: float) -> Precoder:
    """Matched-filter beams with the budget split equally over non-zero users."""
    c = np.atleast_2d(np.asarray(channels, dtype=complex))
    norms = np.linalg.norm(c, axis=1)
    active = norms > 0
    if not np.any(active):
        raise ValueError("all channels are zero")
    w = np.zeros((c.shape[1], c.shape[0]), dtype=complex)
    per_user = total_power / np.count_nonzero(active)
    w[:, active] = (c[active] / norms[active, None]).T * math.sqrt(per_user)
    return Precoder(w, total_power)


def _normalized(f, sigma2):
    f = np.atleast_2d(np.asarray(f, dtype=complex))
    s2 = np.broadcast_to(np.asarray(sigma2, dtype=float), (f.shape[0],))
    if np.any(s2 <= 0):
        raise ValueError("noise variances must be positive")
    return f / np.sqrt(s2)[:, None]


def _uplink_fixed_point(g, gamma, power, opts):
    """Minimal uplink powers for a common target, or None if over budget."""
    k, m = g.shape
    q = np.zeros(k)
    outer = np.einsum("ki,kj->kij", g, g.conj())
    eye = np.eye(m)
    for _ in range(opts.fp_max_iters):
        cov = eye + np.tensordot(q, outer, axes=1)
        x = np.real(np.einsum("ki,ki->k", g.conj(), np.linalg.solve(cov, g.T).T))
        y = x / (1.0 - q * x)                  # g_k^H C_{-k}^{-1} g_k
        q_new = gamma / y
        if q_new.sum() > power * (1.0 + 1e-12):
            return None
        if np.max(np.abs(q_new - q)) <= opts.fp_tol * np.max(q_new):
            return q_new
        q = q_new
    raise NumericalFailure(
        f"uplink power iteration did not converge in {opts.fp_max_iters} steps (gamma={gamma:g})"
    )


def _downlink_from_uplink(g, q, gamma):
    k, m = g.shape
    cov = np.eye(m) + (g.T * q) @ g.conj()
    b = np.linalg.solve(cov, g.T)               # columns ~ MMSE receive filters
    b /= np.linalg.norm(b, axis=0, keepdims=True)
    coupling = np.abs(g.conj() @ b) ** 2        # [k, j] = |g_k^H b_j|^2
    system = -coupling
    system[np.diag_indices(k)] = np.diag(coupling) / gamma
    p = np.linalg.solve(system, np.ones(k))
    if np.any(p < -1e-12 * max(1.0, p.max())):
        raise NumericalFailure("downlink power system returned negative powers")
    return b * np.sqrt(np.clip(p, 0.0, None))[None, :]


def feasibility_sinr(f, gamma: float, sigma2, power: float,
                     opts: PrecoderOptions | None = None):
    """Decide whether every user can reach ``gamma`` within sum power ``power``.

    Returns ``(True, Precoder)`` or ``(False, None)``.
    """
    opts = opts or PrecoderOptions()
    if not gamma > 0:
        raise ValueError("target SINR must be positive")
    g = _normalized(f, sigma2)
    if np.any(np.linalg.norm(g, axis=1) == 0):
        return False, None
    q = _uplink_fixed_point(g, gamma, power, opts)
    if q is None:
        return False, None
    w = _downlink_from_uplink(g, q, gamma)
    used = float(np.sum(np.abs(w) ** 2))
    if used > power:
        w *= math.sqrt(power / used)
    return True, Precoder(w, power)


def maxmin_precoder(f, sigma2, power: float, opts: PrecoderOptions | None = None) -> Precoder:
    """Sum-power-constrained precoder maximizing the worst user's SINR.

    Bisects the common SINR target between the MRT value and the
    single-user bound min_k P |f_k|^2 / sigma_k^2, stopping once the
    bracket is within ``opts.sinr_tol`` relative.
    """
    opts = opts or PrecoderOptions()
    f = np.atleast_2d(np.asarray(f, dtype=complex))
    k = f.shape[0]
    mrt = mrt_precoder(f, power)
    if k == 1:
        return mrt
    g = _normalized(f, sigma2)
    gains = np.linalg.norm(g, axis=1) ** 2
    if np.any(gains == 0):
        warnings.warn("a user has an all-zero composite channel; max-min SINR is 0")
        return mrt

    best = mrt
    lo = float(np.min(sinr_from_effective(f, mrt.w, sigma2)))
    hi = float(power * gains.min())
    while hi > lo * (1.0 + opts.sinr_tol):
        mid = math.sqrt(lo * hi) if lo > 0 else 0.5 * hi
        ok, w = feasibility_sinr(f, mid, sigma2, power, opts)
        if ok:
            lo, best = mid, w
        else:
            hi = mid
    return best
