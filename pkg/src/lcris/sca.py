"""Phase-shift subproblem: successive linearization with a trust region.

With the precoder fixed, user k's SINR constraint at level kappa reads

    g_k(theta) = |s_k|^2 - kappa * (sum_{j != k} |s_kj|^2 + sigma_k^2) >= 0,
    s_kj = sum_n exp(-1j*theta_n) a_n^(k,j) + u_kj,

with a_n^(k,j) = [H_k w_j]_n, u_kj = h_{d,k}^H w_j and s_k = s_kk (the
exponent sign follows the project phase convention, see ``lcris.sinr``).
Each step linearizes every g_k around the current phases and solves a
max-min LP over the step, restricted to the feasible phase box and a
trust region; a step is kept only if the true worst-user SINR improves.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from lcris.channel import ChannelSet
from lcris.errors import NumericalFailure
from lcris.lp import LpStatus, MaxMinLp, solve_maxmin_lp
from lcris.sinr import TWO_PI, PhaseVector, Precoder, effective_user_channels, sinr_from_effective

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScaOptions:
    trust_radius_init: float = 0.3
    trust_radius_min: float = 1e-4
    shrink_factor: float = 0.5
    max_iters: int = 100
    improve_tol: float = 1e-6
    # after a step that delivers most of its predicted gain the radius grows
    # back by this factor (capped at trust_radius_init); 1.0 disables growth
    expand_factor: float = 2.0
    # an accepted step gaining less than this (relative) ends the solve: the
    # iterate is stationary for all practical purposes
    stall_tol: float = 1e-5

    def __post_init__(self):
        if not 0 < self.trust_radius_min < self.trust_radius_init:
            raise ValueError("need 0 < trust_radius_min < trust_radius_init")
        if not 0 < self.shrink_factor < 1:
            raise ValueError("shrink_factor must lie in (0, 1)")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.expand_factor < 1:
            raise ValueError("expand_factor must be >= 1")
        if self.stall_tol < 0:
            raise ValueError("stall_tol must be >= 0")


@dataclass(frozen=True)
class StermState:
    """Signal/interference terms at one expansion point.

    ``a[n, k, j] = [H_k w_j]_n``, ``u[k, j] = h_{d,k}^H w_j`` and
    ``s[k, j] = f_k^H w_j``; the diagonal holds the desired-signal terms.
    """

    theta: np.ndarray
    a: np.ndarray
    u: np.ndarray
    s: np.ndarray

    @property
    def s_k(self) -> np.ndarray:
        return np.diagonal(self.s).copy()

    @property
    def a_nk(self) -> np.ndarray:
        return np.diagonal(self.a, axis1=1, axis2=2).copy()

    @property
    def u_k(self) -> np.ndarray:
        return np.diagonal(self.u).copy()

    # full tensors under their per-pair names
    s_kj = property(lambda self: self.s)
    a_nkj = property(lambda self: self.a)
    u_kj = property(lambda self: self.u)


def build_sterms(ch: ChannelSet, w: Precoder, phases: PhaseVector) -> StermState:
    W = w.w
    if W.shape != (ch.n_antennas, ch.n_users):
        raise ValueError(f"precoder shape {W.shape} does not match channels")
    if phases.size != ch.n_elements:
        raise ValueError("phase vector length does not match the RIS size")
    gw = ch.G @ W                                    # N x K
    a = ch.h.conj().T[:, :, None] * gw[:, None, :]   # N x K x K
    u = ch.h_d.conj() @ W
    s = np.einsum("n,nkj->kj", np.exp(-1j * phases.theta), a) + u
    return StermState(theta=phases.theta.copy(), a=a, u=u, s=s)


def constraint_values(state: StermState, kappa: float, sigma2) -> np.ndarray:
    """g_k at the expansion point."""
    k = state.s.shape[0]
    p = np.abs(state.s) ** 2
    interference = p.sum(axis=1) - np.diag(p)
    return np.diag(p) - kappa * (interference + np.broadcast_to(sigma2, (k,)))


def linearize_constraint(state: StermState, kappa: float, sigma2):
    """Affine model g_k(theta + d) ~ alpha_k + beta_k . d.

    Returns ``(alpha, beta)`` with shapes (K,) and (K, N).
    """
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    k = state.s.shape[0]
    alpha = constraint_values(state, kappa, sigma2)
    # d|s_kj|^2 / d theta_n = 2 Im{ conj(s_kj) e^{-i theta_n} a_n^(k,j) }
    rot = np.exp(-1j * state.theta)[:, None, None] * state.a
    q = 2.0 * np.imag(state.s.conj()[None, :, :] * rot)     # N x K x K
    own = np.diagonal(q, axis1=1, axis2=2)                  # N x K
    cross = q.sum(axis=2) - own
    beta = (own - kappa * cross).T
    assert beta.shape == (k, state.theta.size)
    return alpha, beta


def _grown(radius, predicted, value, new_value, opts):
    """Radius after an accepted step; predicted is the LP's relative gain."""
    if new_value / value - 1.0 >= 0.75 * predicted:
        return min(radius * opts.expand_factor, opts.trust_radius_init)
    return radius


def _min_sinr(ch, w, theta, ceiling, sigma2):
    f = effective_user_channels(ch, PhaseVector(theta, ceiling))
    return float(np.min(sinr_from_effective(f, w.w, sigma2)))


def optimize_phases(ch: ChannelSet, w: Precoder, theta0: PhaseVector,
                    opts: ScaOptions | None = None, sigma2=1.0, trace: list | None = None) -> PhaseVector:
    """Improve the worst-user SINR over the phases, keeping 0 <= theta <= ceiling.

    When the ceiling is the full 2*pi the phases are taken modulo 2*pi.

    Accepted iterates strictly increase the true min-SINR; their values are
    appended to ``trace`` when one is given.
    """
    opts = opts or ScaOptions()
    ceiling = theta0.ceiling
    theta = theta0.theta.copy()
    k = ch.n_users
    sigma2_vec = np.broadcast_to(np.asarray(sigma2, dtype=float), (k,))
    value = _min_sinr(ch, w, theta, ceiling, sigma2_vec)
    radius = opts.trust_radius_init
    retried = False
    # with the full range available the phase lives on a circle: 0 and 2*pi
    # are the same reflection, so steps wrap around instead of hitting a wall
    wraps = ceiling >= TWO_PI

    for _ in range(opts.max_iters):
        if radius < opts.trust_radius_min:
            break
        state = build_sterms(ch, w, PhaseVector(theta, ceiling))
        alpha, beta = linearize_constraint(state, value, sigma2_vec)
        # rows in units of relative SINR gap: g_k / (kappa * D_k)
        p = np.abs(state.s) ** 2
        denom = (p.sum(axis=1) - np.diag(p) + sigma2_vec) * max(value, 1e-300)
        alpha, beta = alpha / denom, beta / denom[:, None]

        if wraps:
            lower, upper = np.full(theta.size, -radius), np.full(theta.size, radius)
        else:
            lower = np.maximum(-theta, -radius)
            upper = np.minimum(ceiling - theta, radius)
        sol = solve_maxmin_lp(MaxMinLp(alpha, beta, lower, upper))
        if sol.status is not LpStatus.OPTIMAL:
            if retried:
                raise NumericalFailure(f"phase LP failed twice: {sol.status.value}")
            retried = True
            radius *= opts.shrink_factor
            continue
        predicted = sol.slack - alpha.min()
        if predicted <= 1e-12:
            break                                   # no first-order ascent left

        candidate = np.mod(theta + sol.x, TWO_PI) if wraps else np.clip(theta + sol.x, 0.0, ceiling)
        new_value = _min_sinr(ch, w, candidate, ceiling, sigma2_vec)
        if new_value > value and new_value >= value * (1.0 + opts.improve_tol):
            radius = _grown(radius, predicted, value, new_value, opts)
            stalled = new_value < value * (1.0 + opts.stall_tol)
            theta, value = candidate, new_value
            if trace is not None:
                trace.append(value)
            if stalled:
                break
        else:
            radius *= opts.shrink_factor
    return PhaseVector(theta, ceiling)


def optimize_phases_and_powers(ch: ChannelSet, w: Precoder, theta0: PhaseVector,
                               opts: ScaOptions | None = None, sigma2=1.0,
                               trace: list | None = None):
    """Joint trust-region ascent over the phases and the users' power split.

    The beam directions ``w_k / |w_k|`` stay fixed; their powers ``p_k`` are
    moved together with the phases, holding ``sum(p)`` constant. With the
    precoder frozen, a pure phase step stalls wherever no phase direction
    helps every user at once (the users' gradients point in opposite
    directions); shifting power towards the user that loses lets the
    phases keep climbing. Returns ``(PhaseVector, Precoder)``; the worst
    user's SINR never decreases.
    """
    opts = opts or ScaOptions()
    ceiling = theta0.ceiling
    wraps = ceiling >= TWO_PI
    k = ch.n_users
    n = ch.n_elements
    norms = np.linalg.norm(w.w, axis=0)
    if np.any(norms == 0) or k < 2:
        return PhaseVector(theta0.theta, ceiling), w
    beams = w.w / norms
    total = float(np.sum(norms ** 2))
    share = norms ** 2 / total
    theta = theta0.theta.copy()
    sigma2_vec = np.broadcast_to(np.asarray(sigma2, dtype=float), (k,))

    def precoder(sh):
        return Precoder(beams * np.sqrt(total * sh)[None, :], w.power_budget)

    current = w
    value = _min_sinr(ch, current, theta, ceiling, sigma2_vec)
    radius = opts.trust_radius_init
    retried = False
    for _ in range(opts.max_iters):
        if radius < opts.trust_radius_min:
            break
        state = build_sterms(ch, current, PhaseVector(theta, ceiling))
        alpha, beta_theta = linearize_constraint(state, value, sigma2_vec)
        p = total * share
        gains = np.abs(state.s) ** 2 / p[None, :]          # |f_k^H b_j|^2
        dg_dp = -value * gains
        dg_dp[np.diag_indices(k)] = np.diag(gains)
        # p = total * share / sum(share): moving the shares keeps sum(p) fixed
        dp_dshare = total * np.eye(k) - p[:, None]
        beta = np.hstack([beta_theta, dg_dp @ dp_dshare])
        interference = np.abs(state.s) ** 2
        denom = (interference.sum(axis=1) - np.diag(interference) + sigma2_vec) * max(value, 1e-300)
        alpha, beta = alpha / denom, beta / denom[:, None]

        if wraps:
            lo_t, hi_t = np.full(n, -radius), np.full(n, radius)
        else:
            lo_t, hi_t = np.maximum(-theta, -radius), np.minimum(ceiling - theta, radius)
        lower = np.concatenate([lo_t, -radius * share])
        upper = np.concatenate([hi_t, radius * share])
        sol = solve_maxmin_lp(MaxMinLp(alpha, beta, lower, upper))
        if sol.status is not LpStatus.OPTIMAL:
            if retried:
                raise NumericalFailure(f"joint phase/power LP failed twice: {sol.status.value}")
            retried = True
            radius *= opts.shrink_factor
            continue
        predicted = sol.slack - alpha.min()
        if predicted <= 1e-12:
            break

        step_t, step_s = sol.x[:n], sol.x[n:]
        cand_theta = np.mod(theta + step_t, TWO_PI) if wraps else np.clip(theta + step_t, 0.0, ceiling)
        cand_share = np.clip(share + step_s, 0.0, None)
        cand_share /= cand_share.sum()
        cand = precoder(cand_share)
        new_value = _min_sinr(ch, cand, cand_theta, ceiling, sigma2_vec)
        if new_value > value and new_value >= value * (1.0 + opts.improve_tol):
            radius = _grown(radius, predicted, value, new_value, opts)
            stalled = new_value < value * (1.0 + opts.stall_tol)
            theta, share, current, value = cand_theta, cand_share, cand, new_value
            if trace is not None:
                trace.append(value)
            if stalled:
                break
        else:
            radius *= opts.shrink_factor
    return PhaseVector(theta, ceiling), current
