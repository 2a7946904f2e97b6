"""Dense bounded-variable simplex for small max-min linear programs.

The only problem shape the phase optimizer needs is

    maximize t  subject to  alpha_k + beta_k . x >= t  (k = 1..K),
                            lower <= x <= upper,

which :func:`solve_maxmin_lp` casts into equality form for the generic
two-phase solver :func:`bounded_simplex`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-11
# consecutive degenerate pivots before falling back to Bland's rule
DEGENERATE_STREAK = 8


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class MaxMinLp:
    alpha: np.ndarray
    beta: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        beta = np.atleast_2d(np.asarray(self.beta, dtype=float))
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        k, n = beta.shape
        if alpha.shape != (k,) or lower.shape != (n,) or upper.shape != (n,):
            raise ValueError("inconsistent MaxMinLp dimensions")
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
            raise ValueError("LP coefficients must be finite")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("box bounds must be finite")
        if np.any(lower > upper):
            raise ValueError("empty box: lower > upper")
        for name, val in (("alpha", alpha), ("beta", beta), ("lower", lower), ("upper", upper)):
            object.__setattr__(self, name, val)

    @property
    def n_vars(self) -> int:
        return self.beta.shape[1]

    @property
    def n_rows(self) -> int:
        return self.beta.shape[0]

    def values(self, x) -> np.ndarray:
        return self.alpha + self.beta @ np.asarray(x, dtype=float)


@dataclass(frozen=True)
class LpSolution:
    x: np.ndarray
    slack: float
    status: LpStatus
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status is LpStatus.OPTIMAL


@dataclass
class _Result:
    z: np.ndarray
    status: LpStatus
    iterations: int


class _Tableau:
    """Explicit B^-1 [A | b] with nonbasic variables resting on a bound."""

    def __init__(self, a, b, lo, hi, basis, z):
        self.t = np.array(a, dtype=float)
        self.rhs = np.array(b, dtype=float)
        self.lo = np.array(lo, dtype=float)
        self.hi = np.array(hi, dtype=float)
        self.basis = list(basis)
        self.z = np.array(z, dtype=float)
        self.is_basic = np.zeros(self.t.shape[1], dtype=bool)
        self.is_basic[self.basis] = True

    def refresh_basics(self):
        nonbasic = ~self.is_basic
        self.z[self.basis] = self.rhs - self.t[:, nonbasic] @ self.z[nonbasic]

    def pivot(self, r: int, j: int):
        t = self.t
        piv = t[r, j]
        t[r] /= piv
        self.rhs[r] /= piv
        col = t[:, j].copy()
        col[r] = 0.0
        t -= np.outer(col, t[r])
        self.rhs -= col * self.rhs[r]
        self.is_basic[self.basis[r]] = False
        self.basis[r] = j
        self.is_basic[j] = True

    def iterate(self, c, max_iter: int, start_iter: int = 0) -> tuple:
        """Primal simplex on objective ``c``; returns (status, iterations used)."""
        it = start_iter
        streak = 0
        lo, hi = self.lo, self.hi
        while True:
            self.refresh_basics()
            d = c - c[self.basis] @ self.t
            d[self.is_basic] = 0.0
            z = self.z
            movable = hi > lo
            at_lo = (z <= lo + FEAS_TOL) & movable
            at_hi = (z >= hi - FEAS_TOL) & movable
            up = ~self.is_basic & at_lo & (d > OPT_TOL)
            down = ~self.is_basic & at_hi & (d < -OPT_TOL) & ~up
            cand = np.flatnonzero(up | down)
            if cand.size == 0:
                return LpStatus.OPTIMAL, it
            if it >= max_iter:
                return LpStatus.NUMERICAL_FAILURE, it
            it += 1

            bland = streak >= DEGENERATE_STREAK
            order = cand if bland else cand[np.argsort(-np.abs(d[cand]), kind="stable")]
            zb = z[self.basis]
            lob, hib = lo[self.basis], hi[self.basis]

            # Flipping a nonbasic to its other bound leaves the basis (and so
            # every reduced cost) unchanged; the leading run of candidates
            # whose full flips keep all basics within bounds is exactly what
            # one-at-a-time entering would flip, so apply it in one go.
            span = hi[order] - lo[order]
            n_fin = int(np.argmin(np.isfinite(span))) if not np.all(np.isfinite(span)) else span.size
            sg = np.where(up[order[:n_fin]], 1.0, -1.0)
            moves = -self.t[:, order[:n_fin]] * (sg * span[:n_fin])[None, :]
            path = zb[:, None] + np.cumsum(moves, axis=1)
            inside = np.all((path >= lob[:, None] - FEAS_TOL) & (path <= hib[:, None] + FEAS_TOL), axis=0)
            lead = int(np.argmin(inside)) if not np.all(inside) else n_fin
            if lead > 0:
                flipped = order[:lead]
                z[flipped] = np.where(sg[:lead] > 0, hi[flipped], lo[flipped])
                streak = 0
                continue

            j = int(order[0])
            sgn = 1.0 if up[j] else -1.0
            step_dir = -sgn * self.t[:, j]     # change of each basic per unit step

            ratios = np.full(len(self.basis), np.inf)
            dec = step_dir < -PIVOT_TOL
            inc = step_dir > PIVOT_TOL
            ratios[dec] = (zb[dec] - lob[dec]) / -step_dir[dec]
            inc_fin = inc & np.isfinite(hib)
            ratios[inc_fin] = (hib[inc_fin] - zb[inc_fin]) / step_dir[inc_fin]
            ratios = np.maximum(ratios, 0.0)

            flip = hi[j] - lo[j]
            theta_rows = ratios.min() if ratios.size else np.inf
            if not np.isfinite(flip) and not np.isfinite(theta_rows):
                return LpStatus.UNBOUNDED, it

            if flip <= theta_rows:
                z[j] = hi[j] if sgn > 0 else lo[j]
                streak = 0
                continue

            ties = np.flatnonzero(ratios <= theta_rows + FEAS_TOL)
            if bland:
                r = int(min(ties, key=lambda i: self.basis[i]))
            else:
                r = int(ties[np.argmax(np.abs(step_dir[ties]))])
            leaving = self.basis[r]
            z[j] += sgn * theta_rows
            z[leaving] = lo[leaving] if step_dir[r] < 0 else hi[leaving]
            self.pivot(r, j)
            streak = streak + 1 if theta_rows <= FEAS_TOL else 0


def bounded_simplex(a, b, c, lo, hi, max_iter: int = 10_000, x0=None) -> _Result:
    """Maximize ``c.z`` s.t. ``a z = b``, ``lo <= z <= hi``.

    Lower bounds must be finite; upper bounds may be ``inf``. Phase one
    starts every variable at ``x0`` (default: its lower bound) and adds one
    artificial per row to absorb the residual.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    m, n = a.shape
    if not np.all(np.isfinite(lo)):
        raise ValueError("lower bounds must be finite")
    z0 = lo.copy() if x0 is None else np.clip(np.asarray(x0, float), lo, hi)

    resid = b - a @ z0
    sign = np.where(resid >= 0, 1.0, -1.0)
    # B = diag(sign) for the artificial basis, so B^-1 = diag(sign)
    t0 = np.hstack([sign[:, None] * a, np.eye(m)])
    rhs0 = sign * b
    lo_ext = np.concatenate([lo, np.zeros(m)])
    hi_ext = np.concatenate([hi, np.full(m, np.inf)])
    z_ext = np.concatenate([z0, np.abs(resid)])
    tab = _Tableau(t0, rhs0, lo_ext, hi_ext, range(n, n + m), z_ext)

    c1 = np.concatenate([np.zeros(n), -np.ones(m)])
    status, it = tab.iterate(c1, max_iter)
    if status is not LpStatus.OPTIMAL:
        return _Result(tab.z[:n].copy(), LpStatus.NUMERICAL_FAILURE, it)
    tab.refresh_basics()
    scale = max(1.0, float(np.max(np.abs(b))) if b.size else 1.0)
    if tab.z[n:].sum() > FEAS_TOL * scale * m:
        return _Result(tab.z[:n].copy(), LpStatus.INFEASIBLE, it)

    # pin artificials at zero and push basic ones out where possible
    tab.hi[n:] = 0.0
    tab.z[n:] = 0.0
    for r in range(m):
        if tab.basis[r] < n:
            continue
        row = np.abs(tab.t[r, :n])
        row[tab.is_basic[:n]] = 0.0
        j = int(np.argmax(row)) if row.size else -1
        if j >= 0 and row[j] > 1e-9:
            tab.pivot(r, j)

    c2 = np.concatenate([c, np.zeros(m)])
    status, it = tab.iterate(c2, max_iter, start_iter=it)
    tab.refresh_basics()
    return _Result(tab.z[:n].copy(), status, it)


def solve_maxmin_lp(problem: MaxMinLp, max_iter: int | None = None) -> LpSolution:
    """Maximize min_k(alpha_k + beta_k . x) over the box."""
    k, n = problem.n_rows, problem.n_vars
    if max_iter is None:
        max_iter = 50 * (n + k)
    scale = max(float(np.max(np.abs(problem.alpha))), float(np.max(np.abs(problem.beta), initial=0.0)))
    scale = scale if scale > 0 else 1.0
    alpha = problem.alpha / scale
    beta = problem.beta / scale

    # columns: x (n) | t+ | t- | s (k);  -beta x + t+ - t- + s = alpha
    a = np.hstack([-beta, np.ones((k, 1)), -np.ones((k, 1)), np.eye(k)])
    lo = np.concatenate([problem.lower, [0.0, 0.0], np.zeros(k)])
    hi = np.concatenate([problem.upper, [np.inf, np.inf], np.full(k, np.inf)])
    c = np.zeros(n + 2 + k)
    c[n], c[n + 1] = 1.0, -1.0

    # start x at the corner favoured by the summed rows; fewer bound flips later
    x0 = np.where(beta.sum(axis=0) > 0, problem.upper, problem.lower)
    res = bounded_simplex(a, alpha, c, lo, hi, max_iter=max_iter,
                          x0=np.concatenate([x0, np.zeros(2 + k)]))
    x = np.clip(res.z[:n], problem.lower, problem.upper)
    slack = float(np.min(problem.values(x)))
    status = res.status
    if status is LpStatus.UNBOUNDED:
        # t is bounded above by construction; an unbounded ray means breakdown
        status = LpStatus.NUMERICAL_FAILURE
    return LpSolution(x=x, slack=slack, status=status, iterations=res.iterations)
