"""Alternating optimization and the comparison schemes.

All schemes of one trial share a channel realization and one random
sub-stream. Every scheme starts from a fresh copy of that stream, so a
scheme's result does not depend on which other schemes run, or in what
order. Work shared between schemes (the unconstrained design that the
temperature-neglecting benchmark clips, for instance) is memoized in a
:class:`TrialCache`. The cache only saves time: with or without it the
results are identical.
"""

from __future__ import annotations

import copy
import dataclasses
import enum
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from lcris.channel import ChannelSet, linear_to_db
from lcris.errors import LcrisError
from lcris.precoder import PrecoderOptions, maxmin_precoder, mrt_precoder
from lcris.sca import ScaOptions, optimize_phases, optimize_phases_and_powers
from lcris.sinr import (
    TWO_PI,
    PhaseVector,
    Precoder,
    SinrReport,
    effective_user_channels,
    sinr_from_effective,
    sinr_per_user,
)
from lcris.temperature import LcCellModel, phase_ceiling

log = logging.getLogger(__name__)


class Scheme(enum.Enum):
    PROPOSED = "Proposed"
    TEMP_NEGLECTING = "TempNeglecting"
    RANDOM_PHASE = "RandomPhase"
    WITHOUT_RIS = "WithoutRis"
    UPPER_BOUND = "UpperBound"

    @classmethod
    def parse(cls, name: str) -> "Scheme":
        key = name.strip().lower().replace("_", "").replace("-", "")
        for s in cls:
            if s.value.lower() == key:
                return s
        raise ValueError(f"unknown scheme {name!r}; choose from {[s.value for s in cls]}")


ALL_SCHEMES = tuple(Scheme)


@dataclass(frozen=True)
class AoOptions:
    epsilon: float = 1e-3
    max_outer_iters: int = 20
    restarts: int = 1
    # escape AO stalls with a joint phase / power-split step before stopping
    joint_refine: bool = True
    sca: ScaOptions = field(default_factory=ScaOptions)
    precoder: PrecoderOptions = field(default_factory=PrecoderOptions)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if self.restarts < 0:
            raise ValueError("restarts must be >= 0")


@dataclass
class SchemeResult:
    scheme: Optional[Scheme]
    final_phases: Optional[PhaseVector]
    final_precoder: Precoder
    report: SinrReport
    outer_iters: int = 0
    trace: list = field(default_factory=list)

    @property
    def min_sinr_db(self) -> float:
        return self.report.min_db

    @property
    def min_sinr(self) -> float:
        return self.report.min_linear


def _budget(cfg):
    return float(cfg.power_w), float(cfg.noise_w)


def _ao_single(ch, theta, w0, ceiling, opts, power, sigma2):
    """One AO run from ``theta`` (and optionally an incumbent precoder ``w0``)."""
    phases = PhaseVector.clipped(theta, ceiling)
    w = w0
    value = None
    if w is not None:
        value = float(np.min(sinr_from_effective(effective_user_channels(ch, phases), w.w, sigma2)))
    trace = []
    iters = 0
    last = value
    for iters in range(1, opts.max_outer_iters + 1):
        f = effective_user_channels(ch, phases)
        cand = maxmin_precoder(f, sigma2, power, opts.precoder)
        cand_value = float(np.min(sinr_from_effective(f, cand.w, sigma2)))
        # keep the incumbent when bisection tolerance would make us step back
        if value is None or cand_value >= value:
            w, value = cand, cand_value
        phases = optimize_phases(ch, w, phases, opts.sca, sigma2)
        value = float(np.min(sinr_from_effective(effective_user_channels(ch, phases), w.w, sigma2)))
        converged = iters > 1 and abs(value - last) <= opts.epsilon * abs(last)
        if converged and opts.joint_refine:
            phases, w = optimize_phases_and_powers(ch, w, phases, opts.sca, sigma2)
            refined = float(np.min(sinr_from_effective(effective_user_channels(ch, phases), w.w, sigma2)))
            converged = refined - value <= opts.epsilon * abs(value)
            value = refined
        trace.append(float(linear_to_db(value)))
        if converged:
            break
        last = value
    report = sinr_per_user(ch, w, phases, sigma2)
    return SchemeResult(None, phases, w, report, iters, trace)


def alternating_optimize(ch: ChannelSet, cfg, theta_ceiling: float, opts: AoOptions,
                         rng: np.random.Generator, warm_starts: Sequence = ()) -> SchemeResult:
    """Alternate max-min precoding and phase SCA; best run over all starts wins.

    ``opts.restarts`` random starts are drawn uniformly in [0, ceiling].
    ``warm_starts`` adds extra starts, each either a phase array or a
    ``(phases, Precoder)`` pair whose precoder serves as the incumbent.
    """
    if not 0 < theta_ceiling <= TWO_PI:
        raise ValueError(f"theta_ceiling must lie in (0, 2pi], got {theta_ceiling}")
    power, sigma2 = _budget(cfg)
    starts = [(rng.random(ch.n_elements) * theta_ceiling, None) for _ in range(opts.restarts)]
    for ws in warm_starts:
        if isinstance(ws, tuple):
            starts.append((np.asarray(ws[0], float), ws[1]))
        else:
            starts.append((np.asarray(ws, float), None))
    if not starts:
        raise ValueError("need at least one start (restarts or warm_starts)")

    best = None
    for theta, w0 in starts:
        res = _ao_single(ch, theta, w0, theta_ceiling, opts, power, sigma2)
        if best is None or res.min_sinr > best.min_sinr:
            best = res
    return best


@dataclass
class TrialCache:
    """Memo for designs shared by several schemes of the same trial."""

    entries: dict = field(default_factory=dict)

    def get(self, key, make):
        if key not in self.entries:
            self.entries[key] = make()
        return self.entries[key]


def _fork(rng: np.random.Generator) -> np.random.Generator:
    return copy.deepcopy(rng)


def _ao_options(cfg, opts: Optional[AoOptions]) -> AoOptions:
    if opts is not None:
        return opts
    return AoOptions(epsilon=cfg.epsilon, max_outer_iters=cfg.i_max, restarts=cfg.restarts)


def _clip_result(res: SchemeResult, ch, ceiling, sigma2) -> SchemeResult:
    phases = PhaseVector.clipped(res.final_phases.theta, ceiling)
    report = sinr_per_user(ch, res.final_precoder, phases, sigma2)
    return SchemeResult(Scheme.TEMP_NEGLECTING, phases, res.final_precoder, report,
                        res.outer_iters, list(res.trace))


def run_scheme(scheme: Scheme, ch: ChannelSet, cfg, lc_model: LcCellModel, T: float,
               opts: Optional[AoOptions], rng: np.random.Generator,
               cache: Optional[TrialCache] = None) -> SchemeResult:
    """Evaluate one scheme at temperature ``T`` (Kelvin).

    ``rng`` is not advanced; each design draws from its own copy.
    """
    scheme = Scheme.parse(scheme) if isinstance(scheme, str) else scheme
    opts = _ao_options(cfg, opts)
    cache = cache if cache is not None else TrialCache()
    power, sigma2 = _budget(cfg)
    if scheme is Scheme.WITHOUT_RIS:
        w = mrt_precoder(ch.h_d, power)
        return SchemeResult(scheme, None, w, sinr_per_user(ch, w, None, sigma2), 0, [])
    ceiling = phase_ceiling(lc_model, T)
    if not ceiling > 0:
        raise LcrisError(f"{scheme.value}: phase ceiling is zero at T={T:g} K")

    def unconstrained():
        return cache.get("cold-2pi", lambda: alternating_optimize(ch, cfg, TWO_PI, opts, _fork(rng)))

    def neglecting():
        return _clip_result(unconstrained(), ch, ceiling, sigma2)

    def proposed():
        def make():
            best = alternating_optimize(ch, cfg, ceiling, opts, _fork(rng))
            # the clipped full-range design is feasible here; seeding from it
            # makes the proposed design never worse than the benchmark
            if ceiling < TWO_PI:
                clipped = neglecting()
                warm = alternating_optimize(
                    ch, cfg, ceiling, dataclasses.replace(opts, restarts=0),
                    _fork(rng), warm_starts=[(clipped.final_phases.theta, clipped.final_precoder)])
                if warm.min_sinr > best.min_sinr:
                    best = warm
            return best
        return cache.get(("proposed", ceiling), make)

    try:
        if scheme is Scheme.RANDOM_PHASE:
            phases = PhaseVector.clipped(_fork(rng).random(ch.n_elements) * ceiling, ceiling)
            f = effective_user_channels(ch, phases)
            if getattr(cfg, "random_phase_precoder", "optimized") == "mrt":
                w = mrt_precoder(f, power)
            else:
                w = maxmin_precoder(f, sigma2, power, opts.precoder)
            return SchemeResult(scheme, phases, w, sinr_per_user(ch, w, phases, sigma2), 0, [])

        if scheme is Scheme.TEMP_NEGLECTING:
            return neglecting()

        if scheme is Scheme.PROPOSED:
            res = proposed()
            return SchemeResult(scheme, res.final_phases, res.final_precoder, res.report,
                                res.outer_iters, list(res.trace))

        # upper bound: full 2pi range, also seeded with the proposed design
        best = unconstrained()
        if ceiling < TWO_PI:
            prop = proposed()
            if not np.array_equal(prop.final_phases.theta, best.final_phases.theta):
                warm = alternating_optimize(
                    ch, cfg, TWO_PI, dataclasses.replace(opts, restarts=0),
                    _fork(rng), warm_starts=[(prop.final_phases.theta, prop.final_precoder)])
                if warm.min_sinr > best.min_sinr:
                    best = warm
        return SchemeResult(scheme, best.final_phases, best.final_precoder, best.report,
                            best.outer_iters, list(best.trace))
    except LcrisError as exc:
        raise type(exc)(f"{scheme.value}: {exc}") from exc
