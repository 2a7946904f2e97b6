"""Monte Carlo driver and CSV output.

Random streams: trial ``t`` under base seed ``s`` uses Philox generators
seeded with ``SeedSequence(s, spawn_key=(t, 0))`` for the channel draw and
``SeedSequence(s, spawn_key=(t, 1))`` for algorithm randomness (phase
initializations), shared by all schemes. Sweeps reuse the same streams
for every swept value, so cells differ only in the swept parameter.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from lcris.channel import generate_channel_set
from lcris.config import ExperimentConfig
from lcris.errors import ConfigError, LcrisError
from lcris.schemes import ALL_SCHEMES, Scheme, TrialCache, run_scheme
from lcris.temperature import birefringence, celsius_to_kelvin, phase_ceiling, theta_max

log = logging.getLogger(__name__)

HEADER = ("scheme", "trial", "param", "param_value", "min_sinr_db", "outer_iters", "runtime_ms", "status")
SUMMARY_HEADER = ("scheme", "param", "param_value", "n", "mean_min_sinr_db", "std_min_sinr_db")
SUMMARY_MARK = "# summary"
SWEEP_PARAMS = ("ris_elements", "temperature_c", "power_dbm", "users")


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    trial: int
    param: str
    param_value: Optional[float]
    min_sinr_db: Optional[float]
    outer_iters: int
    runtime_ms: float
    status: str = "ok"

    def sort_key(self):
        pv = -math.inf if self.param_value is None else self.param_value
        return (pv, self.trial, self.scheme)


def trial_rngs(seed: int, trial: int):
    """(channel generator, algorithm generator) for one trial."""
    def gen(stream):
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(trial, stream))))
    return gen(0), gen(1)


def run_trial(cfg: ExperimentConfig, trial: int, schemes: Sequence[Scheme],
              param: str = "", param_value: Optional[float] = None) -> List[ResultRow]:
    ch_rng, alg_rng = trial_rngs(cfg.seed, trial)
    ch = generate_channel_set(cfg, ch_rng)
    lc = cfg.lc_model()
    cache = TrialCache()
    rows = []
    for scheme in schemes:
        t0 = time.perf_counter()
        try:
            res = run_scheme(scheme, ch, cfg, lc, cfg.temperature_k, None, alg_rng, cache)
            value, iters, status = res.min_sinr_db, res.outer_iters, "ok"
            if not math.isfinite(value):
                value, status = None, "non-finite SINR"
        except (LcrisError, ValueError, np.linalg.LinAlgError) as exc:
            log.warning("trial %d %s failed: %s", trial, scheme.value, exc)
            value, iters, status = None, 0, f"failed: {type(exc).__name__}: {exc}"
        ms = 1e3 * (time.perf_counter() - t0)
        rows.append(ResultRow(scheme.value, trial, param, param_value, value, iters, ms, status))
    return rows


def _cell(args):
    cfg, trial, schemes, param, value = args
    return run_trial(cfg, trial, schemes, param, value)


def _normalize_schemes(schemes) -> List[Scheme]:
    if schemes is None:
        return list(ALL_SCHEMES)
    out = []
    for s in schemes:
        s = Scheme.parse(s) if isinstance(s, str) else s
        if s not in out:
            out.append(s)
    if not out:
        raise ValueError("no schemes requested")
    return sorted(out, key=ALL_SCHEMES.index)


def _check_scale(cfg: ExperimentConfig, full_scale: bool):
    if cfg.is_large and not (full_scale or cfg.full_scale):
        raise ConfigError(
            f"M*N = {cfg.m_antennas * cfg.n_elements} is a full-scale run; "
            "pass --full-scale (or full_scale = true) to confirm"
        )


def _run_cells(cells, workers: int) -> List[ResultRow]:
    rows: List[ResultRow] = []
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk in pool.map(_cell, cells):
                rows.extend(chunk)
    else:
        for c in cells:
            rows.extend(_cell(c))
    rows.sort(key=ResultRow.sort_key)
    return rows


def collect_experiment(cfg: ExperimentConfig, schemes=None, workers: int = 1,
                       full_scale: bool = False) -> List[ResultRow]:
    _check_scale(cfg, full_scale)
    schemes = _normalize_schemes(schemes)
    cells = [(cfg, t, schemes, "", None) for t in range(cfg.trials)]
    return _run_cells(cells, workers)


def apply_param(cfg: ExperimentConfig, param: str, value) -> ExperimentConfig:
    if param == "ris_elements":
        n = int(value)
        side = math.isqrt(n)
        if n < 1 or side * side != n:
            raise ConfigError(f"ris_elements={value!r}: need a perfect square (square planar array)")
        return cfg.replace(ris_nx=side, ris_nz=side)
    if param == "temperature_c":
        return cfg.replace(temperature_c=float(value))
    if param == "power_dbm":
        return cfg.replace(power_dbm=float(value))
    if param == "users":
        if float(value) != int(value):
            raise ConfigError(f"users={value!r} is not an integer")
        return cfg.replace(users=int(value))
    raise ConfigError(f"unknown sweep parameter {param!r}; choose from {SWEEP_PARAMS}")


def collect_sweep(cfg: ExperimentConfig, param: str, values: Iterable, schemes=None,
                  workers: int = 1, full_scale: bool = False) -> List[ResultRow]:
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    schemes = _normalize_schemes(schemes)
    cells = []
    for v in values:
        sub = apply_param(cfg, param, v)
        _check_scale(sub, full_scale)
        cells += [(sub, t, schemes, param, float(v)) for t in range(sub.trials)]
    return _run_cells(cells, workers)


def _fmt(x) -> str:
    return "" if x is None else f"{x:.6g}"


def summarize(rows: Sequence[ResultRow]):
    """Mean and sample std of the *written* (rounded) min_sinr_db per scheme and swept value."""
    groups = {}
    for r in rows:
        key = (r.param_value if r.param_value is not None else -math.inf, ALL_SCHEMES.index(Scheme.parse(r.scheme)))
        g = groups.setdefault(key, (r.scheme, r.param, r.param_value, []))
        if r.min_sinr_db is not None:
            g[3].append(float(_fmt(r.min_sinr_db)))
    out = []
    for key in sorted(groups):
        scheme, param, pv, vals = groups[key]
        arr = np.asarray(vals)
        mean = float(arr.mean()) if arr.size else math.nan
        std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0 if arr.size else math.nan
        out.append((scheme, param, pv, arr.size, mean, std))
    return out


def render_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in rows:
        w.writerow([r.scheme, r.trial, r.param, _fmt(r.param_value), _fmt(r.min_sinr_db),
                    r.outer_iters, f"{r.runtime_ms:.6g}", r.status])
    buf.write("\n" + SUMMARY_MARK + "\n")
    w.writerow(SUMMARY_HEADER)
    for scheme, param, pv, n, mean, std in summarize(rows):
        w.writerow([scheme, param, _fmt(pv), n, f"{mean:.12g}", f"{std:.12g}"])
    return buf.getvalue()


def write_csv(rows: Sequence[ResultRow], out_path) -> Path:
    out_path = Path(out_path)
    try:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(render_csv(rows))
    except OSError as exc:
        raise LcrisError(f"cannot write {out_path}: {exc}") from None
    return out_path


def run_experiment(cfg: ExperimentConfig, schemes, out_path, workers: int = 1,
                   full_scale: bool = False) -> List[ResultRow]:
    rows = collect_experiment(cfg, schemes, workers, full_scale)
    write_csv(rows, out_path)
    return rows


def run_sweep(cfg: ExperimentConfig, param: str, values, schemes, out_path, workers: int = 1,
              full_scale: bool = False) -> List[ResultRow]:
    rows = collect_sweep(cfg, param, values, schemes, workers, full_scale)
    write_csv(rows, out_path)
    return rows


def read_result_csv(path):
    """Parse a result file back into (data rows, summary rows) as lists of dicts."""
    text = Path(path).read_text(encoding="utf-8")
    data_part, _, summary_part = text.partition("\n" + SUMMARY_MARK + "\n")
    data = list(csv.DictReader(io.StringIO(data_part.strip("\n") + "\n")))
    summary = list(csv.DictReader(io.StringIO(summary_part))) if summary_part else []
    return data, summary


def thermal_table(cfg: ExperimentConfig, step_c: float = 1.0):
    """Rows (T_celsius, theta_max_rad, theta_ceiling_rad, delta_n or None) from T_r to T_c."""
    lc = cfg.lc_model()
    t_lo = cfg.t_ref_k - 273.15
    t_hi = cfg.t_clear_k - 273.15
    temps = np.arange(math.ceil(t_lo), math.floor(t_hi) + 1, step_c, dtype=float)
    temps = np.unique(np.concatenate([[t_lo], temps, [t_hi]]))
    temps = temps[(temps >= t_lo) & (temps <= t_hi)]
    rows = []
    for t_c in temps:
        t_k = float(celsius_to_kelvin(t_c))
        t_k = min(t_k, cfg.t_clear_k)
        dn = float(birefringence(lc, t_k)) if lc.delta_n0 is not None else None
        rows.append((float(t_c), float(theta_max(lc, t_k)), phase_ceiling(lc, t_k), dn))
    return rows


def write_thermal_csv(cfg: ExperimentConfig, out_path) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("T_celsius", "theta_max_rad", "theta_ceiling_rad", "delta_n"))
    for t_c, tm, ceil_, dn in thermal_table(cfg):
        w.writerow([f"{t_c:.6g}", f"{tm:.10g}", f"{ceil_:.10g}", "" if dn is None else f"{dn:.10g}"])
    out_path = Path(out_path)
    try:
        out_path.write_text(buf.getvalue(), encoding="utf-8")
    except OSError as exc:
        raise LcrisError(f"cannot write {out_path}: {exc}") from None
    return out_path
