"""Seeded Monte Carlo runner: trials, parameter sweeps, timing benchmarks, CSV.

Trial ``t`` of a run with seed ``s`` draws everything from
``RngStream(s, t)`` in a fixed order (channel, support, symbols, unit
noise), so two detectors run on the same ``(s, t)`` see the same channel,
support, symbols and noise, and trials can be farmed out to threads in
any order.
"""
from __future__ import annotations

import csv
import dataclasses
import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import analysis
from .detectors import cavi_detect, correlator_detect, exact_mixture_ml_detect, ml_ga_detect
from .errors import ArgumentError
from .model import (IndexVector, NoiseModel, ReceivedSlot, draw_channel, im_bit_count,
                    index_set_from_rank, qam_constellation, simulate_received_slot,
                    transmit_slot)
from .numerics import RngStream

__all__ = [
    "DETECTORS",
    "SWEEP_PARAMS",
    "CSV_COLUMNS",
    "ExperimentConfig",
    "Trial",
    "TrialResult",
    "SweepRow",
    "draw_trial",
    "detect",
    "run_trial",
    "run_trials",
    "run_paired",
    "run_sweep",
    "run_bench",
    "emit_csv",
    "read_csv",
    "wilson_interval",
    "analytic_p_ie",
]

DETECTORS = ("correlator", "ml_ga", "cavi", "exact_mixture")
SWEEP_PARAMS = ("mu", "iters", "snr_db", "M", "L", "K", "N", "order")
CSV_COLUMNS = (
    "detector", "N", "L", "K", "M", "snr_db", "order", "mu", "iters", "sweep_name",
    "sweep_value", "trials", "errors", "error_rate", "wilson_halfwidth", "analytic_p_ie",
    "mean_runtime_ns", "median_runtime_ns", "seed",
)
_INT_PARAMS = {"iters", "M", "L", "K", "N", "order"}


def normalize_detector(name: str) -> str:
    key = name.strip().lower().replace("-", "_")
    if key not in DETECTORS:
        raise ArgumentError(f"unknown detector {name!r}; choose from {', '.join(DETECTORS)}")
    return key


def normalize_sweep_name(name: str) -> str:
    key = name.strip().replace("-", "_")
    for p in SWEEP_PARAMS:
        if key.lower() == p.lower():
            return p
    raise ArgumentError(f"cannot sweep {name!r}; allowed: {', '.join(SWEEP_PARAMS)}")


@dataclass(frozen=True)
class ExperimentConfig:
    N: int = 10
    L: int = 20
    K: int = 2
    M: int = 4
    snr_db: float = 10.0
    order: int = 4
    detector: str = "cavi"
    mu: float = 0.5
    iters: int = 10
    trials: int = 1000
    seed: int = 0
    sweep: Optional[tuple] = None
    threads: int = 1
    all_subsets: bool = False
    mlga_method: str = "covariance"
    timing: bool = True

    def __post_init__(self):
        object.__setattr__(self, "detector", normalize_detector(self.detector))
        if self.trials < 1:
            raise ArgumentError(f"trials must be >= 1, got {self.trials}")
        if not (1 <= self.K <= self.L) or self.N < 1 or self.M < 1:
            raise ArgumentError(f"invalid dimensions N={self.N} L={self.L} K={self.K} M={self.M}")
        if self.threads < 1:
            raise ArgumentError(f"threads must be >= 1, got {self.threads}")
        if self.sweep is not None:
            name, values = self.sweep
            object.__setattr__(self, "sweep", (normalize_sweep_name(name), tuple(values)))

    def with_value(self, name: str, value) -> "ExperimentConfig":
        if name in _INT_PARAMS:
            value = int(value)
        else:
            value = float(value)
        return dataclasses.replace(self, **{name: value})

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel.from_db(self.snr_db)


@dataclass
class Trial:
    H: np.ndarray
    truth: IndexVector
    received: ReceivedSlot


@dataclass
class TrialResult:
    trial_id: int
    true_support: tuple
    estimated_support: tuple
    index_error: bool
    wall_time_ns: int


@dataclass
class SweepRow:
    detector: str
    N: int
    L: int
    K: int
    M: int
    snr_db: float
    order: int
    mu: float
    iters: int
    sweep_name: str
    sweep_value: str
    trials: int
    errors: int
    error_rate: float
    wilson_halfwidth: float
    analytic_p_ie: Optional[float]
    mean_runtime_ns: float
    median_runtime_ns: float
    seed: int

    def as_dict(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS}


def wilson_interval(errors: int, n: int, z: float = 1.959963984540054):
    """Wilson score interval ``(low, high)`` for a binomial proportion."""
    if n <= 0:
        raise ArgumentError("need at least one trial")
    p = errors / n
    den = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, centre - half), min(1.0, centre + half)


def draw_trial(cfg: ExperimentConfig, trial_id: int) -> Trial:
    rng = RngStream(cfg.seed, trial_id)
    H = draw_channel(rng, cfg.N, cfg.L)
    if cfg.all_subsets:
        n_sets = math.comb(cfg.L, cfg.K)
    else:
        n_sets = 1 << im_bit_count(cfg.L, cfg.K)
    truth = index_set_from_rank(int(rng.integers(n_sets)), cfg.L, cfg.K)
    slot = transmit_slot(truth, qam_constellation(cfg.order), cfg.M, rng)
    return Trial(H, truth, simulate_received_slot(H, slot, cfg.noise, rng))


def detect(detector: str, trial: Trial, cfg: ExperimentConfig):
    noise = cfg.noise
    if detector == "correlator":
        return correlator_detect(trial.H, trial.received, cfg.K)
    if detector == "ml_ga":
        return ml_ga_detect(trial.H, trial.received, cfg.K, noise, method=cfg.mlga_method)
    if detector == "cavi":
        return cavi_detect(trial.H, trial.received, cfg.K, noise, step_size=cfg.mu,
                           iterations=cfg.iters)
    if detector == "exact_mixture":
        return exact_mixture_ml_detect(trial.H, trial.received, cfg.K, noise,
                                       qam_constellation(cfg.order))
    raise ArgumentError(f"unknown detector {detector!r}")


def _timed(detector, trial, cfg):
    t0 = time.perf_counter_ns()
    res = detect(detector, trial, cfg)
    return res, time.perf_counter_ns() - t0


def run_trial(cfg: ExperimentConfig, trial_id: int, detector: Optional[str] = None) -> TrialResult:
    """Draw trial ``trial_id`` and run one detector on it; only the detector is timed."""
    detector = cfg.detector if detector is None else normalize_detector(detector)
    trial = draw_trial(cfg, trial_id)
    try:
        res, ns = _timed(detector, trial, cfg)
    except Exception as exc:
        raise type(exc)(f"trial {trial_id} (seed {cfg.seed}): {exc}") from exc
    return TrialResult(trial_id, trial.truth.labels(), res.estimate.labels(),
                       res.estimate != trial.truth, ns if cfg.timing else 0)


def _map_trials(fn, cfg: ExperimentConfig, ids):
    if cfg.threads == 1:
        return [fn(t) for t in ids]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(fn, ids, chunksize=max(1, len(ids) // (8 * cfg.threads))))


def run_trials(cfg: ExperimentConfig, first_trial: int = 0) -> list:
    ids = range(first_trial, first_trial + cfg.trials)
    return _map_trials(lambda t: run_trial(cfg, t), cfg, ids)


def run_paired(cfg: ExperimentConfig, detectors: Sequence[str], first_trial: int = 0) -> dict:
    """Run several detectors on identical trials.

    Returns ``{detector: list[TrialResult]}`` with results aligned by trial.
    """
    names = [normalize_detector(d) for d in detectors]

    def one(t):
        trial = draw_trial(cfg, t)
        out = []
        for name in names:
            res, ns = _timed(name, trial, cfg)
            out.append(TrialResult(t, trial.truth.labels(), res.estimate.labels(),
                                   res.estimate != trial.truth, ns if cfg.timing else 0))
        return out

    per_trial = _map_trials(one, cfg, range(first_trial, first_trial + cfg.trials))
    return {name: [row[i] for row in per_trial] for i, name in enumerate(names)}


def analytic_p_ie(cfg: ExperimentConfig) -> Optional[float]:
    """Large-system index-error estimate when it applies (ML-GA/CAVI, 4-QAM, K < L)."""
    if cfg.detector not in ("ml_ga", "cavi") or cfg.order != 4 or cfg.K >= cfg.L:
        return None
    a = analysis.AsymptoticParams.from_system(cfg.noise.snr, cfg.K, cfg.N)
    return analysis.approx_index_error(cfg.L, cfg.K, a, cfg.M).p_ie


def _fmt_value(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def _summarize(cfg, results, sweep_name, sweep_value, times=None) -> SweepRow:
    n = len(results)
    errors = sum(r.index_error for r in results)
    lo, hi = wilson_interval(errors, n)
    times = [r.wall_time_ns for r in results] if times is None else times
    return SweepRow(
        detector=cfg.detector, N=cfg.N, L=cfg.L, K=cfg.K, M=cfg.M, snr_db=float(cfg.snr_db),
        order=cfg.order, mu=float(cfg.mu), iters=cfg.iters, sweep_name=sweep_name,
        sweep_value=sweep_value, trials=n, errors=errors, error_rate=errors / n,
        wilson_halfwidth=(hi - lo) / 2, analytic_p_ie=analytic_p_ie(cfg),
        mean_runtime_ns=float(statistics.fmean(times)) if times else 0.0,
        median_runtime_ns=float(statistics.median(times)) if times else 0.0,
        seed=cfg.seed,
    )


def _points(cfg: ExperimentConfig):
    if cfg.sweep is None:
        return [(cfg, "", "")]
    name, values = cfg.sweep
    return [(cfg.with_value(name, v), name, _fmt_value(v)) for v in values]


def run_sweep(cfg: ExperimentConfig) -> list:
    """One :class:`SweepRow` per sweep value (a single row without a sweep)."""
    rows = []
    for point, name, value in _points(cfg):
        rows.append(_summarize(point, run_trials(point), name, value))
    return rows


def run_bench(cfg: ExperimentConfig, repeats: int = 3, warmup: int = 2) -> list:
    """Single-threaded detector timing per sweep point.

    For every point, ``cfg.trials`` instances are drawn and ``warmup``
    untimed calls are made.  Timing then runs in ``repeats`` rounds, each
    round visiting every point in turn, so slow drift of the machine is
    shared across points; the per-instance median over rounds feeds the
    row's mean and median.
    """
    if cfg.detector not in ("cavi", "ml_ga"):
        raise ArgumentError(f"bench supports cavi and ml_ga, got {cfg.detector}")
    if repeats < 1:
        raise ArgumentError(f"repeats must be >= 1, got {repeats}")
    points = _points(cfg)
    instances = [[draw_trial(point, t) for t in range(point.trials)] for point, _, _ in points]
    for (point, _, _), trials in zip(points, instances):
        for w in range(warmup):
            detect(point.detector, trials[w % len(trials)], point)
    samples = [[[] for _ in trials] for trials in instances]
    last = [[None] * len(trials) for trials in instances]
    for _ in range(repeats):
        for p, ((point, _, _), trials) in enumerate(zip(points, instances)):
            for t, trial in enumerate(trials):
                res, ns = _timed(point.detector, trial, point)
                samples[p][t].append(ns)
                last[p][t] = res
    rows = []
    for p, ((point, name, value), trials) in enumerate(zip(points, instances)):
        times = [statistics.median(s) if point.timing else 0 for s in samples[p]]
        results = [TrialResult(t, trial.truth.labels(), last[p][t].estimate.labels(),
                               last[p][t].estimate != trial.truth, int(times[t]))
                   for t, trial in enumerate(trials)]
        rows.append(_summarize(point, results, name, value, times))
    return rows


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(rows, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        d = row.as_dict()
        writer.writerow([_csv_cell(d[c]) for c in CSV_COLUMNS])


def emit_csv(rows: Sequence[SweepRow], path) -> None:
    """Write rows with the fixed column order; floats use ``repr`` (exact round trip).

    ``path`` may also be an open text stream.
    """
    if hasattr(path, "write"):
        _write_csv(rows, path)
        return
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            _write_csv(rows, fh)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(path) -> list:
    """Parse a file written by :func:`emit_csv` back into :class:`SweepRow` objects."""
    types = {f.name: f.type for f in dataclasses.fields(SweepRow)}
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ArgumentError(f"unexpected CSV header in {path}")
        for rec in reader:
            vals = {}
            for c in CSV_COLUMNS:
                raw, t = rec[c], types[c]
                if t == "int":
                    vals[c] = int(raw)
                elif t == "float":
                    vals[c] = float(raw)
                elif t == "Optional[float]":
                    vals[c] = float(raw) if raw else None
                else:
                    vals[c] = raw
            rows.append(SweepRow(**vals))
    return rows
