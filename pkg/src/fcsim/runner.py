"""Experiment-plan execution: E experiments of N pairs at each angle.

Every (model, angle_index, experiment_index) unit derives its own random
stream, so any subset of the plan can be re-run in isolation and match the
full run bit-for-bit. Experiments are embarrassingly parallel; results are
placed by index, making the aggregate independent of scheduling order and
worker count (FCSIM_WORKERS environment variable, default: all cores).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .config import ExperimentConfig
from .errors import ConfigError
from . import kernels
from .models import ModelKind, experiment_counts, resolve_sigma
from .streams import RNG_ALGORITHM, derive_stream

WORKERS_ENV = "FCSIM_WORKERS"


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get(WORKERS_ENV, "").strip()
        if env:
            workers = int(env)
        else:
            workers = os.cpu_count() or 1
    return max(1, int(workers))


@dataclass(frozen=True)
class ExperimentResult:
    """Counts from one experiment unit (diagnostic granularity)."""

    model: ModelKind
    angle_index: int
    experiment_index: int
    pairs: int
    coincidences: int
    singles1: int


@dataclass(frozen=True)
class AngleStats:
    """Coincidence-ratio statistics at one angle, f2 applied.

    ratio_mean is f2 times the mean over experiments of coincidences/pairs;
    ratio_se is the standard error of that mean (sample std dev across
    experiments divided by sqrt(experiments)), None for single-experiment
    batches. Plotted error bars are 3*ratio_se.
    """

    angle: float
    ratio_mean: float
    ratio_se: float | None
    experiments: int
    total_pairs: int
    total_coincidences: int


@dataclass(frozen=True)
class BatchResult:
    """All experiment counts for one model across the angle grid.

    Raw counts are kept per (angle, experiment) so fits can bootstrap over
    experiments and f2 can be re-applied without re-simulating. f2 scales
    ratios only, never the stored counts.
    """

    model: ModelKind
    config: ExperimentConfig
    sigma: float | None
    f2: float
    coincidences: np.ndarray  # (n_angles, n_experiments) int64
    singles1: np.ndarray  # (n_angles, n_experiments) int64
    rng_algorithm: str = RNG_ALGORITHM

    @property
    def master_seed(self) -> int:
        return self.config.master_seed

    @property
    def n_angles(self) -> int:
        return self.coincidences.shape[0]

    @property
    def n_experiments(self) -> int:
        return self.coincidences.shape[1]

    @property
    def single_experiment(self) -> bool:
        return self.n_experiments == 1

    def ratios(self) -> np.ndarray:
        """Per-experiment coincidence ratios with f2 applied, shape (angles, experiments)."""
        return self.f2 * self.coincidences / self.config.pairs_per_experiment

    def raw_means(self) -> np.ndarray:
        """Per-angle mean coincidence fraction with f2 NOT applied."""
        return self.coincidences.mean(axis=1) / self.config.pairs_per_experiment

    def raw_standard_errors(self) -> np.ndarray | None:
        """Per-angle standard error of the raw mean, None for single-experiment batches."""
        if self.single_experiment:
            return None
        frac = self.coincidences / self.config.pairs_per_experiment
        return frac.std(axis=1, ddof=1) / math.sqrt(self.n_experiments)

    def angle_stats(self) -> list[AngleStats]:
        ratios = self.ratios()
        means = ratios.mean(axis=1)
        if self.single_experiment:
            ses = [None] * self.n_angles
        else:
            ses = ratios.std(axis=1, ddof=1) / math.sqrt(self.n_experiments)
        out = []
        for i, phi in enumerate(self.config.angles):
            out.append(
                AngleStats(
                    angle=phi,
                    ratio_mean=float(means[i]),
                    ratio_se=None if ses[i] is None else float(ses[i]),
                    experiments=self.n_experiments,
                    total_pairs=self.n_experiments * self.config.pairs_per_experiment,
                    total_coincidences=int(self.coincidences[i].sum()),
                )
            )
        return out

    def with_f2(self, f2: float) -> "BatchResult":
        if not 0.0 < f2 <= 1.0:
            raise ValueError(f"f2 must be in (0, 1], got {f2}")
        return replace(self, f2=float(f2))


def run_experiment(
    model: ModelKind,
    angle_index: int,
    experiment_index: int,
    cfg: ExperimentConfig,
    sigma: float | None = None,
) -> ExperimentResult:
    """Simulate one experiment unit on its own derived stream."""
    model = ModelKind(model)
    if not 0 <= angle_index < len(cfg.angles):
        raise ValueError(f"angle_index {angle_index} outside configured grid")
    if experiment_index < 0:
        raise ValueError("experiment_index must be >= 0")
    stream = derive_stream(cfg.master_seed, model, angle_index, experiment_index)
    singles, coinc = experiment_counts(model, cfg.angles[angle_index], stream, cfg, sigma=sigma)
    return ExperimentResult(
        model=model,
        angle_index=angle_index,
        experiment_index=experiment_index,
        pairs=cfg.pairs_per_experiment,
        coincidences=coinc,
        singles1=singles,
    )


def _run_chunk(args) -> tuple[int, int, list[tuple[int, int]]]:
    """Worker task: experiments [lo, hi) of one model at one angle."""
    model_value, angle_index, lo, hi, cfg, sigma = args
    model = ModelKind(model_value)
    phi = cfg.angles[angle_index]
    counts = []
    for experiment_index in range(lo, hi):
        stream = derive_stream(cfg.master_seed, model, angle_index, experiment_index)
        singles, coinc = experiment_counts(model, phi, stream, cfg, sigma=sigma)
        counts.append((singles, coinc))
    return angle_index, lo, counts


def run_batch(
    model: ModelKind,
    cfg: ExperimentConfig,
    sigma: float | None = None,
    f2: float | None = None,
    workers: int | None = None,
    executor: ProcessPoolExecutor | None = None,
) -> BatchResult:
    """Run experiments x angles units and aggregate per-angle statistics.

    f2 defaults to cfg.f2, or 1.0 (raw mode) when neither is set. The result
    is bit-identical for any worker count: units are keyed by
    (angle, experiment) and every unit owns its derived stream. Callers
    issuing many batches may pass a shared executor to amortize pool setup.
    """
    model = ModelKind(model)
    eff_sigma = resolve_sigma(model, cfg, sigma)
    eff_f2 = 1.0 if f2 is None and cfg.f2 is None else float(cfg.f2 if f2 is None else f2)
    if not 0.0 < eff_f2 <= 1.0:
        raise ConfigError(f"f2 must be in (0, 1], got {eff_f2}", keys=["f2"])
    workers = resolve_workers(workers)

    n_angles = len(cfg.angles)
    n_exp = cfg.experiments
    coincidences = np.zeros((n_angles, n_exp), dtype=np.int64)
    singles1 = np.zeros((n_angles, n_exp), dtype=np.int64)

    if workers == 1 and executor is None:
        for angle_index in range(n_angles):
            _, _, counts = _run_chunk((model.value, angle_index, 0, n_exp, cfg, eff_sigma))
            for offset, (s, c) in enumerate(counts):
                singles1[angle_index, offset] = s
                coincidences[angle_index, offset] = c
    else:
        kernels.warm_up()  # compile once in the parent; forked workers inherit
        chunk = max(1, math.ceil(n_exp / (workers * 4)))
        tasks = [
            (model.value, angle_index, lo, min(lo + chunk, n_exp), cfg, eff_sigma)
            for angle_index in range(n_angles)
            for lo in range(0, n_exp, chunk)
        ]
        pool = executor if executor is not None else ProcessPoolExecutor(max_workers=workers)
        try:
            for angle_index, lo, counts in pool.map(_run_chunk, tasks):
                for offset, (s, c) in enumerate(counts):
                    singles1[angle_index, lo + offset] = s
                    coincidences[angle_index, lo + offset] = c
        finally:
            if executor is None:
                pool.shutdown()

    return BatchResult(
        model=model,
        config=cfg,
        sigma=eff_sigma,
        f2=eff_f2,
        coincidences=coincidences,
        singles1=singles1,
    )


def summarize(results: list[ExperimentResult], cfg: ExperimentConfig, f2: float | None = None) -> list[AngleStats]:
    """Aggregate loose experiment results into per-angle statistics.

    All results must share one model; experiments are grouped by angle
    index. f2 defaults to cfg.f2 or 1.0.
    """
    if not results:
        raise ValueError("no results to summarize")
    models = {r.model for r in results}
    if len(models) > 1:
        raise ValueError(f"mixed models in summarize input: {sorted(m.value for m in models)}")
    eff_f2 = 1.0 if f2 is None and cfg.f2 is None else float(cfg.f2 if f2 is None else f2)

    out = []
    by_angle: dict[int, list[ExperimentResult]] = {}
    for r in results:
        by_angle.setdefault(r.angle_index, []).append(r)
    for angle_index in sorted(by_angle):
        group = sorted(by_angle[angle_index], key=lambda r: r.experiment_index)
        ratios = np.array([eff_f2 * r.coincidences / r.pairs for r in group])
        n = len(group)
        se = float(ratios.std(ddof=1) / math.sqrt(n)) if n > 1 else None
        out.append(
            AngleStats(
                angle=cfg.angles[angle_index],
                ratio_mean=float(ratios.mean()),
                ratio_se=se,
                experiments=n,
                total_pairs=sum(r.pairs for r in group),
                total_coincidences=sum(r.coincidences for r in group),
            )
        )
    return out
