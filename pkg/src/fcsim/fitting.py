"""Scalar fits against the QM curve and the model-comparison statistic.

The collapse-model fit determines the detector-acceptance coefficient f2
(the single free parameter); the smeared-model fit determines the Gaussian
width sigma at fixed f2. Both model curves are linear in the fitted
quantity (f2 directly; sigma through the damping factor exp(-2*sigma^2)),
so weighted least squares is closed-form; sigma's mc mode instead minimizes
against freshly simulated batches with a golden-section search.

Weighting modes for the per-angle residuals:
  "model-variance"    w = 1/q_i  (Poisson-style, variance proportional to
                      the predicted ratio; reproduces the reported f2)
  "inverse-variance"  w = 1/SE_i^2 from the batch (SE of the per-angle mean)
  "unweighted"        w = 1
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .errors import InfeasibleFitError, WeightingError
from .models import ModelKind
from .physics import (
    collapse_amplitude,
    collapse_constant,
    qm_amplitude,
    qm_coincidence_ratio,
    sigma_star,
)
from .runner import BatchResult, resolve_workers, run_batch
from .streams import derive_aux_stream

WEIGHTINGS = ("model-variance", "inverse-variance", "unweighted")
DEFAULT_BOOTSTRAP_REPLICATES = 199


@dataclass(frozen=True)
class FitResult:
    parameter: str
    value: float
    uncertainty: float | None
    objective: float
    method: str


def _curve_values(cfg: ExperimentConfig) -> np.ndarray:
    return np.array([qm_coincidence_ratio(phi, cfg) for phi in cfg.angles])


def _weights(weighting: str, q: np.ndarray, se: np.ndarray | None) -> np.ndarray:
    if weighting not in WEIGHTINGS:
        raise ValueError(f"unknown weighting {weighting!r}; expected one of {WEIGHTINGS}")
    if weighting == "model-variance":
        return 1.0 / q
    if weighting == "unweighted":
        return np.ones_like(q)
    if se is None or np.any(se <= 0.0):
        raise WeightingError(
            "inverse-variance weighting needs a positive standard error at every angle "
            "(run at least 2 experiments, or choose another weighting)"
        )
    return 1.0 / se**2


def _resample_indices(rng: np.random.Generator, n_angles: int, n_exp: int, replicates: int) -> np.ndarray:
    return rng.integers(0, n_exp, size=(replicates, n_angles, n_exp))


def _ivw_weights(batch: BatchResult, q: np.ndarray, f2: float) -> np.ndarray:
    se = batch.raw_standard_errors()
    return _weights("inverse-variance", q, None if se is None else se * f2)


def fit_f2(
    batch: BatchResult,
    cfg: ExperimentConfig | None = None,
    weighting: str = "model-variance",
    bootstrap_replicates: int = DEFAULT_BOOTSTRAP_REPLICATES,
) -> FitResult:
    """Fit the acceptance coefficient scaling the collapse model onto the QM curve.

    The batch must be a raw (f2 unapplied) collapse-model batch. The
    weighted least-squares optimum for a scalar multiplier is
    sum(w*m*q)/sum(w*m^2); uncertainty comes from bootstrap resampling of
    experiments within each angle on a dedicated labeled stream.
    """
    cfg = batch.config if cfg is None else cfg
    if batch.model is not ModelKind.COLLAPSE:
        raise ValueError(f"f2 is fitted on a collapse-model batch, got {batch.model}")
    if batch.f2 != 1.0:
        raise ValueError("f2 fit requires a raw batch (f2 unapplied); got f2=%r" % batch.f2)

    q = _curve_values(cfg)
    m = batch.raw_means()
    se = batch.raw_standard_errors()
    w = _weights(weighting, q, se)

    denom = float((w * m * m).sum())
    if denom <= 0.0:
        raise InfeasibleFitError("all per-angle means are zero; cannot fit a scale factor")
    value = float((w * m * q).sum() / denom)
    objective = float((w * (value * m - q) ** 2).sum())

    uncertainty = None
    if bootstrap_replicates >= 2 and not batch.single_experiment:
        rng = derive_aux_stream(cfg.master_seed, "bootstrap-f2").generator
        frac = batch.coincidences / cfg.pairs_per_experiment
        idx = _resample_indices(rng, batch.n_angles, batch.n_experiments, bootstrap_replicates)
        rows = np.arange(batch.n_angles)[None, :, None]
        samples = frac[rows, idx]  # (replicates, angles, experiments)
        m_b = samples.mean(axis=2)
        if weighting == "inverse-variance":
            se_b = samples.std(axis=2, ddof=1) / math.sqrt(batch.n_experiments)
            w_b = 1.0 / np.clip(se_b, 1e-300, None) ** 2
        else:
            w_b = np.broadcast_to(w, m_b.shape)
        values = (w_b * m_b * q).sum(axis=1) / (w_b * m_b * m_b).sum(axis=1)
        uncertainty = float(values.std(ddof=1))

    return FitResult(
        parameter="f2",
        value=value,
        uncertainty=uncertainty,
        objective=objective,
        method=f"weighted-least-squares({weighting}); bootstrap({bootstrap_replicates})",
    )


def golden_section(fn, lo: float, hi: float, tol: float = 1e-6, max_iter: int = 200) -> tuple[float, float]:
    """Minimize a unimodal function on [lo, hi]; returns (argmin, min)."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    x = 0.5 * (a + b)
    return x, fn(x)


def _sigma_from_damping(x: float) -> float:
    x = min(max(x, 1e-12), 1.0)
    return math.sqrt(-0.5 * math.log(x))


def fit_sigma(
    cfg: ExperimentConfig,
    f2: float,
    mode: str = "closed-form",
    weighting: str = "model-variance",
    f2_err: float | None = None,
    bootstrap_replicates: int = DEFAULT_BOOTSTRAP_REPLICATES,
    mc_experiments: int | None = None,
    workers: int | None = None,
    search_tol: float = 2e-4,
) -> FitResult:
    """Fit the smearing width that best matches the QM curve at fixed f2.

    closed-form mode evaluates the exact model family: the optimum is the
    width whose damped amplitude matches the QM amplitude (constant and
    cosine components are orthogonal over the angle grid); uncertainty is
    the delta-method propagation of f2_err. mc mode golden-section-searches
    sigma in [0, 1], simulating a fresh batch per candidate (streams are
    shared across candidates, so the objective is a deterministic function
    of sigma); uncertainty is a bootstrap over the final batch's
    experiments, inverted through the amplitude relation.
    """
    if f2 <= 0:
        raise InfeasibleFitError(f"f2 must be positive, got {f2}")
    if mode not in ("closed-form", "mc"):
        raise ValueError(f"unknown mode {mode!r}; expected 'closed-form' or 'mc'")

    q = _curve_values(cfg)
    cos2 = np.cos(2.0 * np.array(cfg.angles))
    a_model = collapse_constant(cfg)
    b_model = collapse_amplitude(cfg)

    if mode == "closed-form":
        value = sigma_star(f2, cfg)
        if value > 1.0:
            raise InfeasibleFitError(
                f"best-fit width {value:.4f} falls outside the search bracket [0, 1]"
            )
        model = f2 * (a_model + b_model * math.exp(-2.0 * value * value) * cos2)
        objective = float(((model - q) ** 2).sum())
        uncertainty = 0.0
        if f2_err is not None and value > 0.0:
            uncertainty = abs(f2_err) / (4.0 * value * f2)
        return FitResult(
            parameter="sigma",
            value=value,
            uncertainty=uncertainty,
            objective=objective,
            method="closed-form(amplitude-match); delta(f2_err)",
        )

    run_cfg = cfg if mc_experiments is None else cfg.replace(experiments=int(mc_experiments))
    weight_ref = _weights(weighting, q, None) if weighting != "inverse-variance" else None
    cache: dict[float, tuple[float, BatchResult]] = {}
    n_workers = resolve_workers(workers)
    executor = ProcessPoolExecutor(max_workers=n_workers) if n_workers > 1 else None

    def objective_at(sigma: float) -> float:
        sigma = float(sigma)
        if sigma in cache:
            return cache[sigma][0]
        batch = run_batch(
            ModelKind.SMEARED, run_cfg, sigma=sigma, f2=1.0, workers=n_workers, executor=executor
        )
        m = batch.raw_means()
        w = weight_ref if weight_ref is not None else _ivw_weights(batch, q, f2)
        val = float((w * (f2 * m - q) ** 2).sum())
        cache[sigma] = (val, batch)
        return val

    try:
        value, objective = golden_section(objective_at, 0.0, 1.0, tol=search_tol)
        if value > 1.0 - 2 * search_tol:
            raise InfeasibleFitError("no interior minimum: search ended at the upper bracket edge")
        objective_at(value)
    finally:
        if executor is not None:
            executor.shutdown()

    # Bootstrap: resample the final batch's experiments, re-solve the
    # damping factor by weighted linear inversion, map back to sigma.
    batch = cache[float(value)][1]
    uncertainty = None
    if bootstrap_replicates >= 2 and not batch.single_experiment:
        w = weight_ref if weight_ref is not None else _ivw_weights(batch, q, f2)
        d = f2 * b_model * cos2
        rng = derive_aux_stream(cfg.master_seed, "bootstrap-sigma").generator
        frac = batch.coincidences / run_cfg.pairs_per_experiment
        idx = _resample_indices(rng, batch.n_angles, batch.n_experiments, bootstrap_replicates)
        rows = np.arange(batch.n_angles)[None, :, None]
        m_b = frac[rows, idx].mean(axis=2)
        resid = f2 * m_b - f2 * a_model
        x_b = (w * d * resid).sum(axis=1) / (w * d * d).sum()
        sig_b = np.array([_sigma_from_damping(x) for x in x_b])
        uncertainty = float(sig_b.std(ddof=1))

    return FitResult(
        parameter="sigma",
        value=float(value),
        uncertainty=uncertainty,
        objective=float(objective),
        method=(
            f"golden-section(mc, tol={search_tol}, weights={weighting}); "
            f"bootstrap({bootstrap_replicates}, amplitude-inversion)"
        ),
    )


def mean_chi_squared(batch: BatchResult, curve) -> float:
    """Pearson-style mean over angles: mean of (ratio_mean - curve)^2 / curve.

    curve is a callable phi -> predicted ratio. Requires at least two
    experiments per angle and strictly positive curve values.
    """
    if batch.n_experiments < 2:
        raise ValueError("mean_chi_squared requires >= 2 experiments per angle")
    stats = batch.angle_stats()
    total = 0.0
    for s in stats:
        c = curve(s.angle)
        if c <= 0.0:
            raise ValueError(f"curve value {c} at phi={s.angle} makes the statistic undefined")
        total += (s.ratio_mean - c) ** 2 / c
    return total / len(stats)
