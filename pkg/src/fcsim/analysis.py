"""Headline comparisons: per-angle deviations from prediction curves and the
correlation-length estimate derived from the fitted smearing width."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import ExperimentConfig
from .runner import BatchResult

SMALL_BAND_MAX = math.pi / 8 + 1e-12
LARGE_BAND_MIN = 3 * math.pi / 8 - 1e-12


@dataclass(frozen=True)
class AngleDeviation:
    phi: float
    ratio_mean: float
    ratio_se: float | None
    curve_value: float
    deviation_pct: float | None  # 100*(model-curve)/curve; None when curve == 0
    z_score: float | None  # (model-curve)/se; None for single-experiment batches


@dataclass(frozen=True)
class DeviationReport:
    """Per-angle deviations plus min/max |percent deviation| bands.

    small_band covers phi <= pi/8, large_band covers phi >= 3*pi/8; a band
    is None when no angle falls in its range.
    """

    model: str
    rows: tuple[AngleDeviation, ...]
    small_band: tuple[float, float] | None
    large_band: tuple[float, float] | None


def _band(rows, lo=None, hi=None) -> tuple[float, float] | None:
    values = [
        abs(r.deviation_pct)
        for r in rows
        if r.deviation_pct is not None
        and (lo is None or r.phi >= lo)
        and (hi is None or r.phi <= hi)
    ]
    if not values:
        return None
    return min(values), max(values)


def deviation_report(batch: BatchResult, curve) -> DeviationReport:
    """Compare a batch against a prediction curve (callable phi -> ratio)."""
    rows = []
    for s in batch.angle_stats():
        c = curve(s.angle)
        diff = s.ratio_mean - c
        pct = None if c == 0.0 else 100.0 * diff / c
        if s.ratio_se is None:
            z = None
        elif s.ratio_se == 0.0:
            z = math.copysign(math.inf, diff) if diff != 0.0 else 0.0
        else:
            z = diff / s.ratio_se
        rows.append(
            AngleDeviation(
                phi=s.angle,
                ratio_mean=s.ratio_mean,
                ratio_se=s.ratio_se,
                curve_value=c,
                deviation_pct=pct,
                z_score=z,
            )
        )
    return DeviationReport(
        model=batch.model.value,
        rows=tuple(rows),
        small_band=_band(rows, hi=SMALL_BAND_MAX),
        large_band=_band(rows, lo=LARGE_BAND_MIN),
    )


@dataclass(frozen=True)
class CorrelationLength:
    """Polarization-angle uncertainty converted to a length scale.

    r_c = sigma times the mean photon wavelength. The uncertainty combines,
    in quadrature, the sigma fit error propagated through the mean
    wavelength and the wavelength spread (half the difference of the two
    cascade wavelengths) scaled by sigma; the spread term dominates.
    """

    r_c_cm: float
    uncertainty_cm: float
    sigma: float
    sigma_err: float
    wavelength1_cm: float
    wavelength2_cm: float


def correlation_length(sigma: float, sigma_err: float, cfg: ExperimentConfig) -> CorrelationLength:
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    lam1, lam2 = cfg.wavelength1_cm, cfg.wavelength2_cm
    mean_wavelength = 0.5 * (lam1 + lam2)
    spread = 0.5 * abs(lam1 - lam2)
    r_c = sigma * mean_wavelength
    err = math.hypot(sigma_err * mean_wavelength, sigma * spread)
    return CorrelationLength(
        r_c_cm=r_c,
        uncertainty_cm=err,
        sigma=sigma,
        sigma_err=sigma_err,
        wavelength1_cm=lam1,
        wavelength2_cm=lam2,
    )
