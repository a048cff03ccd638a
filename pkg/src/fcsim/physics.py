"""Closed-form coincidence-rate predictions and fit oracles.

Everything here is an exact expectation, used both as the prediction curves
the simulator is compared against and as independent oracles for the Monte
Carlo estimators. All curves are expressed as functions of the relative
analyzer angle phi; analyzer 1 sits at laboratory angle 0.

Conventions: a real analyzer transmits a photon polarized at angle phi to
its axis with probability e_par*cos^2(phi) + e_perp*sin^2(phi). The
quantum-mechanical and classical coincidence-ratio curves are both of the
form constant + amplitude*cos(2*phi); so are the exact expectations of the
three simulated models, which makes the scalar fits below closed-form.
"""

from __future__ import annotations

import math

from .config import ExperimentConfig, AnalyzerEfficiencies, acceptance_bounds
from .errors import InfeasibleFitError


def transmission_probability(phi: float, eff: AnalyzerEfficiencies) -> float:
    """Probability that a photon polarized at angle phi passes the analyzer.

    pi-periodic in phi; bounded by [e_perp, e_par] up to rounding.
    """
    c = math.cos(phi)
    s = math.sin(phi)
    return eff.e_par * c * c + eff.e_perp * s * s


def _sum_products(cfg: ExperimentConfig) -> tuple[float, float]:
    """(e1_par+e1_perp)(e2_par+e2_perp)/4 and (e1_par-e1_perp)(e2_par-e2_perp)/4."""
    a1, a2 = cfg.analyzer1, cfg.analyzer2
    plus = 0.25 * (a1.e_par + a1.e_perp) * (a2.e_par + a2.e_perp)
    minus = 0.25 * (a1.e_par - a1.e_perp) * (a2.e_par - a2.e_perp)
    return plus, minus


def normalization_constant(cfg: ExperimentConfig) -> float:
    """Constant dividing all simulated coincidence fractions.

    Equal to the product of the two acceptance-rejection bounds: e1_par*e2_par
    under max-probability normalization, 1 under unit normalization.
    """
    pmax1, pmax2 = acceptance_bounds(cfg)
    return pmax1 * pmax2


def qm_coincidence_ratio(phi: float, cfg: ExperimentConfig) -> float:
    """Quantum-mechanical coincidence ratio R_phi/R_0 at relative angle phi."""
    plus, minus = _sum_products(cfg)
    return plus + minus * cfg.f1 * math.cos(2.0 * phi)


def qm_constant(cfg: ExperimentConfig) -> float:
    plus, _ = _sum_products(cfg)
    return plus


def qm_amplitude(cfg: ExperimentConfig) -> float:
    _, minus = _sum_products(cfg)
    return minus * cfg.f1


def classical_coincidence_ratio(phi: float, cfg: ExperimentConfig) -> float:
    """Classical coincidence ratio for two photons sharing one random polarization.

    Same constant term as the QM curve but half the modulation amplitude and
    no acceptance-angle factor.
    """
    plus, minus = _sum_products(cfg)
    return plus + 0.5 * minus * math.cos(2.0 * phi)


def collapse_constant(cfg: ExperimentConfig) -> float:
    """Constant term of the collapse-model MC expectation (pre-f2)."""
    plus, _ = _sum_products(cfg)
    return plus / normalization_constant(cfg)


def collapse_amplitude(cfg: ExperimentConfig) -> float:
    """cos(2*phi) amplitude of the collapse-model MC expectation (pre-f2).

    Averaging the analyzer-1 transmission over uniform polarization gives
    (e1_par+e1_perp)/2; photon 2 is then measured at the analyzer-1 angle,
    contributing (e2_par+e2_perp)/2 + (e2_par-e2_perp)/2*cos(2*phi).
    """
    a1, a2 = cfg.analyzer1, cfg.analyzer2
    amp = 0.25 * (a1.e_par + a1.e_perp) * (a2.e_par - a2.e_perp)
    return amp / normalization_constant(cfg)


def collapse_expected_ratio(phi: float, cfg: ExperimentConfig) -> float:
    """Exact expectation of the collapse-model coincidence fraction (pre-f2)."""
    return collapse_constant(cfg) + collapse_amplitude(cfg) * math.cos(2.0 * phi)


def smeared_expected_ratio(phi: float, sigma: float, cfg: ExperimentConfig) -> float:
    """Exact expectation of the smeared-polarization coincidence fraction (pre-f2).

    A Gaussian spread of width sigma about the analyzer-1 angle suppresses the
    modulation amplitude by exp(-2*sigma^2): for beta ~ Normal(0, sigma^2),
    E[cos(2*(beta - phi))] = exp(-2*sigma^2)*cos(2*phi).
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    damping = math.exp(-2.0 * sigma * sigma)
    return collapse_constant(cfg) + collapse_amplitude(cfg) * damping * math.cos(2.0 * phi)


def local_realistic_expected_ratio(phi: float, cfg: ExperimentConfig) -> float:
    """Exact expectation of the local-realistic coincidence fraction (pre-f2).

    Two analyzers applied independently to one shared uniform polarization;
    the expectation reduces to the classical curve divided by the
    normalization constant.
    """
    return classical_coincidence_ratio(phi, cfg) / normalization_constant(cfg)


def matched_f2(cfg: ExperimentConfig) -> float:
    """f2 that makes the collapse/smeared constant term equal the QM constant.

    With this coefficient the smeared model can match the QM curve exactly
    (the width sigma then matches the modulation amplitude); under
    max-probability normalization it equals e1_par*e2_par.
    """
    return qm_constant(cfg) / collapse_constant(cfg)


def sigma_star(f2: float, cfg: ExperimentConfig) -> float:
    """Smearing width whose damped amplitude, scaled by f2, equals the QM amplitude.

    Solves f2 * collapse_amplitude * exp(-2*sigma^2) = qm_amplitude. This is
    the least-squares optimum of the smeared-vs-QM fit under equal weights
    because the constant and cos(2*phi) components are orthogonal over the
    default angle grid (sum of cos(2*phi_i) is zero).

    Raises InfeasibleFitError when the required amplitude ratio falls outside
    (0, 1] (no real width can damp the modulation to the target).
    """
    if f2 <= 0:
        raise InfeasibleFitError(f"f2 must be positive, got {f2}")
    denom = f2 * collapse_amplitude(cfg)
    if denom <= 0:
        raise InfeasibleFitError("collapse-model amplitude must be positive")
    ratio = qm_amplitude(cfg) / denom
    if not 0.0 < ratio <= 1.0:
        raise InfeasibleFitError(
            f"amplitude ratio {ratio:.6g} outside (0, 1]: no real smearing width exists"
        )
    return math.sqrt(-0.5 * math.log(ratio))


def model_expected_ratio(model: str, phi: float, cfg: ExperimentConfig, sigma: float | None = None) -> float:
    """Exact pre-f2 expectation for any of the three models (oracle dispatch)."""
    from .models import ModelKind  # local import to avoid a cycle

    kind = ModelKind(model)
    if kind is ModelKind.COLLAPSE:
        return collapse_expected_ratio(phi, cfg)
    if kind is ModelKind.LOCAL_REALISTIC:
        return local_realistic_expected_ratio(phi, cfg)
    eff_sigma = cfg.sigma if sigma is None else sigma
    if eff_sigma is None:
        raise ValueError("smeared model requires sigma")
    return smeared_expected_ratio(phi, eff_sigma, cfg)
