"""Experiment configuration: analyzer efficiencies, angle grid, run sizes, seeding.

The default values describe the tabletop cascade-photon coincidence setup
this package simulates: two real polarization analyzers with measured
parallel/perpendicular transmission efficiencies, nine relative analyzer
angles spanning 0..pi/2, and the photon wavelengths of the calcium cascade
(5513 A and 4227 A).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ConfigError

NORMALIZATIONS = ("max-probability", "unit")

# Replication defaults (the published experiment's measured values).
DEFAULT_E1_PAR = 0.97
DEFAULT_E1_PERP = 0.038
DEFAULT_E2_PAR = 0.96
DEFAULT_E2_PERP = 0.037
DEFAULT_F1 = 0.9876
DEFAULT_ANGLES = tuple(k * math.pi / 16 for k in range(9))
DEFAULT_WAVELENGTH1_CM = 5.513e-5
DEFAULT_WAVELENGTH2_CM = 4.227e-5
DEFAULT_PAIRS_PER_EXPERIMENT = 100_000
DEFAULT_EXPERIMENTS = 500
DEFAULT_MASTER_SEED = 1972
DEFAULT_NORMALIZATION = "max-probability"

#: Flat config-document keys, in canonical serialization order.
CONFIG_KEYS = (
    "e1_par",
    "e1_perp",
    "e2_par",
    "e2_perp",
    "f1",
    "f2",
    "sigma",
    "angles",
    "pairs_per_experiment",
    "experiments",
    "master_seed",
    "normalization",
    "wavelength1_cm",
    "wavelength2_cm",
)


@dataclass(frozen=True)
class AnalyzerEfficiencies:
    """Transmission probabilities of one analyzer.

    e_par: probability of transmitting a photon polarized parallel to the
    analyzer axis; e_perp: leakage probability for perpendicular
    polarization. A physical analyzer has 0 <= e_perp < e_par <= 1.
    """

    e_par: float
    e_perp: float


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of a simulation campaign.

    f2 is the detector-acceptance coefficient multiplying simulated
    coincidence ratios; it is optional because the replication pipeline
    fits it. sigma is the smeared-polarization width and is only consumed
    by the smeared model.
    """

    analyzer1: AnalyzerEfficiencies = AnalyzerEfficiencies(DEFAULT_E1_PAR, DEFAULT_E1_PERP)
    analyzer2: AnalyzerEfficiencies = AnalyzerEfficiencies(DEFAULT_E2_PAR, DEFAULT_E2_PERP)
    f1: float = DEFAULT_F1
    f2: float | None = None
    sigma: float | None = None
    angles: tuple[float, ...] = DEFAULT_ANGLES
    pairs_per_experiment: int = DEFAULT_PAIRS_PER_EXPERIMENT
    experiments: int = DEFAULT_EXPERIMENTS
    master_seed: int = DEFAULT_MASTER_SEED
    normalization: str = DEFAULT_NORMALIZATION
    wavelength1_cm: float = DEFAULT_WAVELENGTH1_CM
    wavelength2_cm: float = DEFAULT_WAVELENGTH2_CM

    def __post_init__(self):
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        validate_config(self)

    def to_dict(self) -> dict:
        """Flat key/value form using the documented config-document keys."""
        return {
            "e1_par": self.analyzer1.e_par,
            "e1_perp": self.analyzer1.e_perp,
            "e2_par": self.analyzer2.e_par,
            "e2_perp": self.analyzer2.e_perp,
            "f1": self.f1,
            "f2": self.f2,
            "sigma": self.sigma,
            "angles": list(self.angles),
            "pairs_per_experiment": self.pairs_per_experiment,
            "experiments": self.experiments,
            "master_seed": self.master_seed,
            "normalization": self.normalization,
            "wavelength1_cm": self.wavelength1_cm,
            "wavelength2_cm": self.wavelength2_cm,
        }

    def replace(self, **kwargs) -> "ExperimentConfig":
        return replace(self, **kwargs)


def default_config() -> ExperimentConfig:
    """The experiment-replication configuration."""
    return ExperimentConfig()


def _check_number(name, value, errors, allow_none=False):
    if value is None:
        if not allow_none:
            errors.append((name, "is required"))
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append((name, f"must be a number, got {value!r}"))
        return None
    return float(value)


def _check_count(name, value, errors):
    if isinstance(value, bool) or not isinstance(value, int):
        errors.append((name, f"must be an integer, got {value!r}"))
        return None
    return value


def validate_config(cfg: ExperimentConfig) -> None:
    """Raise ConfigError (with offending key names) on any invariant violation."""
    errors: list[tuple[str, str]] = []

    for label, eff in (("e1", cfg.analyzer1), ("e2", cfg.analyzer2)):
        par = _check_number(f"{label}_par", eff.e_par, errors)
        perp = _check_number(f"{label}_perp", eff.e_perp, errors)
        if par is None or perp is None:
            continue
        if not (0.0 <= perp < par <= 1.0):
            errors.append((f"{label}_par", "efficiencies must satisfy 0 <= e_perp < e_par <= 1"))
            errors.append((f"{label}_perp", "efficiencies must satisfy 0 <= e_perp < e_par <= 1"))

    f1 = _check_number("f1", cfg.f1, errors)
    if f1 is not None and not (0.0 < f1 <= 1.0):
        errors.append(("f1", f"must be in (0, 1], got {cfg.f1!r}"))
    if cfg.f2 is not None:
        f2 = _check_number("f2", cfg.f2, errors)
        if f2 is not None and not (0.0 < f2 <= 1.0):
            errors.append(("f2", f"must be in (0, 1], got {cfg.f2!r}"))
    if cfg.sigma is not None:
        sig = _check_number("sigma", cfg.sigma, errors)
        if sig is not None and sig < 0.0:
            errors.append(("sigma", f"must be >= 0, got {cfg.sigma!r}"))

    if not cfg.angles:
        errors.append(("angles", "must contain at least one angle"))
    else:
        if any(not (0.0 <= a <= math.pi / 2 + 1e-12) for a in cfg.angles):
            errors.append(("angles", "all angles must lie in [0, pi/2]"))
        if any(b <= a for a, b in zip(cfg.angles, cfg.angles[1:])):
            errors.append(("angles", "angles must be strictly increasing"))

    pairs = _check_count("pairs_per_experiment", cfg.pairs_per_experiment, errors)
    if pairs is not None and pairs < 1:
        errors.append(("pairs_per_experiment", f"must be >= 1, got {pairs}"))
    exps = _check_count("experiments", cfg.experiments, errors)
    if exps is not None and exps < 1:
        errors.append(("experiments", f"must be >= 1, got {exps}"))

    seed = _check_count("master_seed", cfg.master_seed, errors)
    if seed is not None and not (0 <= seed < 2**64):
        errors.append(("master_seed", f"must be a 64-bit non-negative integer, got {seed}"))

    if cfg.normalization not in NORMALIZATIONS:
        errors.append(("normalization", f"must be one of {NORMALIZATIONS}, got {cfg.normalization!r}"))

    for key in ("wavelength1_cm", "wavelength2_cm"):
        lam = _check_number(key, getattr(cfg, key), errors)
        if lam is not None and lam <= 0.0:
            errors.append((key, f"must be > 0, got {lam}"))

    if errors:
        detail = "; ".join(f"{k}: {msg}" for k, msg in errors)
        raise ConfigError(f"invalid configuration: {detail}", keys=[k for k, _ in errors])


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build a validated config from a flat key/value mapping.

    Missing keys take the replication defaults; unknown keys are an
    error so typos cannot silently fall back to defaults.
    """
    if not isinstance(doc, dict):
        raise ConfigError(f"config document must be a mapping, got {type(doc).__name__}")
    unknown = sorted(set(doc) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}", keys=unknown)

    base = default_config().to_dict()
    merged = dict(base)
    merged.update({k: v for k, v in doc.items() if v is not None or k in ("f2", "sigma")})

    angles = merged["angles"]
    if not isinstance(angles, (list, tuple)) or not all(
        isinstance(a, (int, float)) and not isinstance(a, bool) for a in angles
    ):
        raise ConfigError("angles: must be a list of numbers", keys=["angles"])

    return ExperimentConfig(
        analyzer1=AnalyzerEfficiencies(merged["e1_par"], merged["e1_perp"]),
        analyzer2=AnalyzerEfficiencies(merged["e2_par"], merged["e2_perp"]),
        f1=merged["f1"],
        f2=merged["f2"],
        sigma=merged["sigma"],
        angles=tuple(float(a) for a in angles),
        pairs_per_experiment=merged["pairs_per_experiment"],
        experiments=merged["experiments"],
        master_seed=merged["master_seed"],
        normalization=merged["normalization"],
        wavelength1_cm=merged["wavelength1_cm"],
        wavelength2_cm=merged["wavelength2_cm"],
    )


def acceptance_bounds(cfg: ExperimentConfig) -> tuple[float, float]:
    """Acceptance-rejection upper bounds (p_max) for analyzer 1 and 2.

    "max-probability" draws the comparison variate on [0, e_par) of the
    analyzer in question (the maximum of the transmission probability over
    polarization); "unit" draws on [0, 1). The choice rescales all
    coincidence ratios by a constant, which the f2 coefficient absorbs.
    """
    if cfg.normalization == "max-probability":
        return cfg.analyzer1.e_par, cfg.analyzer2.e_par
    return 1.0, 1.0
