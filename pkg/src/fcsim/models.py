"""The three photon-pair models: collapse, local-realistic, smeared.

Each model turns (relative analyzer angle, random stream) into transmission
outcomes for one photon pair. Analyzer 1 is fixed at laboratory angle 0 and
analyzer 2 sits at the relative angle phi; only the relative angle matters
because photon 1's polarization prior is uniform.

simulate_pair is the single-pair reference implementation with the narrated
per-pair draw order. experiment_counts is the batch path: it generates the
random blocks for a whole experiment up front (fixed layout: polarizations,
acceptance-1 uniforms, smeared polarizations, acceptance-2 uniforms) and
hands them to the counting kernels, so the numba and numpy backends consume
identical numbers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .config import ExperimentConfig, acceptance_bounds
from .errors import ConfigError
from . import kernels
from .physics import transmission_probability
from .streams import RandomStream, accept, gaussian_angle, uniform_angle


class ModelKind(enum.Enum):
    COLLAPSE = "collapse"
    LOCAL_REALISTIC = "local-realistic"
    SMEARED = "smeared"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class PairOutcome:
    """Outcome of one simulated photon pair.

    pol2 is the effective polarization photon 2 was measured with; it is
    None for collapse/smeared pairs whose photon 1 was absorbed (the
    collapse narrative only defines photon 2's polarization after photon 1
    is measured). passed2 implies passed1 for those models; the
    local-realistic model evaluates both photons independently.
    """

    pol1: float
    pol2: float | None
    passed1: bool
    passed2: bool

    @property
    def coincidence(self) -> bool:
        return self.passed1 and self.passed2


def resolve_sigma(model: ModelKind, cfg: ExperimentConfig, sigma: float | None = None) -> float | None:
    """Effective smearing width for a run (argument wins over config)."""
    if model is not ModelKind.SMEARED:
        return None
    eff = cfg.sigma if sigma is None else sigma
    if eff is None:
        raise ConfigError("smeared model requires sigma (config key or argument)", keys=["sigma"])
    if eff < 0:
        raise ConfigError(f"sigma must be >= 0, got {eff}", keys=["sigma"])
    return float(eff)


def simulate_pair(
    model: ModelKind,
    phi: float,
    stream: RandomStream,
    cfg: ExperimentConfig,
    sigma: float | None = None,
) -> PairOutcome:
    """Simulate one photon pair, consuming the stream in per-pair order.

    Draw order: photon-1 polarization, acceptance-1 uniform, then (only when
    needed) photon-2 polarization and acceptance-2 uniform.
    """
    model = ModelKind(model)
    width = resolve_sigma(model, cfg, sigma)
    pmax1, pmax2 = acceptance_bounds(cfg)
    pol1 = float(uniform_angle(stream))
    p1 = transmission_probability(pol1, cfg.analyzer1)

    if model is ModelKind.LOCAL_REALISTIC:
        pol2 = pol1
        passed1 = accept(stream, p1, pmax1)
        passed2 = accept(stream, transmission_probability(pol2 - phi, cfg.analyzer2), pmax2)
        return PairOutcome(pol1, pol2, passed1, passed2)

    passed1 = accept(stream, p1, pmax1)
    if not passed1:
        return PairOutcome(pol1, None, False, False)
    pol2 = 0.0 if model is ModelKind.COLLAPSE else float(gaussian_angle(stream, 0.0, width))
    passed2 = accept(stream, transmission_probability(pol2 - phi, cfg.analyzer2), pmax2)
    return PairOutcome(pol1, pol2, passed1, passed2)


def experiment_counts(
    model: ModelKind,
    phi: float,
    stream: RandomStream,
    cfg: ExperimentConfig,
    sigma: float | None = None,
    pairs: int | None = None,
) -> tuple[int, int]:
    """(photon-1 transmissions, coincidences) over one experiment's pairs.

    Block draw order per experiment: pol1 uniforms, acceptance-1 uniforms,
    smeared pol2 Gaussians (only when sigma > 0), acceptance-2 uniforms.
    Acceptance-2 draws for pairs whose photon 1 failed are generated and
    ignored; they are independent, so the outcome distribution is unchanged
    while the layout stays fixed-shape and backend-independent.
    """
    model = ModelKind(model)
    n = cfg.pairs_per_experiment if pairs is None else int(pairs)
    if n < 0:
        raise ValueError(f"pairs must be >= 0, got {n}")
    pmax1, pmax2 = acceptance_bounds(cfg)
    a1, a2 = cfg.analyzer1, cfg.analyzer2

    pol1 = uniform_angle(stream, size=n)
    u1 = stream.generator.random(n)

    if model is ModelKind.SMEARED:
        width = resolve_sigma(model, cfg, sigma)
        if width > 0.0:
            pol2 = gaussian_angle(stream, 0.0, width, size=n)
            u2 = stream.generator.random(n)
            return kernels.smeared_counts(
                pol1, u1, pol2, u2, phi,
                a1.e_par, a1.e_perp, a2.e_par, a2.e_perp, pmax1, pmax2,
            )
        # zero width degenerates to the collapse layout (no Gaussian block)
        model = ModelKind.COLLAPSE

    u2 = stream.generator.random(n)
    if model is ModelKind.COLLAPSE:
        c = math.cos(phi)
        p2 = a2.e_perp + (a2.e_par - a2.e_perp) * (c * c)
        return kernels.collapse_counts(pol1, u1, u2, p2, a1.e_par, a1.e_perp, pmax1, pmax2)
    return kernels.local_counts(
        pol1, u1, u2, phi, a1.e_par, a1.e_perp, a2.e_par, a2.e_perp, pmax1, pmax2
    )
