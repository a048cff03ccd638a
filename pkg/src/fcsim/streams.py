"""Deterministic, splittable random streams and the sampling primitives.

Every experiment unit owns one stream derived from
(master_seed, model, angle_index, experiment_index) through numpy's
SeedSequence hashing into a Philox counter-based generator. Identical
labels reproduce identical sample sequences on any platform and at any
worker count; distinct labels give statistically independent streams.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RNG_ALGORITHM = "philox4x64 (numpy)"

#: Stable stream-domain codes. Model codes must never be reordered:
#: they are part of the reproducibility contract baked into manifests.
MODEL_STREAM_CODES = {
    "collapse": 1,
    "local-realistic": 2,
    "smeared": 3,
}
AUX_STREAM_CODES = {
    "bootstrap-f2": 1001,
    "bootstrap-sigma": 1002,
}


@dataclass
class RandomStream:
    """A labeled, single-owner random stream.

    The label records provenance (seed + derivation indices); the generator
    carries the opaque state. One stream must be consumed by exactly one
    task - replaying the label replays the samples bit-for-bit.
    """

    master_seed: int
    label: tuple[int, ...]
    generator: np.random.Generator = field(repr=False)
    algorithm: str = RNG_ALGORITHM


def _model_code(model) -> int:
    value = getattr(model, "value", model)
    try:
        return MODEL_STREAM_CODES[value]
    except KeyError:
        raise ValueError(f"unknown model {model!r}") from None


def derive_stream(master_seed: int, model, angle_index: int, experiment_index: int) -> RandomStream:
    """Stream for one experiment unit of one model at one angle.

    Deterministic in its inputs; streams with different labels are
    independent by SeedSequence construction.
    """
    if angle_index < 0 or experiment_index < 0:
        raise ValueError("angle_index and experiment_index must be non-negative")
    label = (_model_code(model), angle_index, experiment_index)
    seq = np.random.SeedSequence((master_seed, *label))
    return RandomStream(master_seed, label, np.random.Generator(np.random.Philox(seq)))


def derive_aux_stream(master_seed: int, purpose: str, index: int = 0) -> RandomStream:
    """Stream for non-simulation randomness (bootstrap resampling)."""
    try:
        code = AUX_STREAM_CODES[purpose]
    except KeyError:
        raise ValueError(f"unknown stream purpose {purpose!r}") from None
    label = (code, index, 0)
    seq = np.random.SeedSequence((master_seed, *label))
    return RandomStream(master_seed, label, np.random.Generator(np.random.Philox(seq)))


def uniform_angle(stream: RandomStream, size: int | None = None):
    """Polarization angle(s) uniform on [-pi/2, pi/2)."""
    return stream.generator.uniform(-np.pi / 2, np.pi / 2, size)


def gaussian_angle(stream: RandomStream, mean: float, sigma: float, size: int | None = None):
    """Angle(s) from Normal(mean, sigma^2).

    Not wrapped into (-pi/2, pi/2]: the transmission probability is
    pi-periodic, so out-of-range angles are harmless and skipping the wrap
    keeps the sample a pure Gaussian. sigma=0 returns the mean exactly and
    consumes no draws (so a zero-width smeared model replays a collapse
    stream bit-for-bit).
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0.0:
        if size is None:
            return float(mean)
        return np.full(size, float(mean))
    return stream.generator.normal(mean, sigma, size)


def accept(stream: RandomStream, p, p_max: float, size: int | None = None):
    """Acceptance-rejection draw: uniform N on [0, p_max), accept iff N < p.

    Acceptance probability is exactly p/p_max. p may be an array (paired
    with size) for vectorized use.
    """
    p_arr = np.asarray(p, dtype=float)
    if p_max <= 0 or p_max > 1:
        raise ValueError(f"p_max must be in (0, 1], got {p_max}")
    if np.any(p_arr < 0) or np.any(p_arr > p_max):
        raise ValueError(f"p must satisfy 0 <= p <= p_max={p_max}")
    draw = stream.generator.random(size)
    result = draw * p_max < p_arr
    if size is None and np.ndim(result) == 0:
        return bool(result)
    return result
