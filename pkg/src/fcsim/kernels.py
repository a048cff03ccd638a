"""Hot per-pair counting kernels: numba-jitted loops with a pure-numpy twin.

Each kernel consumes pre-generated random blocks (polarizations and
acceptance uniforms) and returns (photon-1 transmissions, coincidences).
Keeping generation outside the kernels lets both backends consume the exact
same numbers; the arithmetic uses identical elementwise expressions, and on
platforms where np.cos and math.cos agree bitwise (tested) the two backends
return identical counts.

Backend selection: the FCSIM_BACKEND environment variable ("numba" or
"numpy"); default is numba when importable, else numpy. set_backend()
overrides programmatically (tests, benchmarks).
"""

from __future__ import annotations

import math
import os
import time

import numpy as np

BACKEND_ENV = "FCSIM_BACKEND"

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on numba-less installs
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


_backend_override: str | None = None


def available_backends() -> tuple[str, ...]:
    return ("numba", "numpy") if HAVE_NUMBA else ("numpy",)


def set_backend(name: str | None) -> None:
    """Force a backend ("numba"/"numpy"), or None to re-read the environment."""
    global _backend_override
    if name is not None:
        _check_backend_name(name)
    _backend_override = name


def _check_backend_name(name: str) -> None:
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")


def active_backend() -> str:
    if _backend_override is not None:
        return _backend_override
    env = os.environ.get(BACKEND_ENV, "").strip().lower()
    if env:
        _check_backend_name(env)
        return env
    return "numba" if HAVE_NUMBA else "numpy"


# --- collapse model: photon 2 polarization is the analyzer-1 angle (0) ----
# p2 is constant across pairs, precomputed by the caller.

@njit(cache=True, nogil=True)
def _collapse_counts_jit(pol1, u1, u2, p2, e1_par, e1_perp, pmax1, pmax2):
    d1 = e1_par - e1_perp
    singles = 0
    coinc = 0
    for i in range(pol1.shape[0]):
        c = math.cos(pol1[i])
        p1 = e1_perp + d1 * (c * c)
        if u1[i] * pmax1 < p1:
            singles += 1
            if u2[i] * pmax2 < p2:
                coinc += 1
    return singles, coinc


def _collapse_counts_np(pol1, u1, u2, p2, e1_par, e1_perp, pmax1, pmax2):
    c = np.cos(pol1)
    p1 = e1_perp + (e1_par - e1_perp) * (c * c)
    passed1 = u1 * pmax1 < p1
    passed2 = passed1 & (u2 * pmax2 < p2)
    return int(np.count_nonzero(passed1)), int(np.count_nonzero(passed2))


# --- local-realistic model: photon 2 carries photon 1's polarization ------

@njit(cache=True, nogil=True)
def _local_counts_jit(pol1, u1, u2, phi, e1_par, e1_perp, e2_par, e2_perp, pmax1, pmax2):
    d1 = e1_par - e1_perp
    d2 = e2_par - e2_perp
    singles = 0
    coinc = 0
    for i in range(pol1.shape[0]):
        c1 = math.cos(pol1[i])
        p1 = e1_perp + d1 * (c1 * c1)
        c2 = math.cos(pol1[i] - phi)
        p2 = e2_perp + d2 * (c2 * c2)
        t1 = u1[i] * pmax1 < p1
        if t1:
            singles += 1
            if u2[i] * pmax2 < p2:
                coinc += 1
    return singles, coinc


def _local_counts_np(pol1, u1, u2, phi, e1_par, e1_perp, e2_par, e2_perp, pmax1, pmax2):
    c1 = np.cos(pol1)
    p1 = e1_perp + (e1_par - e1_perp) * (c1 * c1)
    c2 = np.cos(pol1 - phi)
    p2 = e2_perp + (e2_par - e2_perp) * (c2 * c2)
    passed1 = u1 * pmax1 < p1
    passed2 = passed1 & (u2 * pmax2 < p2)
    return int(np.count_nonzero(passed1)), int(np.count_nonzero(passed2))


# --- smeared model: photon 2 polarization Gaussian about the analyzer-1 ---

@njit(cache=True, nogil=True)
def _smeared_counts_jit(pol1, u1, pol2, u2, phi, e1_par, e1_perp, e2_par, e2_perp, pmax1, pmax2):
    d1 = e1_par - e1_perp
    d2 = e2_par - e2_perp
    singles = 0
    coinc = 0
    for i in range(pol1.shape[0]):
        c1 = math.cos(pol1[i])
        p1 = e1_perp + d1 * (c1 * c1)
        if u1[i] * pmax1 < p1:
            singles += 1
            c2 = math.cos(pol2[i] - phi)
            p2 = e2_perp + d2 * (c2 * c2)
            if u2[i] * pmax2 < p2:
                coinc += 1
    return singles, coinc


def _smeared_counts_np(pol1, u1, pol2, u2, phi, e1_par, e1_perp, e2_par, e2_perp, pmax1, pmax2):
    c1 = np.cos(pol1)
    p1 = e1_perp + (e1_par - e1_perp) * (c1 * c1)
    c2 = np.cos(pol2 - phi)
    p2 = e2_perp + (e2_par - e2_perp) * (c2 * c2)
    passed1 = u1 * pmax1 < p1
    passed2 = passed1 & (u2 * pmax2 < p2)
    return int(np.count_nonzero(passed1)), int(np.count_nonzero(passed2))


def collapse_counts(pol1, u1, u2, p2, e1_par, e1_perp, pmax1, pmax2):
    fn = _collapse_counts_jit if active_backend() == "numba" else _collapse_counts_np
    return fn(pol1, u1, u2, p2, e1_par, e1_perp, pmax1, pmax2)


def local_counts(pol1, u1, u2, phi, e1_par, e1_perp, e2_par, e2_perp, pmax1, pmax2):
    fn = _local_counts_jit if active_backend() == "numba" else _local_counts_np
    return fn(pol1, u1, u2, phi, e1_par, e1_perp, e2_par, e2_perp, pmax1, pmax2)


def smeared_counts(pol1, u1, pol2, u2, phi, e1_par, e1_perp, e2_par, e2_perp, pmax1, pmax2):
    fn = _smeared_counts_jit if active_backend() == "numba" else _smeared_counts_np
    return fn(pol1, u1, pol2, u2, phi, e1_par, e1_perp, e2_par, e2_perp, pmax1, pmax2)


def warm_up() -> None:
    """Force JIT compilation of all kernels (cached to disk)."""
    if not HAVE_NUMBA:
        return
    z = np.zeros(2)
    _collapse_counts_jit(z, z, z, 0.5, 0.97, 0.038, 0.97, 0.96)
    _local_counts_jit(z, z, z, 0.3, 0.97, 0.038, 0.96, 0.037, 0.97, 0.96)
    _smeared_counts_jit(z, z, z, z, 0.3, 0.97, 0.038, 0.96, 0.037, 0.97, 0.96)


def benchmark(pairs: int = 100_000, repeats: int = 20, seed: int = 0) -> dict:
    """Time each backend on the three kernels and check count agreement.

    Returns {"pairs", "repeats", "agree", backends: {name: {model: sec/call}}}.
    Generation of the random blocks is excluded from the timings so the
    numbers isolate kernel arithmetic.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, 0))))
    pol1 = rng.uniform(-np.pi / 2, np.pi / 2, pairs)
    u1 = rng.random(pairs)
    pol2 = rng.normal(0.0, 0.2131, pairs)
    u2 = rng.random(pairs)
    phi = math.pi / 8
    args = dict(e1_par=0.97, e1_perp=0.038, e2_par=0.96, e2_perp=0.037, pmax1=0.97, pmax2=0.96)
    p2 = args["e2_perp"] + (args["e2_par"] - args["e2_perp"]) * math.cos(phi) ** 2

    calls = {
        "collapse": lambda f: f(pol1, u1, u2, p2, args["e1_par"], args["e1_perp"], args["pmax1"], args["pmax2"]),
        "local-realistic": lambda f: f(pol1, u1, u2, phi, *[args[k] for k in
                                       ("e1_par", "e1_perp", "e2_par", "e2_perp", "pmax1", "pmax2")]),
        "smeared": lambda f: f(pol1, u1, pol2, u2, phi, *[args[k] for k in
                               ("e1_par", "e1_perp", "e2_par", "e2_perp", "pmax1", "pmax2")]),
    }
    impls = {"numpy": (_collapse_counts_np, _local_counts_np, _smeared_counts_np)}
    if HAVE_NUMBA:
        warm_up()
        impls["numba"] = (_collapse_counts_jit, _local_counts_jit, _smeared_counts_jit)

    results: dict = {"pairs": pairs, "repeats": repeats, "backends": {}, "counts": {}}
    for name, fns in impls.items():
        timings = {}
        counts = {}
        for model, fn in zip(calls, fns):
            call = calls[model]
            call(fn)  # warm (jit compile / cache touch)
            t0 = time.perf_counter()
            for _ in range(repeats):
                out = call(fn)
            timings[model] = (time.perf_counter() - t0) / repeats
            counts[model] = out
        results["backends"][name] = timings
        results["counts"][name] = counts

    reference = results["counts"]["numpy"]
    results["agree"] = all(results["counts"][b] == reference for b in results["counts"])
    return results
