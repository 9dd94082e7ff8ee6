"""Counter-based random streams and Poisson samplers.

Every uniform used by the season simulator is a pure function of a key
``(master_seed, simulation, fixture, slot)`` hashed with the SplitMix64
finaliser, so a single match draw can be regenerated in isolation and
results never depend on execution order or thread count.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO53 = 2.0 ** -53

INVERSION_LIMIT = 10.0
# key domain for tie-break draws; fixture indices never reach it
TIE_DOMAIN = 2**63 + 0x7469652D


def _splitmix(x: np.ndarray) -> np.ndarray:
    z = x + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def mix_key(*words) -> np.ndarray:
    """Hash integer words (scalars or broadcastable arrays) to uint64."""
    with np.errstate(over="ignore"):
        h = _splitmix(np.asarray(words[0], dtype=np.uint64))
        for w in words[1:]:
            h = _splitmix(h ^ np.asarray(w, dtype=np.uint64))
    return h


def key_uniform(*words) -> np.ndarray:
    """Uniform on [0, 1) with 53 random bits, derived from ``mix_key``."""
    return (mix_key(*words) >> np.uint64(11)).astype(np.float64) * _TWO53


def check_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)) or not 0 <= int(seed) < 2**64:
        raise DomainError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return int(seed)


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not math.isfinite(lam) or lam < 0:
        raise DomainError(f"Poisson mean must be finite and non-negative, got {lam!r}")
    return lam


def _inverse_scalar(lam: float, u: float) -> int:
    k, p = 0, math.exp(-lam)
    cdf = p
    while u >= cdf and p > 0:
        k += 1
        p *= lam / k
        cdf += p
    return k


def poisson_inverse(lam, u) -> np.ndarray:
    """Poisson quantile by sequential CDF search: smallest k with F(k) > u."""
    lam, u = np.broadcast_arrays(np.asarray(lam, float), np.asarray(u, float))
    if lam.ndim == 0:
        return np.int64(_inverse_scalar(float(lam), float(u)))
    k = np.zeros(lam.shape, dtype=np.int64)
    p = np.exp(-lam)
    cdf = p.copy()
    active = u >= cdf
    while active.any():
        k[active] += 1
        p[active] *= lam[active] / k[active]
        cdf[active] += p[active]
        active &= (u >= cdf) & (p > 0)
    return k


def _ptrs(lam: float, next_uniform) -> int:
    """Transformed rejection with squeeze (Hormann 1993) for lam >= 10."""
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2)
    while True:
        U = next_uniform() - 0.5
        V = next_uniform()
        us = 0.5 - abs(U)
        k = math.floor((2 * a / us + b) * U + lam + 0.43)
        if us >= 0.07 and V <= vr:
            return int(k)
        if k < 0 or (us < 0.013 and V > us):
            continue
        if (math.log(V) + math.log(invalpha) - math.log(a / (us * us) + b)
                <= -lam + k * loglam - math.lgamma(k + 1)):
            return int(k)


def sample_poisson(lam: float, rng: np.random.Generator) -> int:
    """One Poisson(lam) draw: inversion below 10, rejection above."""
    lam = _check_lambda(lam)
    if lam < INVERSION_LIMIT:
        return int(poisson_inverse(lam, rng.random()))
    return _ptrs(lam, rng.random)


def keyed_poisson(lam: float, *key) -> int:
    """Poisson draw fully determined by ``key``; matches the vectorised path."""
    lam = _check_lambda(lam)
    if lam < INVERSION_LIMIT:
        return int(poisson_inverse(lam, key_uniform(*key)))
    rng = np.random.Generator(np.random.PCG64(int(mix_key(*key))))
    return _ptrs(lam, rng.random)


def keyed_poisson_array(lam: np.ndarray, seed: int, sims: np.ndarray,
                        fixtures: np.ndarray, slot: int) -> np.ndarray:
    """Draws for every (simulation, fixture) pair; shape (len(sims), len(fixtures))."""
    lam = np.asarray(lam, dtype=float)
    if lam.size and (not np.all(np.isfinite(lam)) or lam.min() < 0):
        raise DomainError("Poisson means must be finite and non-negative")
    s = np.asarray(sims, dtype=np.uint64)[:, None]
    f = np.asarray(fixtures, dtype=np.uint64)[None, :]
    u = key_uniform(seed, s, f, slot)
    lam2 = np.broadcast_to(lam[None, :], u.shape)
    small = lam2 < INVERSION_LIMIT
    out = poisson_inverse(np.where(small, lam2, 0.0), u)
    if not small.all():
        for i, j in zip(*np.nonzero(~small)):
            out[i, j] = keyed_poisson(lam2[i, j], seed, int(sims[i]), int(fixtures[j]), slot)
    return out
