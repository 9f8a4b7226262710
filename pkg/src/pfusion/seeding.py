"""Deterministic random streams.

Every random draw in the library flows from one integer seed through a
counter-based Philox generator.  A (seed, stream) pair maps to a fixed
128-bit Philox key, so independent subtasks (optimizer restarts, sample
batches, subset draws) each get their own reproducible stream and the
merged result does not depend on execution order.
"""

from __future__ import annotations

import numpy as np

RNG_KIND = "philox4x64"

_MAX = 2**64


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator for the given (seed, stream) pair.

    Identical pairs always produce identical draws within one numpy
    installation.
    """
    seed = int(seed)
    stream = int(stream)
    if not 0 <= seed < _MAX:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    if not 0 <= stream < _MAX:
        raise ValueError(f"stream must be in [0, 2**64), got {stream}")
    return np.random.Generator(np.random.Philox(key=(stream << 64) | seed))


def sample_p_sphere(rng: np.random.Generator, dim: int, p: float) -> np.ndarray:
    """Uniform point on the unit sphere of the coordinate p-norm.

    Draws coordinates with density proportional to exp(-|t|**p) (a gamma
    variate raised to 1/p, with a random sign) and normalizes; the
    normalized vector is uniformly distributed on the p-sphere.
    """
    g = rng.gamma(1.0 / p, 1.0, size=dim) ** (1.0 / p)
    signs = np.where(rng.random(dim) < 0.5, -1.0, 1.0)
    v = signs * g
    scale = float(np.max(np.abs(v)))
    if scale == 0.0:
        v = np.zeros(dim)
        v[0] = 1.0
        return v
    n = scale * float(np.sum((np.abs(v) / scale) ** p) ** (1.0 / p))
    return v / n
