"""Finite-dimensional p-normed spaces, block sequences, and dual pairings.

The ambient space is R^n with the coordinate p-norm for an exponent
1 < p < inf.  A family of local images lives in a block sequence: a
finite ordered list of real vectors f_1, ..., f_m (block i of length
d_i) measured by the mixed norm (sum_i ||f_i||_p**p)**(1/p).  Linear
functionals are represented by coefficient vectors measured in the dual
exponent q = p / (p - 1) and paired with vectors through the ordinary
dot product, blockwise.

All values are immutable after construction; arrays are stored as
read-only copies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: exponents p, q are considered dual when |1/p + 1/q - 1| is below this
DUAL_EXPONENT_RTOL = 1e-12


def _as_vector(v, name: str = "vector") -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    if v.size and not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has a non-finite entry")
    return v


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def p_norm(v, p: float) -> float:
    """Coordinate p-norm (sum_k |v_k|**p)**(1/p) for 1 <= p < inf.

    The largest magnitude is factored out before powering so that
    extreme entries neither overflow nor underflow.

    Examples
    --------
    >>> p_norm([3.0, 4.0], 2)
    5.0
    >>> round(p_norm([1.0, 1.0], 1.5), 6)
    1.587401
    """
    v = _as_vector(v)
    p = float(p)
    if not (1.0 <= p and math.isfinite(p)):
        raise ValueError(f"p-norm exponent must satisfy 1 <= p < inf, got {p}")
    if v.size == 0:
        return 0.0
    m = float(np.max(np.abs(v)))
    if m == 0.0:
        return 0.0
    return m * float(np.sum((np.abs(v) / m) ** p)) ** (1.0 / p)


def dual_exponent(p: float) -> float:
    """Exponent q with 1/p + 1/q = 1, for 1 < p < inf."""
    p = float(p)
    if not (1.0 < p and math.isfinite(p)):
        raise ValueError(f"dual exponent requires 1 < p < inf, got {p}")
    return p / (p - 1.0)


@dataclass(frozen=True)
class PNormSpace:
    """R^dim equipped with the coordinate p-norm, 1 < p < inf."""

    dim: int
    p: float

    def __post_init__(self):
        if not (isinstance(self.dim, (int, np.integer)) and self.dim >= 1):
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        p = float(self.p)
        if not (1.0 < p and math.isfinite(p)):
            raise ValueError(f"exponent must satisfy 1 < p < inf, got {p}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "p", p)

    @property
    def q(self) -> float:
        """Dual exponent."""
        return dual_exponent(self.p)

    def norm(self, v) -> float:
        v = _as_vector(v)
        if v.size != self.dim:
            raise ValueError(f"expected vector of length {self.dim}, got {v.size}")
        return p_norm(v, self.p)


@dataclass(frozen=True, eq=False)
class MixedSeq:
    """Finite block sequence {f_i} carrying the exponent of its mixed norm.

    Blocks may have different lengths.  The empty sequence is legal and
    has norm zero, which keeps slicing and direct sums total.
    """

    blocks: tuple
    p: float

    def __post_init__(self):
        p = float(self.p)
        if not (1.0 < p and math.isfinite(p)):
            raise ValueError(f"exponent must satisfy 1 < p < inf, got {p}")
        blocks = tuple(_frozen(_as_vector(b, f"block {i}")) for i, b in enumerate(self.blocks))
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "p", p)

    def __len__(self) -> int:
        return len(self.blocks)

    @property
    def block_dims(self) -> tuple:
        return tuple(b.size for b in self.blocks)

    def concat(self) -> np.ndarray:
        if not self.blocks:
            return np.zeros(0)
        return np.concatenate(self.blocks)


@dataclass(frozen=True, eq=False)
class DualMixedSeq:
    """Block sequence of functional coefficient vectors {g_i}, q-normed."""

    blocks: tuple
    q: float

    def __post_init__(self):
        q = float(self.q)
        if not (1.0 < q and math.isfinite(q)):
            raise ValueError(f"exponent must satisfy 1 < q < inf, got {q}")
        blocks = tuple(_frozen(_as_vector(b, f"block {i}")) for i, b in enumerate(self.blocks))
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "q", q)

    def __len__(self) -> int:
        return len(self.blocks)

    @property
    def block_dims(self) -> tuple:
        return tuple(b.size for b in self.blocks)

    def concat(self) -> np.ndarray:
        if not self.blocks:
            return np.zeros(0)
        return np.concatenate(self.blocks)


def mixed_norm(s: MixedSeq) -> float:
    """(sum_i ||f_i||_p**p)**(1/p); zero iff every block is zero."""
    return p_norm(np.array([p_norm(b, s.p) for b in s.blocks]), s.p)


def dual_mixed_norm(g: DualMixedSeq) -> float:
    """(sum_i ||g_i||_q**q)**(1/q) over functional coefficient blocks."""
    return p_norm(np.array([p_norm(b, g.q) for b in g.blocks]), g.q)


def _check_dual_exponents(p: float, q: float) -> None:
    if abs(1.0 / p + 1.0 / q - 1.0) > DUAL_EXPONENT_RTOL:
        raise ValueError(f"exponents are not dual: p={p}, q={q}")


def dual_pairing(s: MixedSeq, g: DualMixedSeq) -> float:
    """Blockwise dot-product pairing sum_i <f_i, g_i>.

    Requires matching block shapes and dual exponents.  Satisfies the
    Hoelder bound |pairing| <= mixed_norm(s) * dual_mixed_norm(g).
    """
    _check_dual_exponents(s.p, g.q)
    if s.block_dims != g.block_dims:
        raise ValueError(
            f"block shape mismatch: {s.block_dims} vs {g.block_dims}")
    return float(sum(float(b @ c) for b, c in zip(s.blocks, g.blocks)))


def norming_functional(s: MixedSeq) -> DualMixedSeq:
    """Dual sequence of norm one whose pairing with ``s`` attains mixed_norm(s).

    Built analytically: g_{i,k} = sign(f_{i,k}) |f_{i,k}|**(p-1) / N**(p-1)
    with N = mixed_norm(s).  Undefined for the zero sequence.
    """
    n = mixed_norm(s)
    if n == 0.0:
        raise ValueError("norming functional of the zero sequence is undefined")
    pm1 = s.p - 1.0
    blocks = [np.sign(b) * (np.abs(b) / n) ** pm1 for b in s.blocks]
    return DualMixedSeq(tuple(blocks), dual_exponent(s.p))
