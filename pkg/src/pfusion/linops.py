"""Dense linear operators, adjoints, and subspace projections.

Operators between coordinate spaces are plain real matrices.  The
adjoint acting on functional coefficient vectors is the transpose;
coefficient vectors of functionals on a p-normed space are measured in
the dual q-norm.  Projections are idempotent square matrices with an
explicit basis of their range; the default construction is the
least-squares (2-orthogonal) projection onto the span of a basis, and
arbitrary oblique idempotents can be supplied directly through the
validating constructor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: a square matrix counts as invertible when sigma_min > RANK_RTOL * sigma_max
RANK_RTOL = 1e-10

#: idempotence / range-membership validation tolerance for projections
PROJECTION_TOL = 1e-10


def _as_matrix(entries, name: str = "matrix") -> np.ndarray:
    m = np.asarray(entries, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {m.shape}")
    if m.size and not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has a non-finite entry")
    return m


class LinOp:
    """A bounded operator between coordinate spaces, stored densely."""

    def __init__(self, entries):
        m = _as_matrix(entries)
        if m.shape[0] < 1 or m.shape[1] < 1:
            raise ValueError(f"operator must have positive shape, got {m.shape}")
        m = m.copy()
        m.setflags(write=False)
        self._m = m

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def rows(self) -> int:
        return self._m.shape[0]

    @property
    def cols(self) -> int:
        return self._m.shape[1]

    def apply(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != (self.cols,):
            raise ValueError(
                f"operator of shape {self._m.shape} cannot act on vector of shape {f.shape}")
        return self._m @ f

    def adjoint(self) -> "LinOp":
        """Transpose, acting on functional coefficient vectors."""
        return LinOp(self._m.T)

    def frobenius(self) -> float:
        return float(np.linalg.norm(self._m))

    def __repr__(self):
        return f"LinOp({self.rows}x{self.cols})"


@dataclass(frozen=True)
class InvertibilityReport:
    """Outcome of a singular-value invertibility test on a square matrix."""

    invertible: bool
    sigma_max: float
    sigma_min: float
    norm_two: float        # proxy for the operator 2-norm
    inv_norm_two: float    # proxy for the 2-norm of the inverse (inf if singular)
    rel_tol: float

    def __bool__(self) -> bool:
        return self.invertible


def is_invertible(op, rel_tol: float = RANK_RTOL) -> InvertibilityReport:
    """Singular-value test: invertible iff sigma_min > rel_tol * sigma_max.

    Borderline values are reported, not silently rounded; the report
    carries both extreme singular values.
    """
    m = op.matrix if isinstance(op, LinOp) else _as_matrix(op)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"invertibility requires a square matrix, got {m.shape}")
    s = np.linalg.svd(m, compute_uv=False)
    smax = float(s[0])
    smin = float(s[-1])
    ok = smax > 0.0 and smin > rel_tol * smax
    inv = 1.0 / smin if smin > 0.0 else float("inf")
    return InvertibilityReport(ok, smax, smin, smax, inv, rel_tol)


class SubspaceProjection:
    """Idempotent matrix P on R^n together with a basis of its range.

    P need not be orthogonal; any idempotent whose range matches the
    stored basis is accepted.  Construction validates idempotence and
    that P fixes every basis vector.
    """

    def __init__(self, matrix, basis):
        m = _as_matrix(matrix, "projection matrix")
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"projection matrix must be square, got {m.shape}")
        b = _as_matrix(basis, "projection basis")
        if b.shape[0] != m.shape[0]:
            raise ValueError(
                f"basis vectors of length {b.shape[0]} do not live in R^{m.shape[0]}")
        if b.shape[1] == 0:
            raise ValueError("projection must be non-trivial: empty range basis")
        fro = float(np.linalg.norm(m))
        if np.linalg.norm(m @ m - m) > PROJECTION_TOL * (1.0 + fro):
            raise ValueError("matrix is not idempotent within tolerance")
        for k in range(b.shape[1]):
            v = b[:, k]
            if np.linalg.norm(m @ v - v) > PROJECTION_TOL * (1.0 + np.linalg.norm(v)):
                raise ValueError(f"basis vector {k} is not fixed by the projection")
        sv = np.linalg.svd(b, compute_uv=False)
        if sv[-1] <= RANK_RTOL * sv[0]:
            raise ValueError("range basis is not linearly independent within tolerance")
        m = m.copy()
        m.setflags(write=False)
        b = b.copy()
        b.setflags(write=False)
        self._m = m
        self._b = b

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def basis(self) -> np.ndarray:
        """Range basis, one vector per column."""
        return self._b

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    @property
    def rank(self) -> int:
        return self._b.shape[1]

    def apply(self, f) -> np.ndarray:
        return LinOp(self._m).apply(f)

    def __repr__(self):
        return f"SubspaceProjection(dim={self.dim}, rank={self.rank})"


def make_projection(basis) -> SubspaceProjection:
    """Least-squares projection onto the span of the given basis vectors.

    ``basis`` is a sequence of vectors in R^n (a bare vector is also
    accepted).  Computed as Q Q^T from a reduced QR factorization, which
    equals B (B^T B)^{-1} B^T.  Raises when the basis is empty or
    dependent within tolerance.
    """
    b = np.asarray(basis, dtype=float)
    if b.size == 0:
        raise ValueError("projection must be non-trivial: empty basis")
    if b.ndim == 1:
        b = b.reshape(-1, 1)
    else:
        # vectors are enumerated along the first axis; store as columns
        b = b.T
    b = _as_matrix(b, "projection basis")
    sv = np.linalg.svd(b, compute_uv=False)
    if sv[-1] <= RANK_RTOL * sv[0]:
        raise ValueError("basis vectors are linearly dependent within tolerance")
    q, _ = np.linalg.qr(b)
    return SubspaceProjection(q @ q.T, b)


def projection_from_matrix(matrix) -> SubspaceProjection:
    """Wrap an idempotent (possibly oblique) matrix as a projection.

    The range basis is recovered from the leading left singular vectors;
    idempotence and range membership are validated by the constructor.
    """
    m = _as_matrix(matrix, "projection matrix")
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"projection matrix must be square, got {m.shape}")
    u, s, _ = np.linalg.svd(m)
    if s.size == 0 or s[0] == 0.0:
        raise ValueError("projection must be non-trivial: zero matrix")
    r = int(np.sum(s > RANK_RTOL * s[0]))
    return SubspaceProjection(m, u[:, :r])
