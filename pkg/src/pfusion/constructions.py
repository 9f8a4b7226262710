"""Constructions that build new weighted families from old ones.

Covered here: push-forward through an invertible operator, the bounded-
below equivalence for that push-forward, two perturbation statements
with explicit predicted bounds, block-diagonal direct sums, and
Kronecker tensor products.  Each construction returns the built family
together with the bounds predicted for it, so tests and reports can
compare prediction against measurement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bounds import (
    BoundEstimate,
    _dual_direction,
    lower_bound_constant,
    maximize_homogeneous,
    operator_p_norm,
    p2_exact_estimates,
    _sup_of_matrix,
)
from .frames import (
    FRAME,
    GPFusionFrame,
    WeightedTriple,
    classify,
    estimate_bounds,
)
from .linops import LinOp, SubspaceProjection, is_invertible, make_projection, _as_matrix
from .spaces import PNormSpace, p_norm

#: default absolute tolerance for the projection-compatibility hypothesis
HYPOTHESIS_TOL = 1e-9


@dataclass(frozen=True)
class PerturbationParams:
    """Admissible coefficients (lambda1, lambda2, mu) for the general
    perturbation inequality.  Both lambdas must lie strictly inside
    (-1, 1); the admissible range of mu depends on the reference
    family's bounds and is validated where those bounds are known."""

    lambda1: float
    lambda2: float
    mu: float

    def __post_init__(self):
        for name in ("lambda1", "lambda2"):
            v = float(getattr(self, name))
            if not (-1.0 < v < 1.0):
                raise ValueError(f"{name} must lie in (-1, 1), got {v}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "mu", float(self.mu))

    def validate_against(self, lower: float, upper: float) -> None:
        lo = -(1.0 + self.lambda1) * upper
        hi = (1.0 - self.lambda1) * lower
        if not (lo <= self.mu <= hi):
            raise ValueError(
                f"mu={self.mu} outside admissible range [{lo}, {hi}] "
                f"for bounds ({lower}, {upper})")


@dataclass(frozen=True)
class PredictedBounds:
    """Bounds a construction promises for the built family."""

    lower: float
    upper: float
    provenance: str
    powered_lower: float | None = None   # same bounds raised to the p-th power
    powered_upper: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper):
            raise ValueError(
                f"predicted bounds must satisfy 0 <= lower <= upper, "
                f"got ({self.lower}, {self.upper})")

    def contains(self, lower: float, upper: float, tol: float = 1e-6) -> bool:
        return self.lower - tol <= lower and upper <= self.upper + tol


class TransformResult(NamedTuple):
    frame: GPFusionFrame
    predicted: PredictedBounds
    hypothesis_ok: bool
    hypothesis_residual: float


def transported_projections(frame: GPFusionFrame, u) -> list:
    """Least-squares projections onto the images U(V_i) of the ranges.

    The image of a range basis can drop rank when U is singular; an
    orthonormal basis of the image is extracted first.  A triple whose
    range is annihilated entirely has no non-trivial transported
    projection, which raises.
    """
    um = u.matrix if isinstance(u, LinOp) else _as_matrix(u)
    projs = []
    for i, t in enumerate(frame.triples):
        image = um @ t.projection.basis
        left, sv, _ = np.linalg.svd(image, full_matrices=False)
        if sv.size == 0 or sv[0] <= 0.0:
            raise ValueError(f"operator annihilates the range of triple {i}")
        r = int(np.sum(sv > 1e-12 * sv[0]))
        projs.append(make_projection(left[:, :r].T))
    return projs


def _image_rank(um, basis) -> int:
    sv = np.linalg.svd(um @ basis, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > 1e-12 * sv[0]))


def _build_pushforward(frame, um, projections_on_uv, hypothesis_tol):
    """Family with triples (P_{U V_i}, L_i P_i U, v_i) plus hypothesis residual."""
    if projections_on_uv is None:
        projections_on_uv = transported_projections(frame, um)
    if len(projections_on_uv) != len(frame):
        raise ValueError("need one transported projection per triple")
    residual = 0.0
    new_triples = []
    for i, (t, proj) in enumerate(zip(frame.triples, projections_on_uv)):
        if proj.dim != frame.dim:
            raise ValueError(f"transported projection {i} has wrong dimension")
        image = um @ t.projection.basis
        if proj.rank != _image_rank(um, t.projection.basis):
            raise ValueError(
                f"transported projection {i} has rank {proj.rank}, which does "
                f"not match the transported range")
        err = np.linalg.norm(proj.matrix @ image - image)
        if err > 1e-8 * (1.0 + np.linalg.norm(image)):
            raise ValueError(
                f"transported projection {i} does not fix the image of the range")
        pu = t.projection.matrix @ um
        residual = max(residual, float(np.linalg.norm(pu @ proj.matrix - pu)))
        new_triples.append(
            WeightedTriple(proj, LinOp(t.local_op.matrix @ pu), t.weight))
    gamma = GPFusionFrame(frame.space, tuple(new_triples))
    return gamma, residual, residual <= hypothesis_tol


def transform_by_invertible(frame: GPFusionFrame, u, projections_on_uv=None,
                            restarts: int = 20, seed: int = 0,
                            hypothesis_tol: float = HYPOTHESIS_TOL) -> TransformResult:
    """Push the family forward through an invertible operator U.

    Builds the family with triples (P_{U V_i}, L_i P_i U, v_i).  The
    construction is only guaranteed to preserve the frame property when
    P_i U P_{U V_i} = P_i U for every i; that hypothesis is tested
    numerically and reported, never assumed.  Predicted bounds are
    (A / ||U^{-1}||_p, B ||U||_p) with operator norms taken in the
    family's exponent.
    """
    um = u.matrix if isinstance(u, LinOp) else _as_matrix(u)
    rep = is_invertible(um)
    if not rep:
        raise ValueError(
            f"transform requires an invertible operator "
            f"(sigma ratio {rep.sigma_min:.3e}/{rep.sigma_max:.3e})")
    gamma, residual, ok = _build_pushforward(frame, um, projections_on_uv,
                                             hypothesis_tol)
    lo, hi = estimate_bounds(frame, restarts, seed)
    u_norm = operator_p_norm(um, frame.p, restarts, seed).value
    u_inv_norm = operator_p_norm(np.linalg.inv(um), frame.p, restarts, seed).value
    predicted = PredictedBounds(lo.value / u_inv_norm, hi.value * u_norm,
                                "transform-invertible")
    return TransformResult(gamma, predicted, ok, residual)


@dataclass(frozen=True)
class BoundedBelowReport:
    """Numerical check of: transformed family is a frame iff U is bounded below.

    ``forward_ok``: if the transformed family measured a positive lower
    bound C, then U admits the lower constant C / B within tolerance.
    ``converse_ok``: if U is bounded below by M, the transformed family
    has lower bound at least A * M within tolerance.
    """

    applicable: bool
    hypothesis_residual: float
    u_lower: BoundEstimate | None = None
    gamma_is_frame: bool | None = None
    gamma_lower: float | None = None
    lambda_lower: float | None = None
    lambda_upper: float | None = None
    forward_ok: bool | None = None
    converse_ok: bool | None = None
    tol: float = 1e-6


def bounded_below_iff_frame(frame: GPFusionFrame, u, projections_on_uv=None,
                            restarts: int = 20, seed: int = 0,
                            tol: float = 1e-6) -> BoundedBelowReport:
    """Check both directions of the bounded-below equivalence for U.

    U only needs to be bounded here, not invertible; the push-forward
    family is built directly and the projection-compatibility
    hypothesis is tested.  When the hypothesis fails the report is
    marked inapplicable.
    """
    um = u.matrix if isinstance(u, LinOp) else _as_matrix(u)
    gamma, residual, ok = _build_pushforward(frame, um, projections_on_uv,
                                             HYPOTHESIS_TOL)
    if not ok:
        return BoundedBelowReport(False, residual, tol=tol)

    lo, hi = estimate_bounds(frame, restarts, seed)
    g_lo, _ = estimate_bounds(gamma, restarts, seed)
    g_cls = classify(gamma, restarts, seed)
    m_est = lower_bound_constant(um, frame.p, restarts, seed)

    forward_ok = (not g_cls.is_frame()) or (
        m_est.value >= g_lo.value / hi.value - tol)
    converse_ok = (m_est.value <= tol) or (
        g_lo.value >= lo.value * m_est.value - tol)
    return BoundedBelowReport(True, residual, m_est,
                              g_cls.is_frame(), g_lo.value, lo.value, hi.value,
                              forward_ok, converse_ok, tol)


def _compatible_pair(frame_a: GPFusionFrame, frame_b: GPFusionFrame) -> None:
    if frame_a.dim != frame_b.dim:
        raise ValueError(
            f"families act on different spaces: R^{frame_a.dim} vs R^{frame_b.dim}")
    if frame_a.p != frame_b.p:
        raise ValueError(f"exponent mismatch: {frame_a.p} vs {frame_b.p}")
    if frame_a.block_dims != frame_b.block_dims:
        raise ValueError(
            f"block shape mismatch: {frame_a.block_dims} vs {frame_b.block_dims}")
    wa = [t.weight for t in frame_a.triples]
    wb = [t.weight for t in frame_b.triples]
    if not np.allclose(wa, wb, rtol=1e-12, atol=0.0):
        raise ValueError("pairwise weights must agree between the two families")


@dataclass(frozen=True)
class PerturbationCheck:
    """Largest found violation of the perturbation inequality."""

    holds: bool
    max_violation: float
    witness: np.ndarray
    restarts: int
    seed: int


def perturbation_condition_holds(frame_a: GPFusionFrame, frame_b: GPFusionFrame,
                                 params: PerturbationParams, restarts: int = 20,
                                 seed: int = 0, tol: float = 1e-9) -> PerturbationCheck:
    """Search for a violation of the blockwise-difference inequality.

    The inequality bounds the mixed norm of the difference family by
    lambda1 and lambda2 times the two families' own mixed norms plus
    mu ||f||.  The violation (left minus right side) is maximized over
    the unit p-sphere by seeded gradient restarts; a nonpositive
    maximum is evidence for the inequality, reported with its witness
    so failures are reproducible.
    """
    _compatible_pair(frame_a, frame_b)
    lo, hi = estimate_bounds(frame_a, restarts, seed)
    params.validate_against(lo.value, hi.value)

    p = frame_a.p
    sa = frame_a.stacked_matrix
    sb = frame_b.stacked_matrix
    sd = sa - sb
    l1, l2, mu = params.lambda1, params.lambda2, params.mu

    def value_fn(f):
        return (p_norm(sd @ f, p) - l1 * p_norm(sa @ f, p)
                - l2 * p_norm(sb @ f, p) - mu * p_norm(f, p))

    def grad_fn(f):
        return (sd.T @ _dual_direction(sd @ f, p)
                - l1 * (sa.T @ _dual_direction(sa @ f, p))
                - l2 * (sb.T @ _dual_direction(sb @ f, p))
                - mu * _dual_direction(f, p))

    w, v, _, _ = maximize_homogeneous(value_fn, grad_fn, frame_a.dim, p,
                                      restarts, seed)
    return PerturbationCheck(v <= tol, v, w, restarts, seed)


def predicted_perturbed_bounds(lower: float, upper: float,
                               params: PerturbationParams) -> PredictedBounds:
    """Bounds promised for a family satisfying the general perturbation
    inequality against a reference family with bounds (lower, upper):

        [lower (1 - lambda1) - mu] / (1 + lambda2)
        [upper (1 + lambda1) + mu] / (1 - lambda2)
    """
    if not (0.0 < lower <= upper):
        raise ValueError(f"need 0 < lower <= upper, got ({lower}, {upper})")
    params.validate_against(lower, upper)
    new_lower = (lower * (1.0 - params.lambda1) - params.mu) / (1.0 + params.lambda2)
    new_upper = (upper * (1.0 + params.lambda1) + params.mu) / (1.0 - params.lambda2)
    return PredictedBounds(new_lower, new_upper, "perturbation-general")


def simple_perturbation_bounds(lower: float, upper: float, radius: float) -> PredictedBounds:
    """Bounds (lower - radius, upper + radius) for a radius-R perturbation.

    Requires 0 < radius < lower; otherwise the statement does not apply.
    """
    if not (0.0 < lower <= upper):
        raise ValueError(f"need 0 < lower <= upper, got ({lower}, {upper})")
    if not (0.0 < radius < lower):
        raise ValueError(
            f"radius must satisfy 0 < R < {lower}, got {radius}")
    return PredictedBounds(lower - radius, upper + radius, "perturbation-radius")


def measure_perturbation_radius(frame_a: GPFusionFrame, frame_b: GPFusionFrame,
                                restarts: int = 20, seed: int = 0) -> BoundEstimate:
    """Smallest valid radius: the sup ratio of the difference family."""
    _compatible_pair(frame_a, frame_b)
    diff = frame_a.stacked_matrix - frame_b.stacked_matrix
    if frame_a.p == 2.0:
        return p2_exact_estimates(diff)[1]
    return _sup_of_matrix(diff, frame_a.p, restarts, seed)


class CombineResult(NamedTuple):
    frame: GPFusionFrame
    predicted: PredictedBounds


def _block_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]))
    out[:a.shape[0], :a.shape[1]] = a
    out[a.shape[0]:, a.shape[1]:] = b
    return out


def direct_sum(frame_x: GPFusionFrame, frame_y: GPFusionFrame,
               restarts: int = 20, seed: int = 0) -> CombineResult:
    """Block-diagonal sum of two families on the p-sum of their spaces.

    Triples are paired by index and must share their weight; the i-th
    triple of the sum is (P_i + Q_i, L_i + M_i, v_i) in block-diagonal
    form.  Predicted bounds are (min(A, C), max(B, D)); the p-th powers
    of the same bounds are recorded alongside.
    """
    if frame_x.p != frame_y.p:
        raise ValueError(f"exponent mismatch: {frame_x.p} vs {frame_y.p}")
    if len(frame_x) != len(frame_y):
        raise ValueError(
            f"index mismatch: {len(frame_x)} vs {len(frame_y)} triples")
    p = frame_x.p
    triples = []
    for i, (tx, ty) in enumerate(zip(frame_x.triples, frame_y.triples)):
        if not math.isclose(tx.weight, ty.weight, rel_tol=1e-12, abs_tol=0.0):
            raise ValueError(
                f"triple {i}: weights {tx.weight} and {ty.weight} must agree")
        proj = SubspaceProjection(
            _block_diag(tx.projection.matrix, ty.projection.matrix),
            _block_diag(tx.projection.basis, ty.projection.basis))
        op = LinOp(_block_diag(tx.local_op.matrix, ty.local_op.matrix))
        triples.append(WeightedTriple(proj, op, tx.weight))
    combined = GPFusionFrame(PNormSpace(frame_x.dim + frame_y.dim, p), tuple(triples))

    (ax, bx) = estimate_bounds(frame_x, restarts, seed)
    (ay, by) = estimate_bounds(frame_y, restarts, seed)
    lo = min(ax.value, ay.value)
    hi = max(bx.value, by.value)
    predicted = PredictedBounds(lo, hi, "direct-sum",
                                powered_lower=lo**p, powered_upper=hi**p)
    return CombineResult(combined, predicted)


def tensor_product(frame_x: GPFusionFrame, frame_y: GPFusionFrame,
                   restarts: int = 20, seed: int = 0) -> CombineResult:
    """Kronecker product family over all index pairs (row-major).

    The coordinate model of the product space is R^(n*m) under the
    Kronecker vectorization, where the elementary-tensor identity
    ||kron(f, g)||_p = ||f||_p ||g||_p holds exactly.  The (i, j) triple
    is (kron(P_i, Q_j), kron(L_i, M_j), v_i * w_j); predicted bounds are
    the products (A*C, B*D).
    """
    if frame_x.p != frame_y.p:
        raise ValueError(f"exponent mismatch: {frame_x.p} vs {frame_y.p}")
    p = frame_x.p
    triples = []
    for tx in frame_x.triples:
        for ty in frame_y.triples:
            proj = SubspaceProjection(
                np.kron(tx.projection.matrix, ty.projection.matrix),
                np.kron(tx.projection.basis, ty.projection.basis))
            op = LinOp(np.kron(tx.local_op.matrix, ty.local_op.matrix))
            triples.append(WeightedTriple(proj, op, tx.weight * ty.weight))
    combined = GPFusionFrame(
        PNormSpace(frame_x.dim * frame_y.dim, p), tuple(triples))

    (ax, bx) = estimate_bounds(frame_x, restarts, seed)
    (ay, by) = estimate_bounds(frame_y, restarts, seed)
    predicted = PredictedBounds(ax.value * ay.value, bx.value * by.value,
                                "tensor-product")
    return CombineResult(combined, predicted)


def tensor_converse_extract(product_frame: GPFusionFrame, factors,
                            restarts: int = 20, seed: int = 0,
                            samples: int = 8) -> tuple:
    """Factor bounds recovered from a tensor-product family.

    ``factors`` is the (frame_x, frame_y) pair whose product built
    ``product_frame``; the factor structure is validated against the
    product and a mismatch raises.  For each factor, the other factor's
    encoding ratio is evaluated on sampled unit vectors plus its own
    extremal witnesses; the extracted constants are

        lower = (product lower) / max ratio of the co-factor
        upper = (product upper) / min ratio of the co-factor

    evaluated over that candidate set (the construction restricts the
    product to elementary tensors f x g0 and normalizes away the
    co-factor's contribution).  Both factors must classify as frames.
    """
    frame_x, frame_y = factors
    rebuilt = tensor_product(frame_x, frame_y, restarts, seed).frame
    if rebuilt.block_dims != product_frame.block_dims or not np.allclose(
            rebuilt.stacked_matrix, product_frame.stacked_matrix,
            rtol=1e-9, atol=1e-12):
        raise ValueError("unknown factor structure: product does not match factors")

    for name, f in (("first", frame_x), ("second", frame_y)):
        if not classify(f, restarts, seed).is_frame():
            raise ValueError(f"{name} factor does not classify as a frame")

    plo, phi = estimate_bounds(product_frame, restarts, seed)
    bx = _cofactor_ratio_range(frame_y, restarts, seed, samples)
    by = _cofactor_ratio_range(frame_x, restarts, seed, samples)
    x_bounds = PredictedBounds(plo.value / bx[1], phi.value / bx[0],
                               "tensor-converse")
    y_bounds = PredictedBounds(plo.value / by[1], phi.value / by[0],
                               "tensor-converse")
    return x_bounds, y_bounds


def _cofactor_ratio_range(frame: GPFusionFrame, restarts, seed, samples):
    """(min, max) encoding ratio of a factor over sampled and extremal units."""
    from .seeding import sample_p_sphere, make_rng

    s = frame.stacked_matrix
    lo, hi = estimate_bounds(frame, restarts, seed)
    rng = make_rng(seed, 2**43)
    candidates = [lo.witness, hi.witness]
    candidates += [sample_p_sphere(rng, frame.dim, frame.p) for _ in range(samples)]
    ratios = [p_norm(s @ g, frame.p) / p_norm(g, frame.p) for g in candidates]
    return min(ratios), max(ratios)
