"""Weighted operator families over subspaces and their frame properties.

A family is a finite ordered list of triples (projection P_i, local
operator L_i, weight v_i > 0) on a common p-normed space R^n.  The
family encodes a vector f as the block sequence {v_i L_i P_i f}; it is
a frame when the mixed norm of that encoding is equivalent to ||f||_p,
with best constants A (lower) and B (upper).

All structural questions reduce to the stacked composite matrix

    S = [v_1 L_1 P_1; ...; v_m L_m P_m]      ((sum_i d_i) x n)

whose transpose is the reconstruction (synthesis) matrix acting on
functional coefficient blocks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .bounds import (
    INF,
    SUP,
    BoundEstimate,
    _inf_of_matrix,
    _sup_of_matrix,
    p2_exact_estimates,
)
from .linops import RANK_RTOL, LinOp, SubspaceProjection, make_projection
from .seeding import make_rng
from .spaces import (
    DUAL_EXPONENT_RTOL,
    DualMixedSeq,
    MixedSeq,
    PNormSpace,
    dual_exponent,
)

NOT_FRAME = "not-frame"
BESSEL_ONLY = "bessel-only"
FRAME = "frame"
TIGHT = "tight"
PARSEVAL = "parseval"

#: stream offsets so that different consumers of one seed stay decoupled
_SAMPLE_STREAM = 2**41
_SUBSET_STREAM = 2**42


@dataclass(frozen=True)
class WeightedTriple:
    """One (subspace projection, local operator, positive weight) triple."""

    projection: SubspaceProjection
    local_op: LinOp
    weight: float

    def __post_init__(self):
        if not (float(self.weight) > 0.0 and np.isfinite(self.weight)):
            raise ValueError(f"weight must be > 0, got {self.weight}")
        object.__setattr__(self, "weight", float(self.weight))
        if self.local_op.cols != self.projection.dim:
            raise ValueError(
                f"local operator acts on R^{self.local_op.cols} but projection "
                f"lives on R^{self.projection.dim}")

    @property
    def block_dim(self) -> int:
        return self.local_op.rows

    def composite(self) -> np.ndarray:
        """The d_i x n matrix L_i P_i (unweighted)."""
        return self.local_op.matrix @ self.projection.matrix


@dataclass(frozen=True)
class GPFusionFrame:
    """A p-normed space together with a nonempty list of weighted triples."""

    space: PNormSpace
    triples: tuple

    def __post_init__(self):
        triples = tuple(self.triples)
        if not triples:
            raise ValueError("a family needs at least one triple")
        for i, t in enumerate(triples):
            if not isinstance(t, WeightedTriple):
                raise ValueError(f"triple {i} is not a WeightedTriple")
            if t.projection.dim != self.space.dim:
                raise ValueError(
                    f"triple {i} acts on R^{t.projection.dim}, expected R^{self.space.dim}")
        object.__setattr__(self, "triples", triples)

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def p(self) -> float:
        return self.space.p

    @property
    def q(self) -> float:
        return self.space.q

    def __len__(self) -> int:
        return len(self.triples)

    @property
    def block_dims(self) -> tuple:
        return tuple(t.block_dim for t in self.triples)

    @property
    def total_block_dim(self) -> int:
        return sum(self.block_dims)

    @cached_property
    def stacked_matrix(self) -> np.ndarray:
        """Row-stacked weighted composites v_i L_i P_i."""
        rows = [t.weight * t.composite() for t in self.triples]
        s = np.vstack(rows)
        s.setflags(write=False)
        return s

    @property
    def synthesis_matrix(self) -> np.ndarray:
        """n x (sum d_i) matrix reconstructing from coefficient blocks."""
        return self.stacked_matrix.T

    @cached_property
    def _rank(self) -> int:
        s = np.linalg.svd(self.stacked_matrix, compute_uv=False)
        if s.size == 0 or s[0] == 0.0:
            return 0
        return int(np.sum(s > RANK_RTOL * s[0]))

    def split_blocks(self, flat: np.ndarray) -> list:
        out = []
        pos = 0
        for d in self.block_dims:
            out.append(flat[pos:pos + d])
            pos += d
        return out


def identity_frame(dim: int, p: float) -> GPFusionFrame:
    """The single-triple family (identity projection, identity, weight 1)."""
    eye = np.eye(dim)
    triple = WeightedTriple(make_projection(eye), LinOp(eye), 1.0)
    return GPFusionFrame(PNormSpace(dim, p), (triple,))


def analysis_apply(frame: GPFusionFrame, f) -> MixedSeq:
    """Encode f as the block sequence {v_i L_i P_i f}."""
    f = np.asarray(f, dtype=float)
    if f.shape != (frame.dim,):
        raise ValueError(f"expected vector of length {frame.dim}, got shape {f.shape}")
    flat = frame.stacked_matrix @ f
    return MixedSeq(tuple(frame.split_blocks(flat)), frame.p)


def synthesis_apply(frame: GPFusionFrame, g: DualMixedSeq) -> np.ndarray:
    """Reconstruct the functional sum_i v_i P_i^T L_i^T g_i from blocks g.

    Returns the coefficient vector of a functional on the ambient space
    (measured in the dual q-norm).
    """
    if g.block_dims != frame.block_dims:
        raise ValueError(
            f"block shape mismatch: {g.block_dims} vs {frame.block_dims}")
    if abs(1.0 / frame.p + 1.0 / g.q - 1.0) > DUAL_EXPONENT_RTOL:
        raise ValueError(f"exponent {g.q} is not dual to {frame.p}")
    return frame.synthesis_matrix @ g.concat()


def estimate_bounds(frame: GPFusionFrame, restarts: int = 20, seed: int = 0,
                    use_p2_exact: bool = True) -> tuple:
    """(lower, upper) estimates of the frame bounds A and B.

    For p = 2 and ``use_p2_exact`` the singular-value route returns
    certified values; otherwise seeded gradient restarts are used.
    """
    s = frame.stacked_matrix
    if frame.p == 2.0 and use_p2_exact:
        return p2_exact_estimates(s)
    lo = _inf_of_matrix(s, frame.p, restarts, seed)
    hi = _sup_of_matrix(s, frame.p, restarts, seed)
    return lo, hi


@dataclass(frozen=True)
class FrameClassification:
    """Estimated bounds plus the verdict of the classification rules."""

    label: str
    lower_bound: BoundEstimate
    bessel_bound: BoundEstimate
    injective: bool
    tight_tol: float

    def is_frame(self) -> bool:
        return self.label in (FRAME, TIGHT, PARSEVAL)


def classify(frame: GPFusionFrame, restarts: int = 20, seed: int = 0,
             use_p2_exact: bool = True, tight_tol: float = 1e-6) -> FrameClassification:
    """Classify the family: not-frame, bessel-only, frame, tight, parseval.

    Not-frame is decided by an exact kernel test on the stacked
    composite (every finite family is Bessel, so failing the lower
    inequality means a nontrivial kernel).  Tightness compares the
    estimated bounds at ``tight_tol`` relative gap; Parseval further
    requires the common bound to be 1 within the same tolerance.
    Bessel-only is reserved for the numerically degenerate case of a
    full-rank stack whose estimated lower bound is indistinguishable
    from zero.
    """
    lo, hi = estimate_bounds(frame, restarts, seed, use_p2_exact)
    injective = frame._rank == frame.dim
    if not injective:
        label = NOT_FRAME
    elif lo.value <= 1e-12 * max(1.0, hi.value):
        label = BESSEL_ONLY
    else:
        label = FRAME
        if abs(lo.value - hi.value) <= tight_tol * hi.value:
            label = TIGHT
            if abs(lo.value - 1.0) <= tight_tol:
                label = PARSEVAL
    return FrameClassification(label, lo, hi, injective, tight_tol)


def rescale_to_parseval(frame: GPFusionFrame, restarts: int = 20, seed: int = 0,
                        use_p2_exact: bool = True, tight_tol: float = 1e-6) -> GPFusionFrame:
    """Divide every local operator by the common bound of a tight family.

    Requires the family to classify as tight (or parseval); the result
    classifies as parseval.
    """
    cls = classify(frame, restarts, seed, use_p2_exact, tight_tol)
    if cls.label not in (TIGHT, PARSEVAL):
        raise ValueError(f"rescaling requires a tight family, got {cls.label}")
    a = cls.lower_bound.value
    triples = tuple(
        WeightedTriple(t.projection, LinOp(t.local_op.matrix / a), t.weight)
        for t in frame.triples)
    return GPFusionFrame(frame.space, triples)


def is_gf_complete(frame: GPFusionFrame) -> bool:
    """True iff only the zero vector is annihilated by every composite."""
    return frame._rank == frame.dim


@dataclass(frozen=True)
class RieszReport:
    """Result of the two-sided reconstruction-norm sandwich test.

    ``lower_sandwich`` / ``upper_sandwich`` are the extreme ratios
    ||synthesis(g)||_q over unit dual mixed norm, minimized/maximized
    over block subsets (witnesses are embedded into the full block
    structure, so they remain feasible for the whole family).
    """

    gf_complete: bool
    lower_sandwich: BoundEstimate
    upper_sandwich: BoundEstimate
    is_riesz: bool
    subset_mode: str        # "exhaustive" | "sampled"
    subsets_checked: int
    binding_subset: tuple


def _synthesis_block_columns(frame: GPFusionFrame) -> list:
    cols = []
    pos = 0
    for d in frame.block_dims:
        cols.append(list(range(pos, pos + d)))
        pos += d
    return cols


def check_riesz(frame: GPFusionFrame, restarts: int = 20, seed: int = 0,
                max_exhaustive: int = 8, sampled_subsets: int = 64) -> RieszReport:
    """Test the Riesz-basis property of the family.

    The reconstruction map must be bounded above and below on dual
    coefficient blocks supported on any subset of the index set.  All
    subsets are checked exhaustively up to ``max_exhaustive`` triples;
    beyond that, seeded random subsets (plus the full set) are sampled.
    The exact verdict uses the rank of the stacked composite: the
    family is a Riesz basis iff the stack is injective and the
    reconstruction map has no kernel (square full-rank system).
    """
    m = len(frame)
    q = frame.q
    synth = frame.synthesis_matrix
    col_groups = _synthesis_block_columns(frame)
    total = frame.total_block_dim

    if m <= max_exhaustive:
        subsets = [tuple(js) for r in range(1, m + 1)
                   for js in itertools.combinations(range(m), r)]
        mode = "exhaustive"
    else:
        rng = make_rng(seed, _SUBSET_STREAM)
        chosen = {tuple(range(m))}
        while len(chosen) < sampled_subsets:
            mask = rng.random(m) < 0.5
            if mask.any():
                chosen.add(tuple(np.flatnonzero(mask)))
        subsets = sorted(chosen)
        mode = "sampled"

    best_lo = None
    best_hi = None
    for js in subsets:
        cols = [c for j in js for c in col_groups[j]]
        sub = synth[:, cols]
        if q == 2.0:
            lo, hi = p2_exact_estimates(sub)
        else:
            lo = _inf_of_matrix(sub, q, restarts, seed)
            hi = _sup_of_matrix(sub, q, restarts, seed)
        lo_full = _embed_witness(lo, cols, total)
        hi_full = _embed_witness(hi, cols, total)
        if best_lo is None or lo.value < best_lo[0].value:
            best_lo = (lo_full, js)
        if best_hi is None or hi.value > best_hi[0].value:
            best_hi = (hi_full, js)

    gf_complete = frame._rank == frame.dim
    synthesis_injective = frame._rank == total
    riesz = gf_complete and synthesis_injective
    return RieszReport(gf_complete, best_lo[0], best_hi[0], riesz, mode,
                       len(subsets), best_lo[1])


def _embed_witness(est: BoundEstimate, cols, total) -> BoundEstimate:
    w = np.zeros(total)
    w[cols] = est.witness
    return BoundEstimate(est.value, w, est.kind, est.method, est.certified,
                         est.p, est.restarts, est.seed, est.restart_index,
                         est.converged, est.kernel_detected)


@dataclass(frozen=True)
class DualityReport:
    """Worst normalized mismatch between the two pairing orders."""

    max_residual: float
    samples: int
    seed: int


def verify_duality(frame: GPFusionFrame, samples: int = 100, seed: int = 0) -> DualityReport:
    """Check <encode(f), g> == <f, reconstruct(g)> on random pairs.

    The residual is normalized by 1 + ||S||_F ||f|| ||g||; the two sides
    are the same bilinear form evaluated in different association
    orders, so the residual reflects floating-point noise only.
    """
    rng = make_rng(seed, _SAMPLE_STREAM)
    s = frame.stacked_matrix
    sf = np.linalg.norm(s)
    worst = 0.0
    for _ in range(samples):
        f = rng.standard_normal(frame.dim)
        gflat = rng.standard_normal(frame.total_block_dim)
        g = DualMixedSeq(tuple(_split(gflat, frame.block_dims)), frame.q)
        lhs = float((s @ f) @ gflat)
        rhs = float(f @ synthesis_apply(frame, g))
        denom = 1.0 + sf * np.linalg.norm(f) * np.linalg.norm(gflat)
        worst = max(worst, abs(lhs - rhs) / denom)
    return DualityReport(worst, samples, seed)


def _split(flat, dims):
    out = []
    pos = 0
    for d in dims:
        out.append(flat[pos:pos + d])
        pos += d
    return out


@dataclass(frozen=True)
class SurjectivityReport:
    """Rank-based equivalence checks between frame-ness and surjectivity.

    ``frame_iff_synthesis_surjective`` records whether the family is a
    frame exactly when the reconstruction matrix has full row rank.
    ``riesz_iff_full_range`` compares the Riesz property with the
    encoding map being onto the whole block space; it is None when the
    family is not a frame (the comparison presupposes a frame).
    """

    is_frame: bool
    synthesis_surjective: bool
    frame_iff_synthesis_surjective: bool
    analysis_surjective: bool
    is_riesz: bool
    riesz_iff_full_range: bool | None
    rank: int
    dim: int
    total_block_dim: int


def verify_surjectivity_characterization(frame: GPFusionFrame, restarts: int = 20,
                                         seed: int = 0) -> SurjectivityReport:
    rank = frame._rank
    cls = classify(frame, restarts, seed)
    is_frame = cls.is_frame()
    synth_surjective = rank == frame.dim
    analysis_surjective = rank == frame.total_block_dim
    riesz = synth_surjective and analysis_surjective
    equiv = is_frame == synth_surjective
    riesz_equiv = (riesz == analysis_surjective) if is_frame else None
    return SurjectivityReport(is_frame, synth_surjective, equiv,
                              analysis_surjective, riesz, riesz_equiv,
                              rank, frame.dim, frame.total_block_dim)
