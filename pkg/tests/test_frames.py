import numpy as np
import pytest

from pfusion.frames import (
    FRAME,
    NOT_FRAME,
    PARSEVAL,
    TIGHT,
    GPFusionFrame,
    WeightedTriple,
    analysis_apply,
    check_riesz,
    classify,
    estimate_bounds,
    identity_frame,
    is_gf_complete,
    rescale_to_parseval,
    synthesis_apply,
    verify_duality,
    verify_surjectivity_characterization,
)
from pfusion.bounds import operator_p_norm, p2_exact_bounds
from pfusion.frameio import random_frame
from pfusion.linops import LinOp, make_projection
from pfusion.seeding import make_rng
from pfusion.spaces import DualMixedSeq, PNormSpace, dual_exponent, mixed_norm


def simple_frame(lambdas, p=2.0, weights=None, dim=None):
    """Triples with identity projections from a list of operator matrices."""
    mats = [np.atleast_2d(np.asarray(m, dtype=float)) for m in lambdas]
    n = dim if dim is not None else mats[0].shape[1]
    eye = np.eye(n)
    weights = weights or [1.0] * len(mats)
    triples = tuple(
        WeightedTriple(make_projection(eye), LinOp(m), w)
        for m, w in zip(mats, weights))
    return GPFusionFrame(PNormSpace(n, p), triples)


def coordinate_frame(p=2.0):
    """Two triples picking out the two coordinates of R^2."""
    return simple_frame([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], p=p)


class TestWeightedTriple:
    def test_weight_must_be_positive(self):
        with pytest.raises(ValueError, match="weight"):
            WeightedTriple(make_projection(np.eye(2)), LinOp(np.eye(2)), 0.0)
        with pytest.raises(ValueError, match="weight"):
            WeightedTriple(make_projection(np.eye(2)), LinOp(np.eye(2)), -1.0)

    def test_shape_compatibility(self):
        with pytest.raises(ValueError, match="acts on"):
            WeightedTriple(make_projection(np.eye(3)), LinOp(np.eye(2)), 1.0)

    def test_empty_family_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            GPFusionFrame(PNormSpace(2, 2.0), ())


class TestAnalysis:
    def test_identity_frame(self):
        seq = analysis_apply(identity_frame(2, 2.0), [1.0, 2.0])
        np.testing.assert_allclose(seq.blocks[0], [1.0, 2.0])

    def test_coordinate_triples(self):
        seq = analysis_apply(coordinate_frame(), [3.0, 4.0])
        np.testing.assert_allclose(seq.blocks[0], [3.0, 0.0])
        np.testing.assert_allclose(seq.blocks[1], [0.0, 4.0])

    def test_zero_maps_to_zero(self):
        frame = random_frame(3, [2, 1], 2.0, seed=4)
        seq = analysis_apply(frame, np.zeros(3))
        assert mixed_norm(seq) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="length 2"):
            analysis_apply(identity_frame(2, 2.0), [1.0, 2.0, 3.0])

    def test_weights_enter_linearly(self):
        frame = simple_frame([np.eye(2)], weights=[2.5])
        seq = analysis_apply(frame, [1.0, 0.0])
        np.testing.assert_allclose(seq.blocks[0], [2.5, 0.0])


class TestSynthesis:
    def test_identity_frame(self):
        frame = identity_frame(2, 2.0)
        g = DualMixedSeq(([1.0, 2.0],), 2.0)
        np.testing.assert_allclose(synthesis_apply(frame, g), [1.0, 2.0])

    def test_coordinate_triples(self):
        g = DualMixedSeq(([1.0, 0.0], [0.0, 1.0]), 2.0)
        np.testing.assert_allclose(synthesis_apply(coordinate_frame(), g), [1.0, 1.0])

    def test_zero_functional(self):
        frame = random_frame(3, [2, 2], 2.0, seed=5)
        g = DualMixedSeq((np.zeros(2), np.zeros(2)), 2.0)
        np.testing.assert_allclose(synthesis_apply(frame, g), np.zeros(3))

    def test_block_shape_mismatch(self):
        frame = identity_frame(2, 2.0)
        with pytest.raises(ValueError, match="block shape"):
            synthesis_apply(frame, DualMixedSeq(([1.0],), 2.0))

    def test_exponent_must_be_dual(self):
        frame = identity_frame(2, 3.0)
        with pytest.raises(ValueError, match="dual"):
            synthesis_apply(frame, DualMixedSeq(([1.0, 0.0],), 2.0))

    def test_order_independence_of_the_sum(self):
        # finite shadow of unconditional convergence: permuting the
        # triples (and the coefficient blocks with them) leaves the
        # reconstruction unchanged up to float noise
        frame = random_frame(4, [2, 1, 3, 2], 2.0, seed=6)
        rng = make_rng(6, 99)
        gflat = rng.standard_normal(frame.total_block_dim)
        blocks = []
        pos = 0
        for d in frame.block_dims:
            blocks.append(gflat[pos:pos + d])
            pos += d
        base = synthesis_apply(frame, DualMixedSeq(tuple(blocks), frame.q))
        for _ in range(10):
            perm = rng.permutation(len(frame))
            pframe = GPFusionFrame(frame.space,
                                   tuple(frame.triples[i] for i in perm))
            pg = DualMixedSeq(tuple(blocks[i] for i in perm), frame.q)
            permuted = synthesis_apply(pframe, pg)
            assert np.linalg.norm(permuted - base) <= 1e-10 * (1.0 + np.linalg.norm(base))


class TestEstimateBounds:
    def test_identity_frame_any_p(self):
        for p in (1.5, 2.0, 3.0):
            lo, hi = estimate_bounds(identity_frame(2, p), restarts=4, seed=0)
            assert lo.value == pytest.approx(1.0, rel=1e-9)
            assert hi.value == pytest.approx(1.0, rel=1e-9)

    def test_scaled_identity_homogeneity(self):
        for c in (0.5, 2.0, 5.0):
            lo, hi = estimate_bounds(simple_frame([c * np.eye(2)]), restarts=4)
            assert lo.value == pytest.approx(c, rel=1e-12)
            assert hi.value == pytest.approx(c, rel=1e-12)

    def test_coordinate_frame_is_parseval(self):
        lo, hi = estimate_bounds(coordinate_frame())
        assert (lo.value, hi.value) == pytest.approx((1.0, 1.0))
        assert lo.certified and hi.certified

    def test_gradient_route_matches_exact(self):
        frame = random_frame(4, [2, 3], 2.0, seed=7)
        exact = p2_exact_bounds(frame.stacked_matrix)
        lo, hi = estimate_bounds(frame, restarts=20, seed=1, use_p2_exact=False)
        assert lo.value == pytest.approx(exact[0], rel=1e-6)
        assert hi.value == pytest.approx(exact[1], rel=1e-6)

    def test_monotone_weights(self):
        frame = random_frame(3, [2, 2], 2.0, seed=8)
        scaled = GPFusionFrame(frame.space, tuple(
            WeightedTriple(t.projection, t.local_op, 3.0 * t.weight)
            for t in frame.triples))
        lo0, hi0 = estimate_bounds(frame)
        lo1, hi1 = estimate_bounds(scaled)
        assert lo1.value == pytest.approx(3.0 * lo0.value, rel=1e-12)
        assert hi1.value == pytest.approx(3.0 * hi0.value, rel=1e-12)


class TestClassify:
    def test_identity_is_parseval(self):
        assert classify(identity_frame(3, 2.0)).label == PARSEVAL

    def test_doubled_identity_is_tight(self):
        cls = classify(simple_frame([2.0 * np.eye(2)]))
        assert cls.label == TIGHT
        assert cls.lower_bound.value == pytest.approx(2.0)
        assert cls.bessel_bound.value == pytest.approx(2.0)

    def test_rank_one_family_is_not_frame(self):
        cls = classify(simple_frame([[[1.0, 0.0]]]))
        assert cls.label == NOT_FRAME
        assert not cls.injective

    def test_generic_full_rank_is_frame(self):
        cls = classify(random_frame(3, [2, 2], 2.0, seed=9))
        assert cls.label in (FRAME, TIGHT, PARSEVAL)
        assert cls.lower_bound.value > 0.0

    def test_frame_implies_positive_lower_bound(self):
        for k in range(10):
            cls = classify(random_frame(3, [1, 2, 2], 2.0, seed=30 + k))
            if cls.is_frame():
                assert cls.lower_bound.value > 0.0

    def test_injectivity_equals_positive_lower(self):
        # closed-range shadow: A > 0 exactly when the stack is injective
        good = classify(random_frame(3, [2, 2], 2.0, seed=10))
        assert good.injective and good.lower_bound.value > 1e-8
        bad = classify(random_frame(3, [2, 2], 2.0, seed=10, target="notframe"))
        assert not bad.injective and bad.lower_bound.value <= 1e-10


class TestRescaleToParseval:
    def test_doubled_identity(self):
        frame = simple_frame([2.0 * np.eye(2)])
        rescaled = rescale_to_parseval(frame)
        lo, hi = estimate_bounds(rescaled)
        assert (lo.value, hi.value) == pytest.approx((1.0, 1.0))
        assert classify(rescaled).label == PARSEVAL

    def test_already_parseval_unchanged(self):
        frame = random_frame(3, [2, 2], 2.0, seed=11, target="parseval")
        rescaled = rescale_to_parseval(frame)
        for t0, t1 in zip(frame.triples, rescaled.triples):
            np.testing.assert_allclose(t1.local_op.matrix, t0.local_op.matrix,
                                       rtol=0.0, atol=1e-12)

    def test_p3_scaled_identity(self):
        frame = simple_frame([5.0 * np.eye(2)], p=3.0)
        rescaled = rescale_to_parseval(frame, restarts=8)
        lo, hi = estimate_bounds(rescaled, restarts=8)
        assert lo.value == pytest.approx(1.0, abs=1e-9)
        assert hi.value == pytest.approx(1.0, abs=1e-9)

    def test_non_tight_rejected(self):
        frame = simple_frame([np.diag([1.0, 2.0])])
        with pytest.raises(ValueError, match="tight"):
            rescale_to_parseval(frame)


class TestGfComplete:
    def test_identity_frame(self):
        assert is_gf_complete(identity_frame(2, 2.0))

    def test_single_rank_one_triple(self):
        assert not is_gf_complete(simple_frame([[[1.0, 0.0]]]))

    def test_coordinate_frame(self):
        assert is_gf_complete(coordinate_frame())


class TestCheckRiesz:
    def test_identity_frame(self):
        rep = check_riesz(identity_frame(2, 2.0))
        assert rep.is_riesz and rep.gf_complete
        assert rep.lower_sandwich.value == pytest.approx(1.0)
        assert rep.upper_sandwich.value == pytest.approx(1.0)
        assert rep.subset_mode == "exhaustive"

    def test_coordinate_selectors_are_riesz(self):
        # one-dimensional blocks selecting each coordinate: the
        # reconstruction matrix is the identity up to permutation
        frame = simple_frame([[[1.0, 0.0]], [[0.0, 1.0]]])
        rep = check_riesz(frame)
        assert rep.is_riesz
        assert rep.lower_sandwich.value == pytest.approx(1.0)
        assert rep.upper_sandwich.value == pytest.approx(1.0)

    def test_overcomplete_pair_is_not_riesz(self):
        frame = simple_frame([np.eye(1), np.eye(1)], dim=1)
        rep = check_riesz(frame)
        assert not rep.is_riesz
        assert rep.gf_complete          # still a frame
        assert rep.lower_sandwich.value <= 1e-12
        assert classify(frame).is_frame()

    def test_sandwich_matches_synthesis_singular_values(self):
        frame = random_frame(4, [2, 1, 1], 2.0, seed=12)
        if not check_riesz(frame).is_riesz:
            pytest.skip("seeded instance unexpectedly degenerate")
        rep = check_riesz(frame)
        a, b = p2_exact_bounds(frame.synthesis_matrix)
        assert rep.lower_sandwich.value == pytest.approx(a, rel=1e-9)
        assert rep.upper_sandwich.value == pytest.approx(b, rel=1e-9)

    def test_riesz_implies_frame_with_matching_constants(self):
        for p in (2.0, 1.5):
            frame = random_frame(3, [1, 1, 1], p, seed=13)
            rep = check_riesz(frame, restarts=40)
            if not rep.is_riesz:
                continue
            cls = classify(frame, restarts=40)
            assert cls.is_frame()
            # operator-norm duality: the sandwich equals the frame bounds
            assert rep.upper_sandwich.value == pytest.approx(
                cls.bessel_bound.value, rel=1e-6)
            assert rep.lower_sandwich.value == pytest.approx(
                cls.lower_bound.value, rel=1e-6)

    def test_sampled_mode_beyond_exhaustive_cutoff(self):
        frame = random_frame(3, [1] * 10, 2.0, seed=14)
        rep = check_riesz(frame, sampled_subsets=16)
        assert rep.subset_mode == "sampled"
        assert rep.subsets_checked == 16


class TestVerifyDuality:
    def test_identity_frame(self):
        rep = verify_duality(identity_frame(2, 2.0), samples=100, seed=0)
        assert rep.max_residual <= 1e-12

    def test_random_family(self):
        frame = random_frame(4, [2, 1, 2], 2.0, seed=15)
        rep = verify_duality(frame, samples=100, seed=1)
        assert rep.max_residual <= 1e-10

    def test_off_p2_family(self):
        frame = random_frame(3, [2, 2], 2.5, seed=16)
        rep = verify_duality(frame, samples=50, seed=2)
        assert rep.max_residual <= 1e-10


class TestBesselSynthesisNormAgreement:
    def test_synthesis_norm_equals_upper_bound_p2(self):
        # the reconstruction operator norm on dual blocks equals the
        # encoding upper bound (transpose duality of operator norms)
        frame = random_frame(4, [2, 3], 2.0, seed=17)
        _, hi = estimate_bounds(frame)
        t_norm = operator_p_norm(frame.synthesis_matrix, frame.q).value
        assert t_norm <= hi.value + 1e-6
        assert t_norm == pytest.approx(hi.value, rel=1e-9)

    def test_synthesis_norm_equals_upper_bound_p15(self):
        frame = random_frame(2, [1, 2], 1.5, seed=18)
        _, hi = estimate_bounds(frame, restarts=40, seed=0)
        t_norm = operator_p_norm(frame.synthesis_matrix, frame.q,
                                 restarts=40, seed=0).value
        assert t_norm <= hi.value + 1e-6
        assert t_norm == pytest.approx(hi.value, rel=1e-6)


class TestSurjectivityCharacterization:
    def test_identity_frame(self):
        rep = verify_surjectivity_characterization(identity_frame(2, 2.0))
        assert rep.is_frame and rep.synthesis_surjective
        assert rep.frame_iff_synthesis_surjective

    def test_rank_deficient(self):
        frame = random_frame(3, [2, 2], 2.0, seed=19, target="notframe")
        rep = verify_surjectivity_characterization(frame)
        assert not rep.is_frame and not rep.synthesis_surjective
        assert rep.frame_iff_synthesis_surjective

    def test_overcomplete_frame_is_not_riesz(self):
        frame = random_frame(3, [2, 2], 2.0, seed=20)
        rep = verify_surjectivity_characterization(frame)
        assert rep.is_frame and rep.synthesis_surjective
        assert not rep.analysis_surjective and not rep.is_riesz
        assert rep.riesz_iff_full_range

    def test_square_system_equivalences(self):
        frame = random_frame(3, [1, 1, 1], 2.0, seed=21)
        rep = verify_surjectivity_characterization(frame)
        if rep.is_frame:
            assert rep.analysis_surjective == rep.is_riesz
            assert rep.riesz_iff_full_range
