import numpy as np
import pytest

from pfusion.bounds import (
    grid_oracle,
    inf_ratio,
    lower_bound_constant,
    operator_p_norm,
    p2_exact_bounds,
    sup_ratio,
)
from pfusion.frameio import random_frame
from pfusion.seeding import make_rng
from pfusion.spaces import MixedSeq, p_norm


def single_block(matrix, p):
    m = np.asarray(matrix, dtype=float)
    return lambda f: MixedSeq((m @ f,), p)


def two_identity_blocks(p):
    return lambda f: MixedSeq((f.copy(), f.copy()), p)


class TestSupRatio:
    def test_identity(self):
        est = sup_ratio(single_block(np.eye(2), 2.0), 2, 2.0, restarts=4, seed=0)
        assert est.value == pytest.approx(1.0, rel=1e-9)

    def test_diagonal_gives_largest_singular_value(self):
        est = sup_ratio(single_block(np.diag([3.0, 1.0]), 2.0), 2, 2.0,
                        restarts=8, seed=0)
        assert est.value == pytest.approx(3.0, rel=1e-9)

    def test_two_identity_blocks_sqrt2(self):
        # (||f||^2 + ||f||^2)^(1/2) / ||f||
        est = sup_ratio(two_identity_blocks(2.0), 2, 2.0, restarts=8, seed=0)
        assert est.value == pytest.approx(np.sqrt(2.0), rel=1e-9)

    def test_witness_reproduces_value(self):
        m = make_rng(9).standard_normal((4, 3))
        est = sup_ratio(single_block(m, 2.5), 3, 2.5, restarts=8, seed=1)
        assert p_norm(est.witness, 2.5) == pytest.approx(1.0, abs=1e-9)
        re_eval = p_norm(m @ est.witness, 2.5)
        assert re_eval == pytest.approx(est.value, rel=1e-9)

    def test_nonlinear_map_rejected(self):
        def crooked(f):
            return MixedSeq((f + 1.0,), 2.0)
        with pytest.raises(ValueError, match="linearity"):
            sup_ratio(crooked, 2, 2.0, restarts=2, seed=0)


class TestInfRatio:
    def test_identity_r3(self):
        est = inf_ratio(single_block(np.eye(3), 2.0), 3, 2.0, restarts=8, seed=0)
        assert est.value == pytest.approx(1.0, rel=1e-9)

    def test_diagonal_gives_smallest_singular_value(self):
        est = inf_ratio(single_block(np.diag([3.0, 1.0]), 2.0), 2, 2.0,
                        restarts=8, seed=0)
        assert est.value == pytest.approx(1.0, rel=1e-9)

    def test_rank_deficient_detects_kernel(self):
        est = inf_ratio(single_block([[1.0, 0.0], [1.0, 0.0]], 2.0), 2, 2.0,
                        restarts=4, seed=0)
        assert est.kernel_detected
        assert est.value <= 1e-12
        # kernel is span(e2)
        assert abs(est.witness[0]) <= 1e-10


class TestExactP2:
    def test_identity_stack(self):
        assert p2_exact_bounds(np.eye(3)) == pytest.approx((1.0, 1.0))

    def test_coordinate_split_is_permutation(self):
        stacked = np.vstack([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
        a, b = p2_exact_bounds(stacked)
        assert (a, b) == pytest.approx((1.0, 1.0))

    def test_homogeneous_block(self):
        assert p2_exact_bounds(2.0 * np.eye(2)) == pytest.approx((2.0, 2.0))

    def test_wide_matrix_has_zero_lower(self):
        a, b = p2_exact_bounds(np.ones((1, 2)))
        assert a == 0.0
        assert b == pytest.approx(np.sqrt(2.0))


class TestGridOracle:
    def test_identity_p3(self):
        gb = grid_oracle(single_block(np.eye(2), 3.0), 2, 3.0, resolution=1e-3)
        assert gb.lower == pytest.approx(1.0, abs=1e-6)
        assert gb.upper == pytest.approx(1.0, abs=1e-6)
        assert gb.certified

    def test_diag_p2_matches_singular_values(self):
        gb = grid_oracle(single_block(np.diag([2.0, 1.0]), 2.0), 2, 2.0,
                         resolution=1e-3)
        assert gb.lower == pytest.approx(1.0, abs=1e-3)
        assert gb.upper == pytest.approx(2.0, abs=1e-3)

    def test_sum_functional_attains_hoelder_equality(self):
        # sup of |f1 + f2| over the unit 1.5-sphere is 2**(1/q), q = 3,
        # attained at the symmetric point
        def summed(f):
            return MixedSeq((np.array([f[0] + f[1]]),), 1.5)
        gb = grid_oracle(summed, 2, 1.5, resolution=1e-3)
        assert gb.upper == pytest.approx(2.0 ** (1.0 / 3.0), abs=1e-6)
        w = gb.upper_witness
        assert w[0] == pytest.approx(w[1], abs=1e-2)

    def test_slack_encloses_truth(self):
        m = make_rng(17).standard_normal((3, 2))
        gb = grid_oracle(single_block(m, 2.0), 2, 2.0, resolution=5e-3)
        a, b = p2_exact_bounds(m)
        assert gb.lower - gb.slack <= a <= gb.lower + 1e-12
        assert gb.upper - 1e-12 <= b <= gb.upper + gb.slack

    def test_dim_one(self):
        gb = grid_oracle(single_block([[2.0]], 2.0), 1, 2.0)
        assert (gb.lower, gb.upper) == pytest.approx((2.0, 2.0))
        assert gb.slack == 0.0

    def test_dim_three(self):
        gb = grid_oracle(single_block(np.diag([1.0, 2.0, 3.0]), 2.0), 3, 2.0,
                         resolution=5e-3)
        assert gb.lower == pytest.approx(1.0, abs=5e-3)
        assert gb.upper == pytest.approx(3.0, abs=5e-3)

    def test_unsupported_dim(self):
        with pytest.raises(ValueError, match="dim"):
            grid_oracle(single_block(np.eye(4), 2.0), 4, 2.0)


class TestLowerBoundConstant:
    def test_identity(self):
        assert lower_bound_constant(np.eye(2), 2.0).value == pytest.approx(1.0)

    def test_diag_sigma_min(self):
        est = lower_bound_constant(np.diag([3.0, 1.0]), 2.0)
        assert est.value == pytest.approx(1.0)
        assert est.certified

    def test_rank_one_square(self):
        est = lower_bound_constant(np.array([[1.0, 0.0], [1.0, 0.0]]), 2.0)
        assert est.value <= 1e-12


class TestEstimatorProperties:
    def test_matches_exact_p2_on_seeded_instances(self):
        worst = 0.0
        for k in range(50):
            frame = random_frame(dim=3 + k % 4, block_dims=[1 + k % 3, 2, 3],
                                 p=2.0, seed=1000 + k)
            s = frame.stacked_matrix
            a_ex, b_ex = p2_exact_bounds(s)
            if a_ex < 0.05 * b_ex:
                continue
            lo, hi = (lower_bound_constant(s, 2.0), operator_p_norm(s, 2.0))
            assert lo.value == pytest.approx(a_ex, rel=1e-12)
            lo_g = inf_ratio(single_block(s, 2.0), s.shape[1], 2.0,
                             restarts=20, seed=k)
            hi_g = sup_ratio(single_block(s, 2.0), s.shape[1], 2.0,
                             restarts=20, seed=k)
            worst = max(worst, abs(lo_g.value - a_ex) / a_ex,
                        abs(hi_g.value - b_ex) / b_ex)
        assert worst <= 1e-3

    def test_matches_grid_oracle_off_p2(self):
        for p in (1.5, 3.0):
            for k in range(5):
                frame = random_frame(dim=2, block_dims=[1, 2], p=p, seed=2000 + k)
                s = frame.stacked_matrix
                gb = grid_oracle(single_block(s, p), 2, p, resolution=1e-3)
                lo = inf_ratio(single_block(s, p), 2, p, restarts=20, seed=k)
                hi = sup_ratio(single_block(s, p), 2, p, restarts=20, seed=k)
                assert lo.value == pytest.approx(gb.lower, rel=1e-2)
                assert hi.value == pytest.approx(gb.upper, rel=1e-2)

    def test_homogeneity_under_scaling(self):
        m = make_rng(23).standard_normal((4, 3))
        for p in (1.5, 2.0, 3.0):
            lo1 = inf_ratio(single_block(m, p), 3, p, restarts=6, seed=5)
            hi1 = sup_ratio(single_block(m, p), 3, p, restarts=6, seed=5)
            lo2 = inf_ratio(single_block(2.0 * m, p), 3, p, restarts=6, seed=5)
            hi2 = sup_ratio(single_block(2.0 * m, p), 3, p, restarts=6, seed=5)
            assert lo2.value == pytest.approx(2.0 * lo1.value, rel=1e-12)
            assert hi2.value == pytest.approx(2.0 * hi1.value, rel=1e-12)

    def test_adding_a_block_never_decreases_either_bound(self):
        rng = make_rng(29)
        for _ in range(20):
            base = rng.standard_normal((3, 3))
            extra = rng.standard_normal((2, 3))
            grown = np.vstack([base, extra])
            a0, b0 = p2_exact_bounds(base)
            a1, b1 = p2_exact_bounds(grown)
            assert a1 >= a0 - 1e-12
            assert b1 >= b0 - 1e-12
            # pointwise: the ratio itself can only grow
            for _ in range(10):
                f = rng.standard_normal(3)
                assert (np.linalg.norm(grown @ f)
                        >= np.linalg.norm(base @ f) - 1e-12)

    def test_deterministic_for_fixed_seed(self):
        m = make_rng(31).standard_normal((5, 4))
        a = sup_ratio(single_block(m, 1.7), 4, 1.7, restarts=8, seed=3)
        b = sup_ratio(single_block(m, 1.7), 4, 1.7, restarts=8, seed=3)
        assert a.value == b.value
        np.testing.assert_array_equal(a.witness, b.witness)

    def test_sup_never_exceeds_and_inf_never_undercuts_truth(self):
        # witness-certified one-sided bounds against the exact p = 2 answer
        rng = make_rng(37)
        for _ in range(10):
            m = rng.standard_normal((4, 4))
            a_ex, b_ex = p2_exact_bounds(m)
            lo = inf_ratio(single_block(m, 2.0), 4, 2.0, restarts=3, seed=0)
            hi = sup_ratio(single_block(m, 2.0), 4, 2.0, restarts=3, seed=0)
            assert hi.value <= b_ex * (1.0 + 1e-12)
            assert lo.value >= a_ex * (1.0 - 1e-12)
