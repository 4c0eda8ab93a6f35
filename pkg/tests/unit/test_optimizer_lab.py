"""
Unit tests for the optimizer-sensitivity constructions.
"""
import math
from fractions import Fraction

import numpy as np
import pytest
from pydantic import ValidationError

from rate_distortion_lab.domain.errors import (
    InfeasibleConstructionError,
    InvalidParameterError,
    RegimeViolationError,
    TrivialMeasureError,
)
from rate_distortion_lab.domain.models import (
    BranchPair,
    DistortionMeasure,
    EnumerationTable,
    SourceDistribution,
    Verdict,
)
from rate_distortion_lab.services import optimizer_lab
from rate_distortion_lab.services.distortion import (
    d_max,
    frobenius_distance,
    generalized_erasure,
    hamming,
    r_trivial_columns,
)


class TestEnumerationTable:
    """Validation of enumeration tables"""

    def test_indices_for(self):
        """Steps at which a number is output, ascending"""
        table = EnumerationTable(pairs=((3, 7), (5, 2), (8, 7)))
        assert table.indices_for(7) == [3, 8]
        assert table.indices_for(4) == []

    def test_rejects_repeated_step(self):
        """Each step outputs one number"""
        with pytest.raises(ValidationError):
            EnumerationTable(pairs=((3, 7), (3, 2)))

    def test_rejects_step_zero(self):
        """Steps start at 1"""
        with pytest.raises(ValidationError):
            EnumerationTable(pairs=((0, 7),))


class TestDyadicPerturbation:
    """x_{n,m} and the cutoff index"""

    def setup_method(self):
        self.table = EnumerationTable(pairs=((10, 0), (3, 5)))

    def test_x_value_before_and_after_step(self):
        """x = 0 until the step that outputs n, then 2^-i"""
        assert optimizer_lab.x_value(self.table, 0, 9) == 0
        assert optimizer_lab.x_value(self.table, 0, 10) == Fraction(1, 1024)
        assert optimizer_lab.x_value(self.table, 0, 40) == Fraction(1, 1024)

    def test_x_value_ignores_steps_below_minimum(self):
        """Steps below the cutoff never perturb"""
        assert optimizer_lab.x_value(self.table, 5, 20) == Fraction(1, 8)
        assert optimizer_lab.x_value(self.table, 5, 20, min_index=4) == 0

    def test_cutoff_index(self):
        """Smallest m with 2^-m strictly below the budget"""
        assert optimizer_lab.cutoff_index(Fraction(1, 2)) == 2
        assert optimizer_lab.cutoff_index(Fraction(3, 4)) == 1
        assert optimizer_lab.cutoff_index(Fraction(1, 5)) == 3

    def test_cutoff_rejects_nonpositive_budget(self):
        """The budget must be positive"""
        with pytest.raises(InvalidParameterError):
            optimizer_lab.cutoff_index(Fraction(0))

    def test_source_convergence_bound(self):
        """The l1 distance respects 2 * 2^-min(m, m')"""
        distance, bound = optimizer_lab.source_convergence_bound(self.table, 0, 9, 12)
        assert distance == Fraction(2, 1024)
        assert distance <= bound == Fraction(2, 2**9)

    def test_perturbed_measures_converge_effectively(self):
        """Frobenius distance between steps m and m' is at most 2^-min(m, m') sqrt(K)"""
        table = EnumerationTable(pairs=((10, 0), (14, 3)))
        for K in (2, 3, 5):
            for n in (0, 3, 7):
                for m, m_other in ((5, 9), (9, 10), (10, 14), (12, 40), (14, 15)):
                    near = optimizer_lab.perturbed_measures(K, 0.2, table, n, m)
                    far = optimizer_lab.perturbed_measures(K, 0.2, table, n, m_other)
                    for a, b in zip(near, far):
                        assert frobenius_distance(a, b) <= 2.0 ** -min(m, m_other) * math.sqrt(K) + 1e-15

    def test_perturbed_measures(self):
        """Extra cost x lands on letter K+1, then on letter K"""
        first, second = optimizer_lab.perturbed_measures(2, 0.2, self.table, 0, 10)
        assert first.entries[0][2:] == (0.2, 0.2 + 2**-10)
        assert second.entries[0][2:] == (0.2 + 2**-10, 0.2)


class TestErasureBranchTest:
    """Erasure-letter branches"""

    def setup_method(self):
        self.table = EnumerationTable(pairs=((10, 0),))

    def test_unperturbed_pair_is_merged(self):
        """x = 0 answers with the family member on letter K for both problems"""
        pair = optimizer_lab.erasure_branch_test(2, 0.2, self.table, 0, 9, 0.15, 0.3)
        assert pair.x_value == 0.0
        assert pair.verdict == Verdict.MERGED
        assert pair.solver_1 == pair.solver_2 == "family"
        assert pair.family_endpoints is not None
        assert pair.tv_form == "unhalved"

    def test_perturbed_pair_is_separated(self):
        """x > 0 sends the erasure mass to different letters"""
        pair = optimizer_lab.erasure_branch_test(2, 0.2, self.table, 0, 10, 0.15, 0.3)
        assert pair.x_value == pytest.approx(2**-10)
        assert pair.verdict == Verdict.SEPARATED
        assert pair.solver_1 == pair.solver_2 == "analytic"
        assert pair.statistic == pytest.approx(pair.tv_branch, abs=1e-9)
        assert pair.statistic > 0.3

    def test_rates_move_continuously(self):
        """Branch rates stay close to the unperturbed rate"""
        merged = optimizer_lab.erasure_branch_test(2, 0.2, self.table, 0, 9, 0.15, 0.3)
        split = optimizer_lab.erasure_branch_test(2, 0.2, self.table, 0, 10, 0.15, 0.3)
        assert split.branch_1.rate_nats == pytest.approx(merged.branch_1.rate_nats, abs=1e-2)
        assert split.branch_2.rate_nats == pytest.approx(merged.branch_1.rate_nats, abs=1e-2)

    def test_target_below_mass_threshold(self):
        """D must be large enough for the erasure mass to exceed c"""
        with pytest.raises(RegimeViolationError):
            optimizer_lab.erasure_branch_test(2, 0.2, self.table, 0, 10, 0.05, 0.3)

    def test_threshold_range(self):
        """c lies in (0, 1)"""
        with pytest.raises(InvalidParameterError):
            optimizer_lab.erasure_branch_test(2, 0.2, self.table, 0, 10, 0.15, 1.0)


class TestBinaryBranchTests:
    """The two 2x2 constructions"""

    def setup_method(self):
        self.table = EnumerationTable(pairs=((10, 0),))

    def test_balanced_source(self):
        """Both column averages equal d01 d10 / (d01 + d10)"""
        p = optimizer_lab.binary_balanced_source(1.0, 3.0)
        assert p.probs == pytest.approx((0.75, 0.25))
        value, _ = d_max(p, DistortionMeasure(entries=((0.0, 1.0), (3.0, 0.0))))
        assert value == pytest.approx(0.75)

    def test_dmax_branches_separate(self):
        """x > 0 gives opposite point-mass optimizers, halved TV 1"""
        pair = optimizer_lab.binary_dmax_branch_test(1.0, 1.0, self.table, 0, 10)
        assert pair.verdict == Verdict.SEPARATED
        assert pair.statistic >= 0.5
        assert pair.tv_branch == pytest.approx(1.0)
        assert pair.branch_1.rate_nats == pair.branch_2.rate_nats == 0.0

    def test_dmax_branches_separate_below_float_resolution(self):
        """x d10 far below 1e-12 still picks opposite columns from the exact averages"""
        table = EnumerationTable(pairs=((41, 0),))
        pair = optimizer_lab.binary_dmax_branch_test(1.0, 1.0, table, 0, 41)
        assert pair.x_value == 2.0**-41
        assert pair.verdict == Verdict.SEPARATED
        assert pair.statistic >= 0.5
        assert pair.branch_1.channel.rows == ((1.0, 0.0), (1.0, 0.0))
        assert pair.branch_2.channel.rows == ((0.0, 1.0), (0.0, 1.0))

    def test_dmax_branches_merge_without_perturbation(self):
        """x = 0 compares the balanced optimizer with itself"""
        pair = optimizer_lab.binary_dmax_branch_test(1.0, 1.0, self.table, 0, 9)
        assert pair.verdict == Verdict.MERGED
        assert pair.statistic == 0.0
        assert pair.branch_1.rate_nats == pytest.approx(pair.branch_2.rate_nats, abs=1e-8)

    def test_zero_support_bound(self):
        """P(1|1) >= 1 - D / (p(1) d10)"""
        source = SourceDistribution(probs=(0.9, 0.1))
        assert optimizer_lab.binary_zero_support_bound(source, 2.0, 0.1) == pytest.approx(0.5)

    def test_zero_support_branches_separate(self):
        """The first problem must code letter 1, the second may not"""
        pair = optimizer_lab.binary_zero_support_branch_test(1.0, 1.0, self.table, 0, 10, 1.0)
        assert pair.verdict == Verdict.SEPARATED
        assert pair.statistic >= 0.25
        bound = optimizer_lab.binary_zero_support_bound(pair.problem_1.source, 1.0, pair.problem_1.D)
        assert pair.branch_1.channel.rows[1][1] >= bound - 1e-4

    def test_zero_support_scale_bound(self):
        """L must be at least max(1, d10 / 2)"""
        with pytest.raises(InvalidParameterError):
            optimizer_lab.binary_zero_support_branch_test(1.0, 4.0, self.table, 0, 10, 1.5)


class TestGeneralConstruction:
    """Active pairs, balancing and the general branch test"""

    def setup_method(self):
        self.table = EnumerationTable(pairs=((10, 0),))
        self.d = DistortionMeasure(
            entries=((0.0, 1.0, 1.0, 1.0), (1.0, 0.0, 1.0, 1.0), (1.0, 1.0, 0.0, 1.0))
        )

    def test_find_active_pairs_on_hamming(self):
        """Hamming(2) pairs letter 0 with column 0 and letter 1 with column 1"""
        assert optimizer_lab.find_active_pairs(hamming(2)) == (0, 1, 0, 1)

    def test_find_active_pairs_chases_rows(self):
        """Rows sharing a zero column are skipped until one pays for it"""
        d = DistortionMeasure(entries=((0.0, 1.0), (0.0, 2.0), (3.0, 0.0)))
        k1, k2, l1, l2 = optimizer_lab.find_active_pairs(d)
        m = d.as_array()
        assert m[k1, l1] == 0 and m[k2, l2] == 0
        assert m[k1, l2] > 0 and m[k2, l1] > 0

    def test_find_active_pairs_on_random_normal_measures(self):
        """Every returned quadruple has the zero and positive entries it promises"""
        rng = np.random.default_rng(23)
        checked = 0
        for _ in range(200):
            K, L = int(rng.integers(2, 6)), int(rng.integers(2, 6))
            matrix = rng.uniform(0.1, 1.0, size=(K, L))
            matrix[np.arange(K), rng.integers(0, L, size=K)] = 0.0
            matrix[rng.uniform(size=(K, L)) < 0.2] = 0.0
            d = DistortionMeasure.from_array(matrix)
            if r_trivial_columns(d):
                with pytest.raises(TrivialMeasureError):
                    optimizer_lab.find_active_pairs(d)
                continue
            k1, k2, l1, l2 = optimizer_lab.find_active_pairs(d)
            assert k1 != k2 and l1 != l2
            assert matrix[k1, l1] == 0.0 and matrix[k2, l2] == 0.0
            assert matrix[k1, l2] > 0.0 and matrix[k2, l1] > 0.0
            checked += 1
        assert checked > 50

    def test_find_active_pairs_rejects_non_normal(self):
        """Only normal measures have active pairs"""
        with pytest.raises(InvalidParameterError):
            optimizer_lab.find_active_pairs(DistortionMeasure(entries=((0.5, 1.0), (1.0, 0.0))))

    def test_find_active_pairs_rejects_free_column(self):
        """A free column makes R == 0"""
        with pytest.raises(TrivialMeasureError):
            optimizer_lab.find_active_pairs(DistortionMeasure(entries=((0.0, 1.0, 0.0), (1.0, 0.0, 0.0))))

    def test_balanced_hamming3(self):
        """Uniform seed on Hamming(3) balances to (5/12, 5/12, 1/6)"""
        masses = optimizer_lab.construct_balanced_exact(hamming(3), SourceDistribution.uniform(3))
        assert masses == [Fraction(5, 12), Fraction(5, 12), Fraction(1, 6)]

    def test_balanced_general_ties_active_columns(self):
        """Columns l1 and l2 tie and beat the rest"""
        p = optimizer_lab.construct_balanced_general(self.d, SourceDistribution.uniform(3))
        averages = p.as_array() @ self.d.as_array()
        assert averages[0] == pytest.approx(averages[1], abs=1e-15)
        assert min(averages[2:]) > averages[0]

    def test_balanced_general_seed_size(self):
        """The seed must match the source alphabet"""
        with pytest.raises(InvalidParameterError):
            optimizer_lab.construct_balanced_general(self.d, SourceDistribution.uniform(2))

    def test_general_test_on_hamming2_matches_binary(self):
        """Hamming(2) reproduces the binary D_max verdicts"""
        balanced = optimizer_lab.construct_balanced_general(hamming(2), SourceDistribution.uniform(2))
        for m in (9, 10):
            general = optimizer_lab.general_branch_test(hamming(2), balanced, self.table, 0, m)
            binary = optimizer_lab.binary_dmax_branch_test(1.0, 1.0, self.table, 0, m)
            assert general.verdict == binary.verdict

    def test_general_test_separates(self):
        """x > 0 gives statistic >= 1/2 on a 3x4 measure"""
        balanced = optimizer_lab.construct_balanced_general(self.d, SourceDistribution.uniform(3))
        pair = optimizer_lab.general_branch_test(self.d, balanced, self.table, 0, 10)
        assert pair.verdict == Verdict.SEPARATED
        assert pair.statistic >= 0.5
        assert pair.problem_1.D == pair.problem_2.D

    def test_general_test_separates_below_float_resolution(self):
        """A step-41 perturbation still separates on Hamming(2) and on the 3x4 measure"""
        table = EnumerationTable(pairs=((41, 0),))
        for d, seed in ((hamming(2), SourceDistribution.uniform(2)), (self.d, SourceDistribution.uniform(3))):
            balanced = optimizer_lab.construct_balanced_general(d, seed)
            pair = optimizer_lab.general_branch_test(d, balanced, table, 0, 41)
            assert pair.x_value == 2.0**-41
            assert pair.verdict == Verdict.SEPARATED
            assert pair.statistic >= 0.5
            assert pair.branch_1.rate_nats == pair.branch_2.rate_nats == 0.0

    def test_constant_dmax_keeps_dmax(self):
        """The alternative directions leave D_max at the balanced value"""
        balanced = optimizer_lab.construct_balanced_general(self.d, SourceDistribution.uniform(3))
        base, _ = d_max(balanced, self.d)
        pair = optimizer_lab.general_branch_test(self.d, balanced, self.table, 0, 10, constant_dmax=True)
        assert pair.problem_1.D == pytest.approx(base, abs=1e-12)
        assert pair.statistic >= 0.5

    def test_constant_dmax_needs_extra_letters(self):
        """Hamming(2) has no letters outside the active pair"""
        balanced = optimizer_lab.construct_balanced_general(hamming(2), SourceDistribution.uniform(2))
        with pytest.raises(InfeasibleConstructionError):
            optimizer_lab.general_branch_test(hamming(2), balanced, self.table, 0, 10, constant_dmax=True)

    def test_unbalanced_source_rejected(self):
        """The given source must tie the active columns"""
        with pytest.raises(InvalidParameterError):
            optimizer_lab.general_branch_test(hamming(2), SourceDistribution(probs=(0.6, 0.4)), self.table, 0, 10)

    def test_erasure_measure_has_active_pair(self):
        """Erasure measures are normal and have active pairs in the Hamming block"""
        assert optimizer_lab.find_active_pairs(generalized_erasure(2, 0.2, 0.3)) == (0, 1, 0, 1)


class TestBranchPairInvariants:
    """statistic >= tv_branch / 2 on every construction"""

    def setup_method(self):
        self.table = EnumerationTable(pairs=((10, 0),))

    def pairs(self):
        balanced = optimizer_lab.construct_balanced_general(hamming(3), SourceDistribution.uniform(3))
        for m in (9, 10):
            yield optimizer_lab.erasure_branch_test(2, 0.2, self.table, 0, m, 0.15, 0.3)
            yield optimizer_lab.binary_dmax_branch_test(1.0, 2.0, self.table, 0, m)
            yield optimizer_lab.binary_zero_support_branch_test(1.0, 1.0, self.table, 0, m, 1.0)
            yield optimizer_lab.general_branch_test(hamming(3), balanced, self.table, 0, m)

    def test_statistic_bounds_half_the_branch_distance(self):
        """The triangle inequality through the reference holds for all demos"""
        for pair in self.pairs():
            assert pair.statistic >= 0.5 * pair.tv_branch - 1e-12

    def test_validator_rejects_low_statistic(self):
        """A statistic below half the branch distance is not a valid pair"""
        pair = optimizer_lab.binary_dmax_branch_test(1.0, 1.0, self.table, 0, 10)
        fields = {**dict(pair), "statistic": 0.4, "verdict": Verdict.MERGED}
        with pytest.raises(ValidationError):
            BranchPair(**fields)
