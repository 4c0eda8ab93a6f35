"""
Unit tests for distortion measures and their derived scalars.
"""
import numpy as np
import pytest
from pydantic import ValidationError

from rate_distortion_lab.domain.errors import DimensionMismatchError, InvalidParameterError
from rate_distortion_lab.domain.models import DistortionMeasure, SourceDistribution
from rate_distortion_lab.services import distortion


class TestDistortionMeasure:
    """Validation of the DistortionMeasure model"""

    def test_rejects_negative_entries(self):
        """Distortions are nonnegative"""
        with pytest.raises(ValidationError):
            DistortionMeasure(entries=((0.0, -1.0), (1.0, 0.0)))

    def test_rejects_infinite_entries(self):
        """Only finite measures are supported"""
        with pytest.raises(ValidationError):
            DistortionMeasure(entries=((0.0, float("inf")), (1.0, 0.0)))

    def test_rejects_ragged_rows(self):
        """Rows must have a common length"""
        with pytest.raises(ValidationError):
            DistortionMeasure(entries=((0.0, 1.0), (1.0, 0.0, 2.0)))

    def test_rejects_single_column(self):
        """A one-letter reproduction alphabet is degenerate"""
        with pytest.raises(ValidationError):
            DistortionMeasure(entries=((0.0,), (1.0,)))


class TestConstructors:
    """Hamming and generalized erasure measures"""

    def test_hamming(self):
        """Zero diagonal, one elsewhere"""
        d = distortion.hamming(3).as_array()
        assert np.array_equal(d, 1.0 - np.eye(3))

    def test_hamming_rejects_small_alphabet(self):
        """K must be at least 2"""
        with pytest.raises(InvalidParameterError):
            distortion.hamming(1)

    def test_generalized_erasure_layout(self):
        """K Hamming columns followed by the two erasure columns"""
        d = distortion.generalized_erasure(3, 0.1, 0.2)
        matrix = d.as_array()
        assert (d.source_size, d.repro_size) == (3, 5)
        assert np.array_equal(matrix[:, :3], 1.0 - np.eye(3))
        assert np.all(matrix[:, 3] == 0.1)
        assert np.all(matrix[:, 4] == 0.2)

    def test_generalized_erasure_rejects_negative_costs(self):
        """Erasure costs must be nonnegative"""
        with pytest.raises(InvalidParameterError):
            distortion.generalized_erasure(2, -0.1, 0.2)


class TestNormalization:
    """Normality and the row-minimum shift"""

    def setup_method(self):
        """A measure whose first row has no zero"""
        self.d = DistortionMeasure(entries=((0.5, 1.5, 2.0), (1.0, 0.0, 3.0)))
        self.p = SourceDistribution(probs=(0.4, 0.6))

    def test_is_normal(self):
        """Hamming is normal, the fixture measure is not"""
        assert distortion.is_normal(distortion.hamming(2))
        assert not distortion.is_normal(self.d)

    def test_normalize_subtracts_row_minima(self):
        """The normalized measure is normal and the shift is E[c_k]"""
        result = distortion.normalize(self.d, self.p)
        assert distortion.is_normal(result.normal_measure)
        assert result.row_offsets == (0.5, 0.0)
        assert result.distortion_shift == pytest.approx(0.2)
        assert result.normal_measure.entries[0] == (0.0, 1.0, 1.5)

    def test_normalize_is_idempotent(self):
        """A normal measure has zero shift"""
        result = distortion.normalize(distortion.hamming(3), SourceDistribution.uniform(3))
        assert result.distortion_shift == 0.0
        assert result.normal_measure == distortion.hamming(3)

    def test_min_distortion(self):
        """E_X[min_l d(X, l)] equals the normalization shift"""
        assert distortion.min_distortion(self.p, self.d) == pytest.approx(0.2)


class TestDmax:
    """Rate-zero distortion and its argmin column"""

    def test_uniform_hamming(self):
        """Every column averages (K-1)/K; the first one wins the tie"""
        value, column = distortion.d_max(SourceDistribution.uniform(3), distortion.hamming(3))
        assert value == pytest.approx(2.0 / 3.0)
        assert column == 0

    def test_skewed_source(self):
        """The most likely letter is the best constant guess"""
        value, column = distortion.d_max(SourceDistribution(probs=(0.3, 0.7)), distortion.hamming(2))
        assert value == pytest.approx(0.3)
        assert column == 1

    def test_erasure_column_can_win(self):
        """A cheap erasure letter is the rate-zero reproduction"""
        value, column = distortion.d_max(SourceDistribution.uniform(2), distortion.generalized_erasure(2, 0.3, 0.2))
        assert value == pytest.approx(0.2)
        assert column == 3

    def test_near_ties_pick_smallest_index(self):
        """Averages within 1e-12 of the minimum count as tied"""
        averages = np.array([0.5 + 1e-13, 0.5, 0.7])
        assert distortion.argmin_column(averages) == 0

    def test_source_size_must_match(self):
        """The source alphabet must match the rows"""
        with pytest.raises(DimensionMismatchError):
            distortion.d_max(SourceDistribution.uniform(3), distortion.hamming(2))


class TestDerivedHelpers:
    """R-trivial columns and distances between measures"""

    def test_r_trivial_columns(self):
        """An all-zero column makes R identically zero"""
        d = DistortionMeasure(entries=((0.0, 1.0, 0.0), (1.0, 0.0, 0.0)))
        assert distortion.r_trivial_columns(d) == [2]
        assert distortion.r_trivial_columns(distortion.hamming(2)) == []

    def test_frobenius_distance(self):
        """Distance between erasure measures differing in one column"""
        a = distortion.generalized_erasure(2, 0.1, 0.1)
        b = distortion.generalized_erasure(2, 0.1, 0.4)
        assert distortion.frobenius_distance(a, b) == pytest.approx(0.3 * np.sqrt(2))

    def test_frobenius_shape_mismatch(self):
        """Measures of different shapes are not comparable"""
        with pytest.raises(DimensionMismatchError):
            distortion.frobenius_distance(distortion.hamming(2), distortion.hamming(3))
