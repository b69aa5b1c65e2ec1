import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from permlab.core import DistributionSpec, ModelSpec, SizeLimitError
from permlab.model import (
    TrialSeed,
    constraint_class_size,
    enumerate_constraint_matrices,
    sample_constrained_matrix,
    sample_row_support,
    trial_rng,
)

CONST1 = DistributionSpec.constant(1)


class TestTrialSeed:
    def test_validation(self):
        with pytest.raises(ValueError):
            TrialSeed(-1, 0)
        with pytest.raises(ValueError):
            TrialSeed(2**64, 0)
        with pytest.raises(ValueError):
            TrialSeed(0, -1)

    def test_streams_are_pure_functions_of_the_pair(self):
        a = trial_rng(TrialSeed(42, 3)).random(8)
        b = trial_rng(TrialSeed(42, 3)).random(8)
        c = trial_rng(TrialSeed(42, 4)).random(8)
        d = trial_rng(TrialSeed(43, 3)).random(8)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)
        assert not np.array_equal(a, d)


class TestRowSupport:
    def test_full_row(self):
        rng = trial_rng(TrialSeed(0, 0))
        for _ in range(10):
            assert sample_row_support(5, 5, rng) == (0, 1, 2, 3, 4)

    @given(st.integers(min_value=1, max_value=12), st.integers(min_value=0, max_value=100))
    def test_support_contract(self, n, idx):
        rng = trial_rng(TrialSeed(1, idx))
        r = 1 + idx % n
        supp = sample_row_support(n, r, rng)
        assert len(supp) == r
        assert len(set(supp)) == r
        assert all(0 <= c < n for c in supp)
        assert supp == tuple(sorted(supp))

    def test_out_of_range_r(self):
        rng = trial_rng(TrialSeed(0, 0))
        with pytest.raises(ValueError):
            sample_row_support(3, 0, rng)
        with pytest.raises(ValueError):
            sample_row_support(3, 4, rng)

    def test_single_column_marginals(self):
        # P(column j in support) = r/n for each j
        n, r, samples = 3, 2, 100_000
        rng = trial_rng(TrialSeed(2024, 0))
        counts = np.zeros(n)
        for _ in range(samples):
            for c in sample_row_support(n, r, rng):
                counts[c] += 1
        p = r / n
        sigma = math.sqrt(p * (1 - p) / samples)
        for j in range(n):
            assert abs(counts[j] / samples - p) < 3 * sigma

    def test_pair_marginals(self):
        # P(j1 and j2 both in support) = r(r-1)/(n(n-1))
        n, r, samples = 3, 2, 100_000
        rng = trial_rng(TrialSeed(2025, 0))
        both = 0
        for _ in range(samples):
            supp = set(sample_row_support(n, r, rng))
            if 0 in supp and 1 in supp:
                both += 1
        p = r * (r - 1) / (n * (n - 1))
        sigma = math.sqrt(p * (1 - p) / samples)
        assert abs(both / samples - p) < 3 * sigma

    def test_column_exchangeability_chi_square(self):
        # chi-square GOF of column inclusion counts against uniform r/n;
        # must not reject at alpha = 0.001
        from scipy.stats import chi2

        n, r, samples = 6, 2, 100_000
        rng = trial_rng(TrialSeed(77, 0))
        counts = np.zeros(n)
        for _ in range(samples):
            for c in sample_row_support(n, r, rng):
                counts[c] += 1
        expected = samples * r / n
        stat = float(((counts - expected) ** 2 / expected).sum())
        assert stat < chi2.ppf(0.999, n - 1)


class TestSampling:
    def test_forced_support(self):
        spec = ModelSpec(2, (2, 2), CONST1)
        for seed in (0, 1, 99):
            x, y = sample_constrained_matrix(spec, TrialSeed(seed, 0))
            assert np.array_equal(x.entries, np.ones((2, 2)))
            assert np.array_equal(y.entries, np.ones((2, 2)))

    def test_row_counts(self):
        spec = ModelSpec(3, (1, 2, 3), CONST1)
        for idx in range(20):
            x, y = sample_constrained_matrix(spec, TrialSeed(5, idx))
            assert np.array_equal((x.entries > 0).sum(axis=1), [1, 2, 3])
            assert np.array_equal((y.entries > 0).sum(axis=1), [1, 2, 3])

    def test_same_seed_bit_identical(self):
        spec = ModelSpec(4, (2, 3, 1, 4), DistributionSpec.exponential(2.0))
        x1, y1 = sample_constrained_matrix(spec, TrialSeed(11, 7))
        x2, y2 = sample_constrained_matrix(spec, TrialSeed(11, 7))
        assert x1 == x2 and y1 == y2

    def test_weights_strictly_positive_on_support(self):
        for dist in (
            DistributionSpec.uniform(0.5, 2.0),
            DistributionSpec.exponential(1.0),
            DistributionSpec.lognormal(0.0, 1.0),
        ):
            spec = ModelSpec(5, (2, 2, 3, 4, 5), dist)
            for idx in range(50):
                x, y = sample_constrained_matrix(spec, TrialSeed(3, idx))
                assert np.all(y.entries[x.entries > 0] > 0)

    def test_exponential_rate_only_rescales(self):
        # inverse-CDF sampling makes Z pathwise equal to the rate-1 draw / rate
        spec1 = ModelSpec(4, (2, 2, 3, 3), DistributionSpec.exponential(1.0))
        spec2 = ModelSpec(4, (2, 2, 3, 3), DistributionSpec.exponential(4.0))
        _, y1 = sample_constrained_matrix(spec1, TrialSeed(9, 0))
        _, y2 = sample_constrained_matrix(spec2, TrialSeed(9, 0))
        assert np.allclose(y2.entries, y1.entries / 4.0, rtol=0, atol=0)

    def test_rows_independent(self):
        # correlation of indicators in different rows should be ~0
        spec = ModelSpec(4, (2, 2, 2, 2), CONST1)
        samples = 20_000
        a = np.zeros(samples)
        b = np.zeros(samples)
        for idx in range(samples):
            x, _ = sample_constrained_matrix(spec, TrialSeed(123, idx))
            a[idx] = x.entries[0, 0]
            b[idx] = x.entries[1, 0]
        corr = np.corrcoef(a, b)[0, 1]
        assert abs(corr) < 3 / math.sqrt(samples)


class TestEnumeration:
    def test_cardinalities(self):
        assert len(list(enumerate_constraint_matrices(ModelSpec(3, (2, 2, 2), CONST1)))) == 27
        assert len(list(enumerate_constraint_matrices(ModelSpec(3, (1, 2, 3), CONST1)))) == 9
        mats = list(enumerate_constraint_matrices(ModelSpec(2, (2, 2), CONST1)))
        assert len(mats) == 1
        assert np.array_equal(mats[0].entries, np.ones((2, 2)))

    def test_class_size(self):
        assert constraint_class_size(ModelSpec(5, (2,) * 5, CONST1)) == 10**5
        assert constraint_class_size(ModelSpec(3, (1, 2, 3), CONST1)) == 9

    def test_guard(self):
        spec = ModelSpec(10, (5,) * 10, CONST1)  # 252^10 >> 1e7
        with pytest.raises(SizeLimitError):
            next(enumerate_constraint_matrices(spec))

    @pytest.mark.parametrize(
        "n,r",
        [(3, (2, 2, 2)), (3, (1, 2, 3)), (4, (2, 2, 2, 2)), (4, (1, 3, 2, 4)), (5, (1, 2, 2, 1, 5))],
    )
    def test_no_duplicates_and_row_counts(self, n, r):
        spec = ModelSpec(n, r, CONST1)
        assert constraint_class_size(spec) <= 10**4
        seen = set()
        for m in enumerate_constraint_matrices(spec):
            key = m.entries.tobytes()
            assert key not in seen
            seen.add(key)
            assert np.array_equal((m.entries > 0).sum(axis=1), list(r))
        assert len(seen) == constraint_class_size(spec)
