import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permlab.core import (
    DenseMatrix,
    DistributionSpec,
    ModelSpec,
    ParseError,
    ScaledValue,
    ShapeError,
    distribution_moments,
    parse_matrix,
    write_matrix,
)

finite_positive = st.floats(min_value=1e-300, max_value=1e300, allow_nan=False)


class TestScaledValue:
    def test_zero_flag(self):
        z = ScaledValue.zero()
        assert z.is_zero
        assert z.to_float() == 0.0
        assert ScaledValue.from_float(0.0).is_zero

    def test_roundtrip_near_identity(self):
        # exp(log x) loses relative precision ~ |log x| * eps
        for x in (1.0, -3.5, 1e-200, 7e250):
            back = ScaledValue.from_float(x).to_float()
            assert back == pytest.approx(x, rel=1e-12)
            assert math.copysign(1, back) == math.copysign(1, x)

    def test_zero_multiplication_absorbs(self):
        v = ScaledValue.from_float(4.0)
        assert (v * ScaledValue.zero()).is_zero
        assert (ScaledValue.zero() * v).is_zero

    def test_division_by_zero_raises(self):
        with pytest.raises(ZeroDivisionError):
            ScaledValue.from_float(1.0) / ScaledValue.zero()

    @given(finite_positive, finite_positive)
    def test_ratio_exact_in_log_space(self, a, b):
        q = ScaledValue.from_float(a) / ScaledValue.from_float(b)
        assert q.log_mag == math.log(a) - math.log(b)
        assert q.sign == 1

    @given(st.floats(min_value=1e-3, max_value=1e3), st.integers(min_value=1, max_value=200))
    def test_power_accumulation_error(self, v, k):
        sv = ScaledValue.from_float(v)
        acc = sv
        for _ in range(k - 1):
            acc = acc * sv
        assert abs(acc.log_mag - k * math.log(v)) <= 1e-12 * k

    def test_signs_multiply(self):
        m = ScaledValue.from_float(-2.0) * ScaledValue.from_float(-3.0)
        assert m.sign == 1
        assert m.to_float() == pytest.approx(6.0)
        m = ScaledValue.from_float(-2.0) * ScaledValue.from_float(3.0)
        assert m.sign == -1

    def test_overflowing_magnitude_prints_inf(self):
        big = ScaledValue.from_log(1000.0)
        assert big.to_float() == math.inf

    def test_invalid_construction(self):
        with pytest.raises(ValueError):
            ScaledValue(False, math.inf, 1)
        with pytest.raises(ValueError):
            ScaledValue(False, 0.0, 2)
        with pytest.raises(ValueError):
            ScaledValue.from_float(math.nan)


class TestDistributionSpec:
    def test_constant_moments(self):
        assert distribution_moments(DistributionSpec.constant(1)) == (1.0, 1.0)
        nu, delta = distribution_moments(DistributionSpec.constant(3.0))
        assert (nu, delta) == (3.0, 9.0)

    def test_exponential_moments(self):
        assert distribution_moments(DistributionSpec.exponential(1)) == (1.0, 2.0)
        nu, delta = distribution_moments(DistributionSpec.exponential(2.0))
        assert nu == 0.5 and delta == 0.5

    def test_uniform_moments(self):
        nu, delta = distribution_moments(DistributionSpec.uniform(1, 3))
        assert nu == 2.0
        assert delta == pytest.approx(13 / 3, rel=1e-15)

    def test_lognormal_moments(self):
        nu, delta = distribution_moments(DistributionSpec.lognormal(0.0, 1.0))
        assert nu == pytest.approx(math.exp(0.5), rel=1e-15)
        assert delta == pytest.approx(math.exp(2.0), rel=1e-15)

    @given(
        st.sampled_from(["constant", "uniform", "exponential", "lognormal"]),
        st.floats(min_value=0.01, max_value=50),
        st.floats(min_value=0.01, max_value=50),
    )
    def test_second_moment_dominates_squared_mean(self, kind, p1, p2):
        if kind == "constant":
            dist = DistributionSpec.constant(p1)
        elif kind == "uniform":
            a, b = sorted((p1, p1 + p2))
            dist = DistributionSpec.uniform(a, b)
        elif kind == "exponential":
            dist = DistributionSpec.exponential(p1)
        else:
            dist = DistributionSpec.lognormal(math.log(p1), min(p2, 3.0))
        gap = dist.delta - dist.nu**2
        if kind == "constant":
            assert abs(gap) <= 1e-12 * dist.delta
        else:
            assert gap > 0

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            DistributionSpec.constant(0.0)
        with pytest.raises(ValueError):
            DistributionSpec.uniform(2, 1)
        with pytest.raises(ValueError):
            DistributionSpec.uniform(0, 1)
        with pytest.raises(ValueError):
            DistributionSpec.exponential(-1)
        with pytest.raises(ValueError):
            DistributionSpec.lognormal(0, 0)

    def test_string_round_trip(self):
        for text in ("const:1", "uniform:1,3", "exp:2", "lognormal:0,1"):
            dist = DistributionSpec.from_string(text)
            assert DistributionSpec.from_string(dist.spec_string()) == dist

    def test_bad_strings(self):
        for text in ("gauss:1", "const", "const:x", "uniform:3,1", "exp:-2"):
            with pytest.raises(ParseError):
                DistributionSpec.from_string(text)

    def test_scale_standard_factorization(self):
        rng = np.random.default_rng(0)
        for dist in (
            DistributionSpec.constant(2.5),
            DistributionSpec.uniform(1, 3),
            DistributionSpec.exponential(0.25),
            DistributionSpec.lognormal(1.0, 0.5),
        ):
            w = dist.sample_standard(rng, (2000,))
            assert np.all(w > 0)
            assert abs(w.mean() - dist.standard_mean) < 5 * w.std() / math.sqrt(w.size) + 1e-12
            assert dist.scale * dist.standard_mean == pytest.approx(dist.nu, rel=1e-14)


class TestModelSpec:
    def test_basic(self):
        spec = ModelSpec(3, (1, 2, 3), DistributionSpec.constant(1))
        assert spec.r_low == 1 and spec.r_up == 3
        assert not spec.is_homogeneous
        assert ModelSpec.homogeneous(4, 2, DistributionSpec.constant(1)).is_homogeneous

    def test_validation(self):
        dist = DistributionSpec.constant(1)
        with pytest.raises(ValueError):
            ModelSpec(3, (1, 2), dist)
        with pytest.raises(ValueError):
            ModelSpec(3, (0, 2, 2), dist)
        with pytest.raises(ValueError):
            ModelSpec(3, (1, 2, 4), dist)
        with pytest.raises(ValueError):
            ModelSpec(0, (), dist)


class TestMatrixIO:
    def test_identity_parse(self):
        m = parse_matrix("1 0\n0 1")
        assert np.array_equal(m.entries, np.eye(2))

    def test_direct_readback(self):
        m = parse_matrix("1 2\n3 4")
        assert np.array_equal(m.entries, [[1.0, 2.0], [3.0, 4.0]])

    def test_ragged_is_shape_error(self):
        with pytest.raises(ShapeError):
            parse_matrix("1 2 3\n4 5")

    def test_non_square_is_shape_error(self):
        with pytest.raises(ShapeError):
            parse_matrix("1 2 3\n4 5 6")

    def test_bad_tokens_are_parse_errors(self):
        with pytest.raises(ParseError):
            parse_matrix("1 x\n3 4")
        with pytest.raises(ParseError):
            parse_matrix("1 -2\n3 4")
        with pytest.raises(ParseError):
            parse_matrix("1 inf\n3 4")

    def test_empty_text(self):
        with pytest.raises(ShapeError):
            parse_matrix("   \n  ")

    @settings(max_examples=50)
    @given(
        st.integers(min_value=1, max_value=5).flatmap(
            lambda n: st.lists(
                st.lists(
                    st.floats(min_value=0, max_value=1e15, allow_nan=False),
                    min_size=n, max_size=n,
                ),
                min_size=n, max_size=n,
            )
        )
    )
    def test_round_trip(self, rows):
        m = DenseMatrix(rows)
        assert parse_matrix(write_matrix(m)) == m

    def test_matrix_is_immutable(self):
        m = DenseMatrix([[1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            m.entries[0, 0] = 5.0

    def test_matrix_validation(self):
        with pytest.raises(ShapeError):
            DenseMatrix([[1.0, 2.0]])
        with pytest.raises(ValueError):
            DenseMatrix([[1.0, -2.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            DenseMatrix([[1.0, math.nan], [0.0, 1.0]])
