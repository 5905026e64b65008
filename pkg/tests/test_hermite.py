import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from numpy.polynomial.hermite_e import hermegauss

from lrdblocks.hermite import (
    DegenerateTransformError,
    hermite_coefficients,
    hermite_poly,
    ranks,
    spec_from_coefficients,
)

from _oracles import gaussian_even_moment


class TestHermitePoly:
    def test_low_orders(self):
        z = np.linspace(-2.5, 2.5, 11)
        np.testing.assert_allclose(hermite_poly(0, z), np.ones_like(z))
        np.testing.assert_allclose(hermite_poly(1, z), z)
        np.testing.assert_allclose(hermite_poly(2, z), z * z - 1.0)
        np.testing.assert_allclose(hermite_poly(3, z), z**3 - 3.0 * z)
        np.testing.assert_allclose(hermite_poly(4, z), z**4 - 6.0 * z * z + 3.0)

    def test_hand_points(self):
        assert hermite_poly(2, 2.0) == pytest.approx(3.0)
        assert hermite_poly(3, 2.0) == pytest.approx(2.0)

    def test_negative_order_rejected(self):
        with pytest.raises(ValueError):
            hermite_poly(-1, 0.0)

    def test_orthogonality_under_gaussian_weight(self):
        nodes, weights = hermegauss(64)
        weights = weights / math.sqrt(2.0 * math.pi)
        polys = [hermite_poly(k, nodes) for k in range(13)]
        for j in range(13):
            for k in range(j, 13):
                inner = float(np.sum(weights * polys[j] * polys[k]))
                normalized = inner / math.sqrt(math.factorial(j) * math.factorial(k))
                want = 1.0 if j == k else 0.0
                assert abs(normalized - want) < 1e-8


class TestCoefficients:
    def test_identity(self, z_spec):
        assert z_spec.coefficient(1) == pytest.approx(1.0, abs=1e-10)
        for k in (0, 2, 3, 4):
            assert abs(z_spec.coefficient(k)) / math.sqrt(math.factorial(k)) < 1e-8
        assert (z_spec.m, z_spec.m2, z_spec.mp) == (1, math.inf, math.inf)

    def test_shifted_quadratic(self):
        spec = hermite_coefficients(lambda z: z + 0.5 * z * z)
        assert spec.coefficient(0) == pytest.approx(0.5, abs=1e-10)
        assert spec.coefficient(1) == pytest.approx(1.0, abs=1e-10)
        assert spec.coefficient(2) == pytest.approx(1.0, abs=1e-10)
        assert (spec.m, spec.m2, spec.mp) == (1, 2, 1)
        assert spec.mean == pytest.approx(0.5, abs=1e-10)
        assert spec.variance() == pytest.approx(1.5, rel=1e-9)

    def test_cosine(self):
        spec = hermite_coefficients(np.cos)
        e = math.exp(-0.5)
        for k in range(min(spec.k_max, 16) + 1):
            want = 0.0 if k % 2 else (e if k % 4 == 0 else -e)
            assert abs(spec.coefficient(k) - want) / math.sqrt(math.factorial(k)) < 1e-8
        assert (spec.m, spec.m2, spec.mp) == (2, 4, math.inf)

    def test_sine(self):
        spec = hermite_coefficients(np.sin)
        e = math.exp(-0.5)
        assert spec.coefficient(1) == pytest.approx(e, abs=1e-10)
        assert spec.coefficient(2) == pytest.approx(0.0, abs=1e-10)
        assert spec.coefficient(3) == pytest.approx(-e, abs=1e-10)
        assert (spec.m, spec.m2, spec.mp) == (1, 3, math.inf)

    def test_parseval_for_random_polynomials(self):
        rng = np.random.default_rng(42)
        for _ in range(5):
            coef = rng.uniform(-1.0, 1.0, 9)
            g = np.polynomial.Polynomial(coef)
            spec = hermite_coefficients(g, k_max=16)
            sq = (g * g).coef
            want = sum(
                sq[2 * p] * gaussian_even_moment(p) for p in range((sq.size + 1) // 2)
            )
            got = sum(
                spec.coefficient(k) ** 2 / math.factorial(k)
                for k in range(spec.k_max + 1)
            )
            assert got == pytest.approx(want, rel=1e-6)

    def test_normalized_squares_and_variance(self, zh_spec, h2_spec):
        np.testing.assert_allclose(zh_spec.normalized_sq(), [0.25, 1.0, 0.5], rtol=1e-12)
        np.testing.assert_allclose(h2_spec.normalized_sq(), [0.0, 0.0, 2.0], rtol=1e-12)
        assert zh_spec.variance() == pytest.approx(1.5, rel=1e-12)
        assert h2_spec.variance() == pytest.approx(2.0, rel=1e-12)

    def test_coefficient_beyond_table_is_zero(self, h2_spec):
        assert h2_spec.coefficient(17) == 0.0

    def test_table_spec_matches_quadrature(self, zh_spec):
        quad = hermite_coefficients(lambda z: z + 0.5 * z * z)
        assert zh_spec.variance() == pytest.approx(quad.variance(), rel=1e-8)
        assert (zh_spec.m, zh_spec.m2, zh_spec.mp) == (quad.m, quad.m2, quad.mp)


class TestRanks:
    def test_rank_triples(self):
        assert ranks([0.0, 1.0, 0.0, 6.0]) == (1, 3, math.inf)
        assert ranks([0.0, 0.0, 0.0, 6.0, 24.0]) == (3, 4, 3)
        assert ranks([0.0, 1.0, 0.0, 6.0, 24.0]) == (1, 3, 3)
        assert ranks([0.0, 0.5, 1.0, 1.0]) == (1, 2, 1)

    def test_tolerance_is_relative(self):
        assert ranks([0.0, 1.0, 1e-12]) == (1, math.inf, math.inf)
        assert ranks([0.0, 1.0, 1e-12], tol=0.0) == (1, 2, 1)

    def test_degenerate_transforms_rejected(self):
        with pytest.raises(DegenerateTransformError):
            ranks([5.0])
        with pytest.raises(DegenerateTransformError):
            ranks([3.0, 0.0, 0.0])


@settings(max_examples=25)
@given(st.lists(st.floats(-3.0, 3.0), min_size=2, max_size=6))
def test_round_trip_recovers_planted_coefficients(js):
    js = np.asarray(js)
    assume(bool(np.any(np.abs(js[1:]) > 1e-3)))

    def g(z):
        out = np.zeros_like(z)
        for k, jk in enumerate(js):
            out = out + jk * hermite_poly(k, z) / math.factorial(k)
        return out

    spec = hermite_coefficients(g, k_max=8)
    for k in range(9):
        want = js[k] if k < js.size else 0.0
        err = abs(spec.coefficient(k) - want) / math.sqrt(math.factorial(k))
        assert err < 1e-7
