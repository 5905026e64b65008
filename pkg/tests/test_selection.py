import copy
import math
import pickle

import numpy as np
import pytest

from lrdblocks.estimators import BlockScheme, variance_estimator
from lrdblocks.models import FGN, replicate_rng, simulate_gaussian
from lrdblocks.selection import (
    SelectionConfig,
    WhittleEstimate,
    candidate_grid,
    empirical_mse,
    extrapolate_block_size,
    local_whittle,
    minimize_empirical_mse,
    two_scale_block_estimate,
)
from lrdblocks.theory import optimal_block


class TestLocalWhittle:
    def test_scale_and_shift_invariance(self):
        x = simulate_gaussian(FGN(0.8), 2048, seed=1)
        base = local_whittle(x)
        assert float(local_whittle(10.0 * x)) == float(base)
        assert float(local_whittle(x + 100.0)) == pytest.approx(float(base), rel=1e-9)

    def test_white_noise_memory_near_zero(self):
        ds = [local_whittle(replicate_rng(500, i).standard_normal(2048)).d for i in range(50)]
        assert abs(float(np.mean(ds))) < 0.03

    def test_recovers_fgn_memory(self):
        ds = [
            local_whittle(simulate_gaussian(FGN(0.8), 4096, rng=replicate_rng(501, i))).d
            for i in range(30)
        ]
        assert float(np.mean(ds)) == pytest.approx(0.3, abs=0.05)

    def test_value_is_the_memory_exponent(self):
        w = local_whittle(simulate_gaussian(FGN(0.8), 1024, seed=2))
        assert isinstance(w, float)
        assert float(w) == pytest.approx(1.0 - 2.0 * w.d, rel=1e-12)
        assert w.bandwidth == int(1024**0.7)
        assert isinstance(w.boundary, bool)

    def test_survives_pickle_and_deepcopy(self):
        w = local_whittle(simulate_gaussian(FGN(0.8), 1024, seed=2))
        for clone in (pickle.loads(pickle.dumps(w)), copy.deepcopy(w)):
            assert float(clone) == float(w)
            assert clone.d == w.d
            assert clone.bandwidth == w.bandwidth
            assert clone.boundary == w.boundary

    def test_validation(self):
        with pytest.raises(ValueError):
            local_whittle(np.zeros((4, 4)))
        with pytest.raises(ValueError):
            local_whittle(np.arange(8.0))
        with pytest.raises(ValueError):
            local_whittle(np.random.default_rng(0).standard_normal(64), bandwidth=1)


class TestEmpiricalMse:
    def test_constant_series_against_zero_pilot(self):
        assert empirical_mse(np.full(32, 2.0), 8, 2, 0.0, alpha_m=0.5) == 0.0

    @pytest.mark.parametrize("scheme", ["ol", "nol"])
    def test_brute_force_window_average(self, scheme):
        x = np.array([0.4, -1.1, 2.0, 0.3, -0.7, 1.6])
        pilot, am = 0.9, 0.6
        got = empirical_mse(x, 4, 2, pilot, alpha_m=am, scheme_kind=scheme)
        vals = [
            variance_estimator(x[i : i + 4], BlockScheme(scheme, 2), am).value
            for i in range(3)
        ]
        want = float(np.mean([(v - pilot) ** 2 for v in vals]))
        assert got == pytest.approx(want, rel=1e-12)

    def test_finite_over_whole_candidate_grid(self):
        x = simulate_gaussian(FGN(0.8), 512, seed=4)
        for ell in candidate_grid(255):
            assert math.isfinite(empirical_mse(x, 255, int(ell), 1.0, alpha_m=0.4))

    def test_validation(self):
        x = np.zeros(32)
        with pytest.raises(ValueError):
            empirical_mse(x, 8, 8, 0.0, alpha_m=0.5)  # ell >= h
        with pytest.raises(ValueError):
            empirical_mse(x, 40, 2, 0.0, alpha_m=0.5)  # h > n
        with pytest.raises(ValueError):
            empirical_mse(x, 8, 5, 0.0, alpha_m=0.5, scheme_kind="nol")  # single block


class TestCandidateGrid:
    def test_small_h_is_an_integer_range(self):
        np.testing.assert_array_equal(candidate_grid(30), np.arange(2, 11))
        np.testing.assert_array_equal(candidate_grid(200), np.arange(2, 67))
        np.testing.assert_array_equal(candidate_grid(7), [2])

    def test_large_h_is_geometric_with_endpoints(self):
        g = np.asarray(candidate_grid(1000))
        assert g[0] == 2 and g[-1] == 333
        assert g.size <= 40
        assert np.all(np.diff(g) > 0)
        np.testing.assert_array_equal(g, g.astype(int))


class TestMinimizeEmpiricalMse:
    def test_single_candidate(self):
        x = simulate_gaussian(FGN(0.8), 64, seed=5)
        assert minimize_empirical_mse(x, 7, 0.5, [3], alpha_m=0.4) == 3

    def test_ties_resolve_to_the_smaller_length(self):
        assert minimize_empirical_mse(np.full(64, 1.0), 16, 0.0, [2, 3, 4], alpha_m=0.5) == 2

    def test_matches_exhaustive_scan(self):
        x = simulate_gaussian(FGN(0.85), 256, seed=6)
        h, pilot, am = 60, 0.8, 0.3
        grid = list(candidate_grid(h))
        got = minimize_empirical_mse(x, h, pilot, grid, alpha_m=am)
        curve = [empirical_mse(x, h, int(e), pilot, alpha_m=am) for e in grid]
        assert got == grid[int(np.argmin(curve))]

    def test_validation(self):
        x = simulate_gaussian(FGN(0.8), 64, seed=5)
        with pytest.raises(ValueError):
            minimize_empirical_mse(x, 16, 0.5, [], alpha_m=0.4)
        with pytest.raises(ValueError):
            minimize_empirical_mse(x, 16, 0.5, [2, 16], alpha_m=0.4)


class TestExtrapolation:
    def test_exact_power_law_recovered(self):
        n, r, c1, a = 90_000, 2, 9.0, 0.3
        h = int(c1 * math.sqrt(n))  # exactly 2700
        h2 = 500
        a_n, i_n, c_n, ell = extrapolate_block_size(h**a, h2**a, h, h2, n, c1=c1, r=r)
        assert a_n == pytest.approx(a, abs=1e-12)
        assert i_n == pytest.approx(0.0, abs=1e-12)
        assert c_n == pytest.approx(1.0, abs=1e-12)
        assert ell == pytest.approx(n**a, rel=1e-12)

    def test_exponent_unaffected_by_amplitude(self):
        n, c1, a, K = 90_000, 9.0, 0.4, 2.7
        h, h2 = int(c1 * math.sqrt(n)), 640
        a_n, i_n, _, _ = extrapolate_block_size(K * h**a, K * h2**a, h, h2, n, c1=c1, r=2)
        assert a_n == pytest.approx(a, abs=1e-12)
        assert abs(i_n) > 1e-3  # the amplitude shows up in the log correction

    def test_closed_form_of_the_displayed_quantities(self):
        n, c1, r, a, K = 40_000, 9.0, 2, 0.25, 3.5
        h, h2 = int(c1 * math.sqrt(n)), 777
        a_n, i_n, c_n, ell = extrapolate_block_size(K * h**a, K * h2**a, h, h2, n, c1=c1, r=r)
        want_i = 0.5 * math.log(K) * (1.0 / math.log(math.log(h)) + 1.0 / math.log(math.log(h2)))
        want_i = min(max(want_i, -0.5), 1.0)
        want_c = r**want_i * (math.log(h2) / math.log(h)) ** (
            (r - 1) * want_i * math.log(h) / math.log(h / h2)
        )
        want_ell = (K * h**a / c1**a_n) ** r * (h**a_n / (K * h**a)) ** (r - 1) * want_c
        assert i_n == pytest.approx(want_i, rel=1e-12)
        assert c_n == pytest.approx(want_c, rel=1e-12)
        assert ell == pytest.approx(want_ell, rel=1e-12)

    def test_log_correction_is_clamped(self):
        n, c1 = 40_000, 9.0
        h, h2 = int(c1 * math.sqrt(n)), 777
        _, i_hi, _, _ = extrapolate_block_size(1e9 * h**0.3, 1e9 * h2**0.3, h, h2, n, c1=c1)
        assert i_hi == 1.0
        _, i_lo, _, _ = extrapolate_block_size(1e-9 * h**0.3, 1e-9 * h2**0.3, h, h2, n, c1=c1)
        assert i_lo == -0.5

    def test_equal_scales_rejected(self):
        with pytest.raises(ValueError):
            extrapolate_block_size(4.0, 4.0, 100, 100, 10_000)


class TestSelectionConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [dict(r=1), dict(theta=0.0), dict(theta=1.0), dict(c1=0.0), dict(c2=-1.0)],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            SelectionConfig(**kwargs)


class TestTwoScaleRule:
    def test_result_invariants(self):
        n = 4096
        x = simulate_gaussian(FGN(0.8), n, seed=6)
        res = two_scale_block_estimate(x)
        assert res.h == int(9.0 * n**0.5)
        assert res.h2 == int(12.0 * n ** (0.95 / 2.0))
        assert res.pilot_length == math.isqrt(n)
        assert res.ell_h in list(candidate_grid(res.h))
        assert res.ell_h2 in list(candidate_grid(res.h2))
        assert 2 <= res.ell_n <= n // 20
        assert -0.5 <= res.i_n <= 1.0
        assert isinstance(res.edge, bool)
        assert res.pilot_value == pytest.approx(
            variance_estimator(x, BlockScheme("nol", res.pilot_length), float(res.alpha_m)).value,
            rel=1e-12,
        )

    def test_scale_invariance(self):
        x = simulate_gaussian(FGN(0.8), 2048, seed=7)
        r1 = two_scale_block_estimate(x)
        r2 = two_scale_block_estimate(7.3 * x)
        assert (r2.ell_h, r2.ell_h2, r2.ell_n) == (r1.ell_h, r1.ell_h2, r1.ell_n)
        assert r2.a_n == pytest.approx(r1.a_n, rel=1e-9)

    def test_final_rule_cap(self):
        # a strong trend drives every stage to large blocks; the rule caps
        n = 2000
        t = np.linspace(0.0, 1.0, n)
        x = (10.0 * t) ** 3 + simulate_gaussian(FGN(0.6), n, seed=8)
        assert two_scale_block_estimate(x).ell_n == n // 20

    def test_grid_edge_is_flagged(self):
        x = simulate_gaussian(FGN(0.9), 8100, rng=replicate_rng(77, 0))
        res = two_scale_block_estimate(x)
        assert res.ell_n == 2
        assert res.edge is True

    def test_small_series_rejected(self):
        with pytest.raises(ValueError):
            two_scale_block_estimate(np.arange(32.0))


class TestConsistency:
    """Replicate medians of the selected block length against the theory optimum."""

    def test_band_on_the_identity_design(self, z_spec):
        # B0 = 0 for fGn with the identity, so both the reference and most
        # selections sit at the grid floor; the band holds but thinly
        model, n = FGN(0.9), 8100
        ref = optimal_block(n, model, z_spec, scheme_kind="nol").ell_opt
        ells = [
            two_scale_block_estimate(simulate_gaussian(model, n, rng=replicate_rng(77, i))).ell_n
            for i in range(12)
        ]
        ratio = float(np.median(np.asarray(ells) / ref))
        assert 0.5 <= ratio <= 2.0

    def test_band_on_a_rank_two_design(self, h2_spec):
        model, n = FGN(0.8875), 8100
        ref = optimal_block(n, model, h2_spec, scheme_kind="nol").ell_opt
        ells = []
        for i in range(12):
            z = simulate_gaussian(model, n, rng=replicate_rng(83, i))
            ells.append(two_scale_block_estimate(z * z - 1.0).ell_n)
        ratio = float(np.median(np.asarray(ells) / ref))
        assert 0.5 <= ratio <= 2.0
