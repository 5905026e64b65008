import json
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import ndtr, ndtri

from lrdblocks.experiments import (
    CurveResult,
    ExperimentConfig,
    McSummary,
    TableRun,
    bootstrap_ci,
    coverage_study,
    influence_variance,
    mse_curve,
    optimal_block_table,
    process_mean,
    pushforward_cdf,
    pushforward_quantile,
    rank_test_power,
    trimmed_influence_spec,
    trimmed_mean_parameter,
    variance_mse_table,
    winsorized_influence_spec,
)
from lrdblocks.functionals import TrimmedMean, evaluate, mean_functional
from lrdblocks.hermite import hermite_coefficients
from lrdblocks.models import FGN, preset_transform, simulate_gaussian

MANIFEST_KEYS = {"config", "config_sha256", "table", "versions"}


class TestMcSummary:
    def test_of_sample(self):
        s = McSummary.of_sample([1.0, 2.0, 3.0, 4.0])
        assert s.value == pytest.approx(2.5)
        assert s.mc_se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2.0)
        assert s.reps == 4

    def test_rate(self):
        s = McSummary.rate(30, 200)
        assert s.value == pytest.approx(0.15)
        assert s.mc_se == pytest.approx(math.sqrt(0.15 * 0.85 / 200))

    def test_validation(self):
        with pytest.raises(ValueError):
            McSummary(1.0, 0.1, 0)
        with pytest.raises(ValueError):
            McSummary(1.0, -0.1, 5)
        with pytest.raises(ValueError):
            McSummary.rate(5, 4)


class TestPushforward:
    @pytest.mark.parametrize("y", [-0.5, 0.0, 1.7, 4.0])
    def test_squared_transform_cdf(self, y):
        # law of He2(Z) = Z^2 - 1: P(Z^2 <= y + 1) = 2 Phi(sqrt(y+1)) - 1
        want = 2.0 * ndtr(math.sqrt(y + 1.0)) - 1.0
        assert pushforward_cdf("h2", y) == pytest.approx(want, abs=1e-8)

    @pytest.mark.parametrize("p", [0.05, 0.1, 0.5, 0.9, 0.99])
    def test_squared_transform_quantile(self, p):
        want = ndtri((p + 1.0) / 2.0) ** 2 - 1.0
        assert pushforward_quantile("h2", p) == pytest.approx(want, abs=1e-8)

    def test_identity_cdf_is_gaussian(self):
        for y in (-1.3, 0.0, 0.4, 2.1):
            assert pushforward_cdf("identity", y) == pytest.approx(ndtr(y), abs=1e-10)

    @pytest.mark.parametrize("label", ["identity", "h2", "cos", "sin"])
    def test_quantile_inverts_cdf(self, label):
        for p in (0.1, 0.25, 0.5, 0.75, 0.9):
            q = pushforward_quantile(label, p)
            assert pushforward_cdf(label, q) == pytest.approx(p, abs=1e-6)

    @pytest.mark.parametrize("label", ["h2", "cos", "zh2"])
    def test_monotonicity(self, label):
        ps = np.linspace(0.05, 0.95, 19)
        qs = np.array([pushforward_quantile(label, p) for p in ps])
        assert np.all(np.diff(qs) >= -1e-12)
        ys = np.linspace(qs[0], qs[-1], 25)
        fs = np.array([pushforward_cdf(label, y) for y in ys])
        assert np.all(np.diff(fs) >= -1e-12)


class TestProcessTruth:
    def test_cosine_mean(self):
        assert process_mean("cos") == pytest.approx(math.exp(-0.5), rel=1e-10)

    @pytest.mark.parametrize("label", ["identity", "sin"])
    def test_odd_transforms_are_centered(self, label):
        assert process_mean(label) == pytest.approx(0.0, abs=1e-9)
        assert trimmed_mean_parameter(label, 0.2) == pytest.approx(0.0, abs=1e-9)

    def test_trimmed_mean_parameter_pinned_value(self):
        assert trimmed_mean_parameter("h2", 0.2) == pytest.approx(
            -0.4234380011966773, rel=1e-9
        )

    def test_trimmed_mean_parameter_matches_quantile_quadrature(self):
        want, _ = quad(lambda p: pushforward_quantile("h2", p), 0.2, 0.8, limit=200)
        assert trimmed_mean_parameter("h2", 0.2) == pytest.approx(want / 0.6, rel=1e-6)

    @pytest.mark.parametrize("label", ["h2", "sin"])
    def test_influence_variance_forms(self, label):
        band = influence_variance(label, 0.2, "band")
        wins = influence_variance(label, 0.2, "winsorized")
        assert band > 0.0 and wins > 0.0
        assert math.isfinite(band) and math.isfinite(wins)
        # clipping keeps the tail mass that the band form deletes
        assert band != pytest.approx(wins, rel=1e-3)

    def test_influence_variance_form_validation(self):
        with pytest.raises(ValueError, match="form"):
            influence_variance("h2", 0.2, "huberized")

    def test_influence_spec_ranks(self):
        assert trimmed_influence_spec("h2").m == 2
        assert winsorized_influence_spec("h2").m == 2
        assert trimmed_influence_spec("identity").m == 1

    def test_rank_one_preset_with_higher_terms(self):
        spec = hermite_coefficients(preset_transform("g1"))
        assert (spec.m, spec.m2) == (1, 2)
        assert spec.coefficient(1) == pytest.approx(1.0, rel=1e-9)
        assert spec.coefficient(3) == pytest.approx(math.sqrt(3.0) / 10.0, rel=1e-9)


class TestBootstrapCi:
    def test_constant_series_degenerates_to_a_point(self):
        ci = bootstrap_ci(np.ones(64), resamples=80, seed=0)
        assert ci.lower == ci.upper == ci.center == 1.0
        assert ci.q_star == 0.0
        assert math.isnan(ci.alpha_m)
        assert ci.ell == 8 and ci.blocks == 8

    def test_deterministic_given_seed(self):
        y = simulate_gaussian(FGN(0.8), 256, seed=3) ** 2
        a = bootstrap_ci(y, mean_functional(), 12, 0.9, 80, alpha_m=0.4, seed=5)
        b = bootstrap_ci(y, mean_functional(), 12, 0.9, 80, alpha_m=0.4, seed=5)
        assert (a.lower, a.upper) == (b.lower, b.upper)

    def test_width_monotone_in_level(self):
        y = simulate_gaussian(FGN(0.8), 256, seed=4) ** 2
        widths = [
            bootstrap_ci(y, mean_functional(), 12, lvl, 120, alpha_m=0.4, seed=9).half_width
            for lvl in (0.8, 0.9, 0.99)
        ]
        assert widths[0] <= widths[1] <= widths[2]
        assert widths[0] > 0.0

    def test_center_is_the_point_estimate(self):
        y = simulate_gaussian(FGN(0.8), 200, seed=6) ** 2
        f = TrimmedMean(0.2)
        ci = bootstrap_ci(y, f, 10, 0.95, 60, alpha_m=0.4, seed=2)
        assert ci.center == evaluate(f, y)
        assert ci.lower <= ci.center <= ci.upper
        assert ci.covers(ci.center)
        assert not ci.covers(ci.upper + 1.0)

    def test_validation(self):
        y = simulate_gaussian(FGN(0.8), 64, seed=7)
        with pytest.raises(ValueError, match="resamples"):
            bootstrap_ci(y, resamples=10)
        with pytest.raises(ValueError, match="level"):
            bootstrap_ci(y, level=1.0)
        with pytest.raises(ValueError, match="block length"):
            bootstrap_ci(y, ell=1)
        with pytest.raises(ValueError, match="block length"):
            bootstrap_ci(y, ell=40)
        with pytest.raises(ValueError):
            bootstrap_ci([1.0, 2.0, 3.0])


class TestExperimentConfig:
    def test_validation(self):
        with pytest.raises(ValueError, match="n_values"):
            ExperimentConfig(FGN(0.8), "h2", (), reps=3)
        with pytest.raises(ValueError, match="replicate"):
            ExperimentConfig(FGN(0.8), "h2", (400,), reps=0)
        with pytest.raises(ValueError, match="scheme_kind"):
            ExperimentConfig(FGN(0.8), "h2", (400,), reps=3, scheme_kind="bad")
        with pytest.raises(ValueError, match="ell_grid"):
            ExperimentConfig(FGN(0.8), "h2", (400,), reps=3, ell_grid=(1, 4))
        with pytest.raises(ValueError, match="policy"):
            ExperimentConfig(FGN(0.8), "h2", (400,), reps=3, ell_policy="bogus")
        with pytest.raises(ValueError, match="fixed block length"):
            ExperimentConfig(FGN(0.8), "h2", (400,), reps=3, ell_policy=300)

    def test_table_run_reps(self):
        assert TableRun().resolve_reps(desk=7, full=9) == 7
        assert TableRun(full_scale=True).resolve_reps(desk=7, full=9) == 9
        assert TableRun(reps=3).resolve_reps(desk=7, full=9) == 3
        with pytest.raises(ValueError):
            TableRun(reps=0).resolve_reps(desk=7, full=9)


class TestMseCurve:
    def make_config(self, out_path):
        return ExperimentConfig(
            model=FGN(0.775),
            transform="h2",
            n_values=(400,),
            reps=3,
            ell_grid=(4, 8, 16),
            seed=12,
            out_path=out_path,
        )

    def test_smoke_and_outputs(self, tmp_path):
        out = tmp_path / "curve.csv"
        res = mse_curve(self.make_config(str(out)))
        assert isinstance(res, CurveResult)
        assert res.columns == ("n", "ell", "mse", "mc_se", "reps")
        assert res.argmin[400] in (4, 8, 16)
        assert len(res.rows) == 3
        assert all(r[0] == 400 and r[4] == 3 and r[2] >= 0.0 for r in res.rows)
        assert res.csv_path == out and out.exists()
        manifest = json.loads((tmp_path / "curve.manifest.json").read_text())
        assert set(manifest) == MANIFEST_KEYS
        assert manifest["table"] == "msecurve"

    def test_reruns_are_byte_identical(self, tmp_path):
        out1, out2 = tmp_path / "a" / "c.csv", tmp_path / "b" / "c.csv"
        mse_curve(self.make_config(str(out1)))
        mse_curve(self.make_config(str(out2)))
        assert out1.read_bytes() == out2.read_bytes()


class TestTables:
    def test_optimal_block_table(self, tmp_path):
        run = TableRun(reps=2, seed=7, out_dir=tmp_path)
        res = optimal_block_table(run)
        assert res.name == "table1"
        assert set(res.cells) == {
            (m, a, n)
            for m, a in ((2, 0.400), (2, 0.425), (2, 0.450), (3, 0.300), (3, 0.315), (3, 0.330))
            for n in (1000, 5000)
        }
        for s in res.cells.values():
            assert s.reps == 2 and s.value >= 2
        assert res.csv_path == tmp_path / "table1.csv"
        manifest = json.loads((tmp_path / "table1.manifest.json").read_text())
        assert set(manifest) == MANIFEST_KEYS and manifest["table"] == "table1"

        again = optimal_block_table(TableRun(reps=2, seed=7, out_dir=tmp_path / "again"))
        assert res.csv_path.read_bytes() == (tmp_path / "again" / "table1.csv").read_bytes()

    def test_variance_mse_table_mean(self):
        res = variance_mse_table(
            TableRun(reps=3, seed=11), "mean", designs=((2, 0.45),), n_values=(500,)
        )
        assert res.name == "table2"
        assert set(res.cells) == {("h2", 0.45, 500, "rule"), ("h2", 0.45, 500, "sqrt")}
        for s in res.cells.values():
            assert s.reps == 3 and math.isfinite(s.value) and s.value >= 0.0

    def test_variance_mse_table_trimmed(self):
        res = variance_mse_table(
            TableRun(reps=2, seed=11), "trimmed", designs=(("h2", 0.45),), n_values=(400,)
        )
        assert res.name == "table4"
        assert set(res.cells) == {("h2", 0.45, 400, "rule"), ("h2", 0.45, 400, "sqrt")}

    def test_variance_mse_table_kind_validation(self):
        with pytest.raises(ValueError, match="kind"):
            variance_mse_table(TableRun(reps=2), "bogus")

    def test_coverage_study(self):
        res = coverage_study(
            TableRun(reps=3, seed=5),
            statistics=("mean",),
            transforms=("sin",),
            alphas=(0.2,),
            n_values=(400,),
            resamples=60,
        )
        assert res.name == "table5"
        assert set(res.cells) == {
            ("mean", "sin", 0.2, 400, "rule"),
            ("mean", "sin", 0.2, 400, "sqrt"),
        }
        for s in res.cells.values():
            assert 0.0 <= s.value <= 1.0 and s.reps == 3

    def test_coverage_study_statistic_validation(self):
        with pytest.raises(ValueError, match="statistic"):
            coverage_study(TableRun(reps=2), statistics=("median",), n_values=(400,))

    def test_rank_test_power(self):
        res = rank_test_power(
            TableRun(reps=3, seed=5),
            transforms=("cos",),
            alphas=(0.2,),
            n_values=(400,),
            schemes=("ol",),
            resamples=25,
        )
        assert res.name == "table6"
        assert set(res.cells) == {("cos", 0.2, 400, "ol")}
        s = res.cells[("cos", 0.2, 400, "ol")]
        assert 0.0 <= s.value <= 1.0 and s.reps == 3
