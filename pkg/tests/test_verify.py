"""Certification engine: lemma sampling, bound checks, rate fits."""

import numpy as np
import pytest

from oraclebound.adversary import AdversaryConfig
from oraclebound.errors import ConfigError, DataError, InputError
from oraclebound.verify import (
    check_lower_bound,
    check_parameter_identities,
    check_smoothing_lemmas,
    check_solution_bound,
    estimate_rate,
    run_against_adversary,
    running_best_residuals,
)


class TestSmoothingLemmas:
    def test_standard_cell_passes(self):
        report = check_smoothing_lemmas(6, 4, 1.0, 2000, seed=7)
        assert report.passed
        assert report.worst_violation <= 1e-10
        assert report.trials == 2000

    def test_large_mu_cell_passes(self):
        report = check_smoothing_lemmas(6, 4, 1e6, 1000, seed=3)
        assert report.passed

    def test_reproducible_from_seed(self):
        a = check_smoothing_lemmas(5, 3, 2.0, 500, seed=11)
        b = check_smoothing_lemmas(5, 3, 2.0, 500, seed=11)
        assert a == b

    def test_witness_recorded(self):
        report = check_smoothing_lemmas(6, 4, 1.0, 50, seed=1)
        assert report.witness is not None
        assert {"invariant", "pieces", "x"} <= set(report.witness)

    def test_validation(self):
        with pytest.raises(InputError):
            check_smoothing_lemmas(3, 4, 1.0, 10, seed=0)
        with pytest.raises(InputError):
            check_smoothing_lemmas(4, 3, 1.0, 0, seed=0)


class TestLowerBoundCheck:
    def test_fgm_cubic(self):
        cfg = AdversaryConfig(
            power=3.0, nu=1.0, holder_const=1.0, sigma=1.0, budget_T=16, dim_n=16
        )
        report = check_lower_bound(cfg, "fgm")
        assert report.passed, report.witness

    def test_subgradient_quadratic_nu_zero(self):
        cfg = AdversaryConfig(
            power=2.0, nu=0.0, holder_const=1.0, sigma=1.0, budget_T=8, dim_n=8
        )
        report = check_lower_bound(cfg, "subgradient")
        assert report.passed, report.witness

    def test_subgradient_l1_regularizer(self):
        cfg = AdversaryConfig(
            power=3.0, nu=1.0, holder_const=1.0, sigma=1.0, norm_q=1.0,
            budget_T=8, dim_n=8,
        )
        report = check_lower_bound(cfg, "subgradient")
        assert report.passed, report.witness

    def test_prox_methods_rejected_for_non_euclidean(self):
        cfg = AdversaryConfig(
            power=3.0, nu=1.0, holder_const=1.0, sigma=1.0, norm_q=1.0,
            budget_T=4, dim_n=4,
        )
        with pytest.raises(ConfigError):
            check_lower_bound(cfg, "fgm")

    def test_run_against_adversary_spends_exact_budget(self):
        cfg = AdversaryConfig(
            power=2.5, nu=0.5, holder_const=1.0, sigma=1.0, budget_T=12, dim_n=12
        )
        record, state, instance, _ = run_against_adversary(cfg, "prox_grad")
        assert record.oracle_calls == 12
        assert state.step == 12
        assert len(instance.chain) == 12

    def test_determinism_of_harness(self):
        cfg = AdversaryConfig(
            power=3.0, nu=1.0, holder_const=1.0, sigma=1.0, budget_T=8, dim_n=8
        )
        r1, s1, _, _ = run_against_adversary(cfg, "fgm")
        r2, s2, _, _ = run_against_adversary(cfg, "fgm")
        assert all(np.array_equal(a, b) for a, b in zip(r1.queries, r2.queries))
        assert r1.value_curve == r2.value_curve
        assert [p for p in s1.pieces] == [p for p in s2.pieces]


class TestSolutionBoundCheck:
    def test_cubic_T4(self):
        cfg = AdversaryConfig(
            power=3.0, nu=1.0, holder_const=1.0, sigma=1.0, budget_T=4, dim_n=4
        )
        report = check_solution_bound(cfg)
        assert report.passed, report.witness

    def test_requires_euclidean(self):
        cfg = AdversaryConfig(
            power=3.0, nu=1.0, holder_const=1.0, sigma=1.0, norm_q=3.0,
            budget_T=4, dim_n=4,
        )
        with pytest.raises(ConfigError):
            check_solution_bound(cfg)


class TestParameterIdentities:
    def test_grid(self):
        configs = []
        for p in (2.5, 3.0, 4.0):
            for nu in (0.0, 0.5, 1.0):
                if not nu < p - 1:
                    continue
                for T in (4, 16, 64):
                    for q in (1.0, 2.0, 3.0):
                        configs.append(
                            AdversaryConfig(
                                power=p, nu=nu, holder_const=1.0, sigma=1.0,
                                norm_q=q, budget_T=T, dim_n=T,
                            )
                        )
        report = check_parameter_identities(configs)
        assert report.passed, report.witness
        assert report.trials == len(configs)


class TestEstimateRate:
    def test_exact_quadratic_decay(self):
        ks = np.arange(1, 1001, dtype=float)
        slope, _ = estimate_rate(ks**-2, 10, 1000)
        assert slope == pytest.approx(-2.0, abs=1e-9)

    def test_scaled_sixth_power(self):
        ks = np.arange(1, 2001, dtype=float)
        slope, intercept = estimate_rate(5.0 * ks**-6, 16, 512)
        assert slope == pytest.approx(-6.0, abs=1e-9)
        assert intercept == pytest.approx(np.log(5.0), abs=1e-8)

    def test_window_validation(self):
        curve = np.ones(100)
        with pytest.raises(InputError):
            estimate_rate(curve, 40, 60)  # narrower than a factor of two
        with pytest.raises(InputError):
            estimate_rate(curve, 10, 200)

    def test_nonpositive_residuals_rejected(self):
        curve = np.ones(64)
        curve[20] = 0.0
        with pytest.raises(DataError):
            estimate_rate(curve, 10, 40)

    def test_running_best_residuals(self):
        class FakeRecord:
            value_curve = [3.0, 2.0, 2.5, 1.0]

        res = running_best_residuals(FakeRecord(), 0.5)
        assert np.allclose(res, [2.5, 1.5, 1.5, 0.5])


class TestRestartRateOnFrozenInstance:
    def test_superaccelerated_slope_small_budget(self):
        # decay on a frozen chain instance begins after a call count that
        # grows linearly with T, so a small T puts the whole crash in-window
        from oraclebound.cli import rate_experiment

        cfg = AdversaryConfig(
            power=3.0, nu=1.0, holder_const=1.0, sigma=1.0, budget_T=8, dim_n=8
        )
        slope = rate_experiment(cfg, 2048, 16, 512)
        assert slope <= -5.0

    def test_p4_slope_small_budget(self):
        from oraclebound.cli import rate_experiment

        cfg = AdversaryConfig(
            power=4.0, nu=1.0, holder_const=1.0, sigma=1.0, budget_T=8, dim_n=8
        )
        slope = rate_experiment(cfg, 2048, 16, 512)
        assert slope <= -3.5
