import dataclasses

import numpy as np
import pytest

from frontdoor_lab.dataset import Dataset
from frontdoor_lab.errors import (
    EmptyResidualPool,
    FrontdoorLabError,
    TooFewCompleteRows,
)
from frontdoor_lab.frontdoor_estimator import (
    EffectEstimate,
    EstimatorConfig,
    FittedPair,
    MethodTag,
    ace_at,
    complete_case_effect,
    distribution_at,
    draw_mediator,
    effect_from_csv,
    effect_to_csv,
    estimate_effect,
    fit_pair,
)
from frontdoor_lab.mi_engine import CompletedDatasets
from frontdoor_lab.scm_sim import (
    ScmConfig,
    apply_missingness,
    generate_population,
    intervene_generate,
    oracle_ace,
    std_normal_cdf,
    std_normal_pdf,
)

from oracles import mean_u_given_x_quadrature

SCM = ScmConfig()


def complete_dataset(x, z, y):
    n = len(y)
    return Dataset(
        x_star=x, z_star=z, y_star=y,
        m_x=np.ones(n, dtype=bool), m_z=np.ones(n, dtype=bool),
    )


@pytest.fixture(scope="module")
def scm_pair():
    """One fitted pair on fully observed simulator output at desk scale."""
    pop = generate_population(SCM, 20000, seed=50)
    data = complete_dataset(pop.x, pop.z, pop.y)
    return fit_pair(data, EstimatorConfig(seed=51))


class TestFitPair:
    def test_noise_free_mediator_residuals(self):
        rng = np.random.default_rng(52)
        x = rng.uniform(-3, 3, 4000)
        z = 4 * std_normal_pdf(x)
        y = std_normal_pdf(z - 0.5) + 0.3 * z
        pair = fit_pair(complete_dataset(x, z, y))
        assert float(np.std(pair.mediator.residuals)) < 1e-3

    def test_mediator_prediction_at_center(self, scm_pair):
        from frontdoor_lab.spline_smooth import predict

        value = float(predict(scm_pair.mediator, 0.0)[0])
        assert value == pytest.approx(4 * std_normal_pdf(0.0), abs=0.01)

    def test_outcome_prediction_at_center(self, scm_pair):
        from frontdoor_lab.spline_smooth import predict

        # E(U | X = 0) vanishes by symmetry, checked against quadrature
        assert mean_u_given_x_quadrature(0.0) == pytest.approx(0.0, abs=1e-9)
        z0 = 4 * std_normal_pdf(0.0)
        truth = std_normal_pdf(z0 - 0.5) + 0.3 * z0
        value = float(predict(scm_pair.outcome, [np.array([0.0]), np.array([z0])])[0])
        assert value == pytest.approx(truth, abs=0.01)

    def test_conditional_mean_u_closed_form_matches_quadrature(self):
        for x in (-2.0, -0.5, 1.0, 2.5):
            closed = (std_normal_pdf(x - 2) - std_normal_pdf(x + 2)) / (
                std_normal_cdf(x + 2) - std_normal_cdf(x - 2)
            )
            assert closed == pytest.approx(mean_u_given_x_quadrature(x), abs=1e-7)

    def test_incomplete_data_rejected(self):
        pop = generate_population(SCM, 500, seed=53)
        data = apply_missingness(SCM, pop, seed=53)
        if data.is_complete():  # pragma: no cover - astronomically unlikely
            pytest.skip("masking produced no missing cells")
        with pytest.raises(FrontdoorLabError):
            fit_pair(data)


class TestDrawMediator:
    def test_zero_residual_pool_returns_prediction(self, scm_pair):
        from frontdoor_lab.spline_smooth import predict

        degenerate = FittedPair(
            mediator=dataclasses.replace(
                scm_pair.mediator, residuals=np.zeros_like(scm_pair.mediator.residuals)
            ),
            outcome=scm_pair.outcome,
            x_train=scm_pair.x_train,
        )
        draws = draw_mediator(degenerate, 1.0, 50, seed=54)
        assert np.allclose(draws, predict(scm_pair.mediator, 1.0)[0])

    def test_draw_mean_matches_prediction(self, scm_pair):
        from frontdoor_lab.spline_smooth import predict

        draws = draw_mediator(scm_pair, 0.5, 40000, seed=55)
        pool_sd = float(np.std(scm_pair.mediator.residuals))
        center = float(predict(scm_pair.mediator, 0.5)[0])
        assert float(np.mean(draws)) == pytest.approx(
            center, abs=3 * pool_sd / np.sqrt(40000)
        )

    def test_draw_spread_matches_mediator_noise(self, scm_pair):
        draws = draw_mediator(scm_pair, 1.0, 40000, seed=56)
        assert float(np.std(draws)) == pytest.approx(SCM.sigma_z, abs=0.01)

    def test_empty_pool_rejected(self, scm_pair):
        broken = FittedPair(
            mediator=dataclasses.replace(scm_pair.mediator, residuals=np.array([])),
            outcome=dataclasses.replace(scm_pair.outcome, residuals=np.array([])),
            x_train=np.array([]),
        )
        with pytest.raises(EmptyResidualPool):
            draw_mediator(broken, 0.0, 10, seed=57)


class TestAceAt:
    def test_constant_outcome_fit(self):
        rng = np.random.default_rng(58)
        x = rng.uniform(-1, 1, 500)
        z = rng.uniform(-1, 1, 500)
        y = np.full(500, 2.5)
        pair = fit_pair(complete_dataset(x, z, y))
        for target in (-0.7, 0.0, 1.3):
            assert ace_at(pair, target, seed=59) == pytest.approx(2.5, abs=1e-7)

    def test_unconfounded_linear_mechanism(self):
        rng = np.random.default_rng(60)
        n = 20000
        x = rng.uniform(-2, 2, n)
        z = x + 0.1 * rng.standard_normal(n)
        y = 0.3 * z + 0.05 * rng.standard_normal(n)
        pair = fit_pair(complete_dataset(x, z, y))
        for target in (-1.0, 0.5, 1.0):
            assert ace_at(pair, target, seed=61) == pytest.approx(0.3 * target, abs=0.01)

    def test_matches_oracle_on_complete_data(self, scm_pair):
        assert ace_at(scm_pair, 3.0, seed=62) == pytest.approx(
            oracle_ace(SCM, 3.0), abs=0.05
        )
        assert ace_at(scm_pair, 0.0, seed=63) == pytest.approx(
            oracle_ace(SCM, 0.0), abs=0.03
        )

    def test_row_permutation_invariance(self):
        pop = generate_population(SCM, 6000, seed=64)
        data = complete_dataset(pop.x, pop.z, pop.y)
        rng = np.random.default_rng(65)
        perm = rng.permutation(len(pop))
        shuffled = complete_dataset(pop.x[perm], pop.z[perm], pop.y[perm])
        cfg = EstimatorConfig(seed=66)
        a = np.mean([ace_at(fit_pair(data, cfg), 1.0, seed=s) for s in range(67, 73)])
        b = np.mean(
            [ace_at(fit_pair(shuffled, cfg), 1.0, seed=s) for s in range(73, 79)]
        )
        assert float(a) == pytest.approx(float(b), abs=0.01)

    def test_extra_draws_reduce_monte_carlo_noise(self):
        pop = generate_population(SCM, 2000, seed=80)
        pair = fit_pair(complete_dataset(pop.x, pop.z, pop.y))
        for target in (-1.0, 0.0, 1.0):
            single = np.array(
                [ace_at(pair, target, seed=s) for s in range(100, 150)]
            )
            averaged = np.array(
                [ace_at(pair, target, seed=s, draws_per_row=4) for s in range(150, 200)]
            )
            assert float(np.std(averaged)) < 0.75 * float(np.std(single))


class TestDistributionAt:
    def test_degenerate_pools_and_constant_fit(self):
        rng = np.random.default_rng(81)
        x = rng.uniform(-1, 1, 400)
        z = rng.uniform(-1, 1, 400)
        pair = fit_pair(complete_dataset(x, z, np.full(400, 1.5)))
        frozen = FittedPair(
            mediator=dataclasses.replace(
                pair.mediator, residuals=np.zeros_like(pair.mediator.residuals)
            ),
            outcome=dataclasses.replace(
                pair.outcome, residuals=np.zeros_like(pair.outcome.residuals)
            ),
            x_train=pair.x_train,
        )
        draws = distribution_at(frozen, 0.3, 200, seed=82)
        assert np.allclose(draws, 1.5, atol=1e-7)

    def test_quantile_monotonicity(self, scm_pair):
        for target in (-2.0, 0.0, 2.0):
            draws = distribution_at(scm_pair, target, 20000, seed=83)
            q05, q50, q95 = np.quantile(draws, [0.05, 0.5, 0.95])
            assert q05 <= q50 <= q95

    def test_quantiles_match_interventional_truth(self, scm_pair):
        draws = distribution_at(scm_pair, 0.0, 50000, seed=84)
        truth = intervene_generate(SCM, 0.0, 10**6, seed=85)
        assert float(np.quantile(draws, 0.05)) == pytest.approx(
            float(np.quantile(truth, 0.05)), abs=0.05
        )
        assert float(np.quantile(draws, 0.95)) == pytest.approx(
            float(np.quantile(truth, 0.95)), abs=0.05
        )

    def test_zeroed_outcome_pool_narrows_spread(self, scm_pair):
        narrowed = FittedPair(
            mediator=scm_pair.mediator,
            outcome=dataclasses.replace(
                scm_pair.outcome, residuals=np.zeros_like(scm_pair.outcome.residuals)
            ),
            x_train=scm_pair.x_train,
        )
        wide = distribution_at(scm_pair, 0.0, 20000, seed=86)
        narrow = distribution_at(narrowed, 0.0, 20000, seed=86)
        spread_wide = np.quantile(wide, 0.95) - np.quantile(wide, 0.05)
        spread_narrow = np.quantile(narrow, 0.95) - np.quantile(narrow, 0.05)
        assert spread_narrow < spread_wide


class TestEstimateEffect:
    def make_bundle(self, n=20000, m=3, seed=87):
        pop = generate_population(SCM, n, seed=seed)
        data = complete_dataset(pop.x, pop.z, pop.y)
        return CompletedDatasets(source=data, completed=tuple([data] * m))

    def test_identical_copies_pool_tightly(self):
        bundle = self.make_bundle()
        grid = np.array([-1.0, 0.0, 1.0])
        est = estimate_effect(bundle, grid, EstimatorConfig(seed=88))
        assert est.method is MethodTag.MULTIPLE_IMPUTATION
        for i in range(est.m):
            assert np.max(np.abs(est.per_imputation_ace[i] - est.pooled_ace)) < 0.01

    def test_pooled_is_exact_mean(self):
        bundle = self.make_bundle(n=3000)
        est = estimate_effect(bundle, np.array([0.0, 1.0]), EstimatorConfig(seed=89))
        assert np.array_equal(est.pooled_ace, est.per_imputation_ace.mean(axis=0))

    def test_single_point_grid(self):
        bundle = self.make_bundle(n=3000, m=2)
        est = estimate_effect(bundle, np.array([0.5]), EstimatorConfig(seed=90))
        assert est.pooled_ace.shape == (1,)
        assert est.q05.shape == (1,)

    def test_single_copy_pool_is_that_curve(self):
        bundle = self.make_bundle(n=3000, m=1)
        est = estimate_effect(bundle, np.array([-1.0, 1.0]), EstimatorConfig(seed=91))
        assert np.array_equal(est.pooled_ace, est.per_imputation_ace[0])

    def test_unsorted_grid_rejected(self):
        bundle = self.make_bundle(n=3000, m=2)
        with pytest.raises(FrontdoorLabError):
            estimate_effect(bundle, np.array([1.0, -1.0]), EstimatorConfig(seed=92))

    def test_frontdoor_agrees_with_direct_regression_when_unconfounded(self):
        # without the latent confounder both routes estimate the same curve
        cfg_unconfounded = ScmConfig(u_coef=0.0)
        pop = generate_population(cfg_unconfounded, 20000, seed=93)
        data = complete_dataset(pop.x, pop.z, pop.y)
        bundle = CompletedDatasets(source=data, completed=(data,))
        grid = np.linspace(-2, 2, 9)
        est = estimate_effect(bundle, grid, EstimatorConfig(seed=94))

        from frontdoor_lab.spline_smooth import build_basis, predict, select_lambda

        direct = select_lambda(pop.y, pop.x, build_basis(pop.x, 20))
        gap = est.pooled_ace - predict(direct, grid)
        assert float(np.max(np.abs(gap))) < 0.02


class TestCompleteCase:
    def test_no_missing_matches_estimate_effect(self):
        pop = generate_population(SCM, 8000, seed=95)
        data = complete_dataset(pop.x, pop.z, pop.y)
        grid = np.array([-1.0, 0.0, 1.0])
        cc = complete_case_effect(data, grid, EstimatorConfig(seed=96))
        mi = estimate_effect(
            CompletedDatasets(source=data, completed=(data,)),
            grid,
            EstimatorConfig(seed=97),
        )
        assert cc.method is MethodTag.COMPLETE_CASE
        assert np.max(np.abs(cc.pooled_ace - mi.pooled_ace)) < 0.01

    def test_too_few_complete_rows(self):
        rng = np.random.default_rng(98)
        n = 400
        x = rng.uniform(-1, 1, n)
        z = rng.uniform(-1, 1, n)
        y = rng.standard_normal(n)
        m_z = np.zeros(n, dtype=bool)
        m_z[:100] = True  # < 10 x basis dimension
        data = Dataset(
            x_star=x, z_star=np.where(m_z, z, np.nan), y_star=y,
            m_x=np.ones(n, dtype=bool), m_z=m_z,
        )
        with pytest.raises(TooFewCompleteRows):
            complete_case_effect(data, np.array([0.0]), EstimatorConfig(seed=99))


class TestEffectCsv:
    def test_round_trip(self, tmp_path):
        pop = generate_population(SCM, 3000, seed=100)
        data = complete_dataset(pop.x, pop.z, pop.y)
        bundle = CompletedDatasets(source=data, completed=(data, data))
        grid = np.linspace(-1, 1, 5)
        est = estimate_effect(bundle, grid, EstimatorConfig(seed=101))
        oracle = oracle_ace(SCM, grid)
        path = tmp_path / "effect.csv"
        effect_to_csv(est, oracle, path)
        back, oracle_back = effect_from_csv(path)
        assert np.array_equal(back.grid, est.grid)
        assert np.array_equal(back.per_imputation_ace, est.per_imputation_ace)
        assert np.array_equal(back.pooled_ace, est.pooled_ace)
        assert np.array_equal(back.q05, est.q05)
        assert np.array_equal(oracle_back, oracle)
        assert back.method is MethodTag.MULTIPLE_IMPUTATION

    def test_round_trip_many_imputations(self, tmp_path):
        # ten rows: the pooled-mean identity must survive the file layout
        rng = np.random.default_rng(104)
        grid = np.linspace(-3, 3, 41)
        per = rng.standard_normal((10, len(grid)))
        est = EffectEstimate(
            grid=grid,
            per_imputation_ace=per,
            pooled_ace=per.mean(axis=0),
            q05=np.full(len(grid), -1.0),
            q95=np.full(len(grid), 1.0),
            method=MethodTag.MULTIPLE_IMPUTATION,
        )
        path = tmp_path / "effect.csv"
        effect_to_csv(est, np.zeros(len(grid)), path)
        back, _ = effect_from_csv(path)
        assert np.array_equal(back.pooled_ace, est.pooled_ace)
        assert np.array_equal(back.per_imputation_ace, est.per_imputation_ace)

    def test_header_contract(self, tmp_path):
        pop = generate_population(SCM, 3000, seed=102)
        data = complete_dataset(pop.x, pop.z, pop.y)
        bundle = CompletedDatasets(source=data, completed=(data,))
        est = estimate_effect(bundle, np.array([0.0]), EstimatorConfig(seed=103))
        path = tmp_path / "effect.csv"
        effect_to_csv(est, oracle_ace(SCM, np.array([0.0])), path)
        header = path.read_text().splitlines()[0]
        assert header == "x,pooled_ace,ace_imp_1,q05,q95,oracle_ace,method"


class TestEffectEstimateInvariants:
    def test_band_ordering_enforced(self):
        with pytest.raises(FrontdoorLabError):
            EffectEstimate(
                grid=np.array([0.0]),
                per_imputation_ace=np.array([[1.0]]),
                pooled_ace=np.array([1.0]),
                q05=np.array([2.0]),
                q95=np.array([1.0]),
                method=MethodTag.MULTIPLE_IMPUTATION,
            )

    def test_pooled_mismatch_rejected(self):
        with pytest.raises(FrontdoorLabError):
            EffectEstimate(
                grid=np.array([0.0]),
                per_imputation_ace=np.array([[1.0], [2.0]]),
                pooled_ace=np.array([1.2]),
                q05=np.array([0.0]),
                q95=np.array([1.0]),
                method=MethodTag.MULTIPLE_IMPUTATION,
            )
