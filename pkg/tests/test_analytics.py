import datetime as dt
import math

import numpy as np
import pytest

import oracles
from saber import analytics
from saber.analytics import (
    BEAR,
    BULL,
    SIDEWAYS,
    annualized_return,
    annualized_volatility,
    capm_fit,
    compute_metrics,
    cumulative_return,
    drawdown_diagnostics,
    label_regime,
    max_drawdown,
    mean_of_reports,
    paired_t_test,
    sharpe,
    sortino,
    student_t_two_sided_p,
    underwater_series,
)
from saber.errors import (
    DegenerateRegressor,
    InvalidDf,
    LengthMismatch,
    NoDownside,
    NonPositiveValue,
    TooFewObservations,
    TotalLoss,
    ZeroDays,
    ZeroVarianceDifferences,
    ZeroVolatility,
)
from synth import series_from_closes, weekdays, yearly_target_closes

RNG = np.random.Generator(np.random.PCG64(77))


def random_curve(n, rng=RNG):
    return 100.0 * np.exp(np.cumsum(rng.normal(0.0002, 0.02, n)))


class TestReturnMetrics:
    def test_cr_no_exposure(self):
        assert cumulative_return([0, 0, 0], [0.5, -0.2, 0.1]) == 0.0

    def test_cr_always_long(self):
        got = cumulative_return([1, 1, 1], [0.1, -0.05, 0.2])
        assert got == pytest.approx(1.1 * 0.95 * 1.2 - 1.0, rel=1e-15)

    def test_cr_total_loss(self):
        assert cumulative_return([1], [-1.0]) == -1.0

    def test_cr_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            cumulative_return([1, 0], [0.1])

    def test_ar_one_year(self):
        assert annualized_return(1.0, 252) == pytest.approx(1.0, abs=1e-15)

    def test_ar_zero(self):
        assert annualized_return(0.0, 100) == 0.0

    def test_ar_two_years(self):
        assert annualized_return(0.1, 504) == pytest.approx(
            oracles.annualized_return_direct(0.1, 504), rel=1e-13
        )

    def test_ar_errors(self):
        with pytest.raises(TotalLoss):
            annualized_return(-1.0, 252)
        with pytest.raises(ZeroDays):
            annualized_return(0.5, 0)

    def test_av_constant_returns(self):
        assert annualized_volatility([0.01] * 10) == 0.0

    def test_av_two_points(self):
        got = annualized_volatility([0.01, -0.01])
        assert got == pytest.approx(oracles.std_sample([0.01, -0.01]) * math.sqrt(252), rel=1e-14)

    def test_av_too_few(self):
        with pytest.raises(TooFewObservations):
            annualized_volatility([0.01])


class TestDrawdown:
    def test_known_curve(self):
        assert max_drawdown([100, 120, 90, 110, 80]) == pytest.approx(-1 / 3, rel=1e-15)

    def test_monotone_rising(self):
        assert max_drawdown([1, 2, 3, 4]) == 0.0

    def test_single_point(self):
        assert max_drawdown([100.0]) == 0.0

    def test_non_positive_rejected(self):
        with pytest.raises(NonPositiveValue):
            max_drawdown([100.0, 0.0])

    def test_matches_brute_force(self):
        rng = np.random.Generator(np.random.PCG64(123))
        for _ in range(300):
            v = random_curve(int(rng.integers(2, 300)), rng)
            assert max_drawdown(v) == oracles.mdd_brute_force(v)

    def test_underwater_examples(self):
        np.testing.assert_allclose(underwater_series([100, 90, 100]), [0.0, -0.10, 0.0])
        assert (underwater_series([1, 2, 3]) == 0).all()
        np.testing.assert_allclose(
            underwater_series([100, 120, 90, 110, 80]),
            [0.0, 0.0, -0.25, -1 / 12, -1 / 3],
            rtol=1e-14,
        )

    def test_underwater_min_is_mdd(self):
        for _ in range(100):
            v = random_curve(200)
            assert float(underwater_series(v).min()) == max_drawdown(v)

    def test_underwater_zero_exactly_at_peaks(self):
        v = random_curve(500)
        under = underwater_series(v)
        peaks = np.maximum.accumulate(v)
        assert ((under == 0.0) == (v == peaks)).all()

    def test_diagnostics_runs(self):
        diag = drawdown_diagnostics([100, 95, 96, 101, 99, 102], total_commission=5.0,
                                    initial_capital=100.0)
        assert diag.episode_count == 2
        assert diag.max_duration_days == 2
        assert diag.mean_duration_days == pytest.approx(1.5)
        assert diag.commission_ratio == pytest.approx(0.05)

    def test_diagnostics_no_drawdown(self):
        diag = drawdown_diagnostics([1.0, 2.0, 3.0])
        assert diag.episode_count == 0
        assert diag.max_duration_days == 0
        assert diag.mean_duration_days == 0.0


class TestRatios:
    def test_sharpe_zero_excess(self):
        rf_daily = 0.03 / 252
        r = np.array([rf_daily + 0.01, rf_daily - 0.01, rf_daily + 0.01, rf_daily - 0.01])
        assert sharpe(r) == pytest.approx(0.0, abs=1e-12)

    def test_sharpe_zero_volatility(self):
        with pytest.raises(ZeroVolatility):
            sharpe([0.03 / 252] * 10)

    def test_sharpe_matches_direct(self):
        r = RNG.normal(0.001, 0.02, 250)
        assert sharpe(r) == pytest.approx(oracles.sharpe_direct(r), rel=1e-12)

    def test_sortino_all_positive(self):
        with pytest.raises(NoDownside):
            sortino([0.01, 0.02, 0.03])

    def test_sortino_single_negative(self):
        with pytest.raises(NoDownside):
            sortino([0.01, -0.02, 0.03])

    def test_sortino_mirror_sequence(self):
        r = np.array([0.02, -0.02, 0.01, -0.01, 0.03, -0.03])
        assert sortino(r) == pytest.approx(oracles.sortino_direct(r), rel=1e-12)


class TestScaleInvariance:
    def test_metrics_unchanged_under_scaling(self):
        v = random_curve(300)
        init = 100.0
        for c in (0.001, 3.7, 1e6):
            a = compute_metrics(v, init)
            b = compute_metrics(v * c, init * c)
            assert a.max_drawdown == pytest.approx(b.max_drawdown, rel=1e-12)
            assert a.cumulative_return == pytest.approx(b.cumulative_return, rel=1e-12)
            assert a.annualized_return == pytest.approx(b.annualized_return, rel=1e-12)
            assert a.annualized_volatility == pytest.approx(b.annualized_volatility, rel=1e-12)
            assert a.sharpe == pytest.approx(b.sharpe, rel=1e-12)
            assert a.sortino == pytest.approx(b.sortino, rel=1e-12)
            np.testing.assert_allclose(
                underwater_series(v), underwater_series(v * c), rtol=1e-12
            )


@pytest.fixture(scope="module")
def index_series():
    dates, closes = yearly_target_closes({2020: 0.25, 2021: -0.20, 2022: 0.10})
    return series_from_closes("IDX", dates, closes)


class TestRegimes:
    def test_bull(self, index_series):
        label = label_regime(index_series, 2020)
        assert label.label == BULL
        assert label.annual_return == pytest.approx(0.25, abs=1e-12)

    def test_bear_boundary_inclusive(self, index_series):
        label = label_regime(index_series, 2021)
        assert label.label == BEAR
        assert label.annual_return == pytest.approx(-0.20, abs=1e-12)

    def test_sideways(self, index_series):
        assert label_regime(index_series, 2022).label == SIDEWAYS

    def test_no_data(self, index_series):
        from saber.errors import NoDataForYear

        with pytest.raises(NoDataForYear):
            label_regime(index_series, 1999)


class TestStudentT:
    def test_t_zero_is_one(self):
        for df in (1, 2, 10, 100):
            assert student_t_two_sided_p(0.0, df) == pytest.approx(1.0, abs=1e-14)

    def test_cauchy_closed_form(self):
        assert student_t_two_sided_p(1.0, 1) == pytest.approx(0.5, abs=1e-12)
        for t in (0.3, 2.5, 17.0):
            assert student_t_two_sided_p(t, 1) == pytest.approx(
                oracles.cauchy_two_sided(t), abs=1e-12
            )

    def test_normal_limit(self):
        assert student_t_two_sided_p(1.959964, 10**7) == pytest.approx(0.05, abs=1e-4)

    def test_against_reference_grid(self):
        for df in (1, 2, 3, 5, 10, 30, 100, 500):
            for t in (0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0):
                assert student_t_two_sided_p(t, df) == pytest.approx(
                    oracles.t_two_sided_ref(t, df), abs=1e-10
                )

    def test_monotone_in_t(self):
        for df in (1, 7, 63):
            ps = [student_t_two_sided_p(t, df) for t in np.linspace(0, 8, 60)]
            assert all(a >= b for a, b in zip(ps, ps[1:]))

    def test_invalid_df(self):
        with pytest.raises(InvalidDf):
            student_t_two_sided_p(1.0, 0)
        with pytest.raises(InvalidDf):
            student_t_two_sided_p(1.0, 2.5)


class TestCapm:
    def test_self_regression(self):
        r = RNG.normal(0.0005, 0.01, 300)
        fit = capm_fit(r, r)
        assert fit.beta == pytest.approx(1.0, abs=1e-12)
        assert fit.alpha == pytest.approx(0.0, abs=1e-12)
        assert fit.residual_variance == pytest.approx(0.0, abs=1e-20)

    def test_known_coefficients_zero_noise(self):
        rf_daily = 0.03 / 252
        r_m = RNG.normal(0.0003, 0.012, 504) + rf_daily
        excess_m = r_m - rf_daily
        r_s = (0.0001 + 0.5 * excess_m) + rf_daily
        fit = capm_fit(r_s, r_m)
        assert fit.beta == pytest.approx(0.5, abs=1e-9)
        assert fit.alpha == pytest.approx(0.0001 * 252, abs=1e-9)

    def test_constant_market(self):
        with pytest.raises(DegenerateRegressor):
            capm_fit([0.01, 0.02, 0.03], [0.005, 0.005, 0.005])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            capm_fit([0.01, 0.02], [0.01, 0.02, 0.03])


class TestPairedT:
    def test_identical_samples(self):
        with pytest.raises(ZeroVarianceDifferences):
            paired_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])

    def test_matches_direct_formula(self):
        a = RNG.normal(0.01, 0.05, 40)
        b = RNG.normal(0.005, 0.05, 40)
        res = paired_t_test(a, b)
        d = a - b
        t_direct = oracles.mean_fsum(d) / (oracles.std_sample(d) / math.sqrt(len(d)))
        assert res.t_statistic == pytest.approx(t_direct, rel=1e-12)
        assert res.df == 39
        assert res.mean_difference == pytest.approx(oracles.mean_fsum(d), rel=1e-12)

    def test_zero_mean_difference_p_is_one(self):
        a = [1.0, 2.0, 3.0, 4.0]
        b = [2.0, 1.0, 4.0, 3.0]  # differences sum to zero, nonzero variance
        res = paired_t_test(a, b)
        assert res.t_statistic == pytest.approx(0.0, abs=1e-15)
        assert res.p_value == pytest.approx(1.0, abs=1e-12)


class TestComposition:
    def test_cr_ar_composition(self):
        rng = np.random.Generator(np.random.PCG64(31))
        for _ in range(50):
            n = int(rng.integers(10, 600))
            s = rng.integers(0, 2, n)
            r = rng.normal(0, 0.02, n)
            c = cumulative_return(s, r)
            direct = oracles.annualized_return_direct(
                oracles.cumulative_return_direct(s, r), n
            )
            assert annualized_return(c, n) == pytest.approx(direct, rel=1e-12)


class TestReportBundle:
    def test_flags_for_flat_curve(self):
        rep = compute_metrics(np.full(10, 100.0), 100.0)
        assert rep.sharpe is None and rep.sortino is None
        assert analytics.SHARPE_UNDEFINED in rep.flags
        assert analytics.SORTINO_UNDEFINED in rep.flags
        assert rep.cumulative_return == 0.0

    def test_mean_of_reports_is_arithmetic(self):
        a = compute_metrics(random_curve(100), 100.0)
        b = compute_metrics(random_curve(100), 100.0)
        avg = mean_of_reports([a, b])
        for name in ("cumulative_return", "annualized_return", "max_drawdown",
                     "annualized_volatility", "sharpe", "sortino"):
            va, vb, vm = getattr(a, name), getattr(b, name), getattr(avg, name)
            assert vm == pytest.approx((va + vb) / 2, rel=1e-14)
