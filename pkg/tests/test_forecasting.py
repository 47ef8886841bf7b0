from __future__ import annotations

import numpy as np
import pytest

from filecoin_abm.forecasting import (
    POWER_FLOOR,
    LinearForecaster,
    LinearModel,
    expected_minting_rate,
    fit_linear,
    forecast_power,
    rewards_per_sector,
)
from filecoin_abm.supply import (
    SupplyParams,
    SupplyState,
    accumulate_capped_rbp,
    baseline_function,
    mint_step,
    minted_cumulative,
    simple_minting_cumulative,
)
from filecoin_abm.units import EiB, GiB

P = SupplyParams()


class TestFit:
    def test_exact_line(self):
        m = fit_linear([0, 1], [1, 2])
        assert (m.slope, m.intercept) == pytest.approx((1.0, 1.0))

    def test_constant(self):
        assert fit_linear([3, 4, 5], [7, 7, 7]).slope == 0.0

    def test_window(self):
        full = fit_linear([0, 1, 2, 3], [0, 1, 2, 3], window=2)
        perturbed = fit_linear([0, 1, 2, 3], [50, -9, 2, 3], window=2)
        assert (perturbed.slope, perturbed.intercept) == pytest.approx((full.slope, full.intercept))
        assert perturbed.slope == pytest.approx(1.0)

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            fit_linear([1], [1])
        with pytest.raises(ValueError):
            fit_linear([0, 1, 2], [0, 1, 2], window=1)

    def test_large_day_indices_stay_accurate(self):
        d = np.arange(10_000, 10_090)
        m = fit_linear(d, 3.0 * d + 5.0)
        assert m.slope == pytest.approx(3.0, rel=1e-12)


class TestForecastPower:
    def test_line(self):
        np.testing.assert_allclose(forecast_power(LinearModel(1, 1), 5, 3, floor=0.0), [6, 7, 8])

    def test_floor(self):
        f = forecast_power(LinearModel(-1e9, 5e9), 0, 20)
        assert np.all(f >= POWER_FLOOR) and f[-1] == POWER_FLOOR

    def test_zero_slope(self):
        assert np.all(forecast_power(LinearModel(0, 4 * GiB), 0, 9) == 4 * GiB)


class TestMintingRate:
    def test_zero_power_is_simple_minting(self):
        st = SupplyState(day=99, capped_rbp_cumsum=1e20)
        m = expected_minting_rate(np.zeros(50), st, P)
        d = np.arange(100, 150)
        np.testing.assert_allclose(m, simple_minting_cumulative(d + 1, P) - simple_minting_cumulative(d, P),
                                   rtol=1e-9)

    def test_above_baseline_matches_scripted_run(self):
        st = SupplyState(day=9, capped_rbp_cumsum=0.0)
        rbp_hat = 1e3 * EiB * np.ones(30)
        m = expected_minting_rate(rbp_hat, st, P)
        # oracle: step the supply pools with RBP pinned to the baseline
        ref = SupplyState(day=9)
        ref.minted_cum = minted_cumulative(9, 0.0, P)
        out = []
        for d in range(10, 40):
            ref.day = d
            accumulate_capped_rbp(ref, baseline_function(d, P), P)
            out.append(mint_step(ref, P))
        np.testing.assert_allclose(m, out, rtol=1e-9)

    def test_one_day(self):
        st = SupplyState(day=4, capped_rbp_cumsum=2 * EiB)
        m = expected_minting_rate([EiB], st, P)
        expect = minted_cumulative(5, 3 * EiB, P) - minted_cumulative(4, 2 * EiB, P)
        assert m[0] == pytest.approx(expect, rel=1e-12)


class TestRewardsPerSector:
    def test_worked_example(self):
        r = rewards_per_sector([1e5], [10 * EiB])
        assert r[0] == pytest.approx(1e5 * 32 * 2**30 / (10 * 2**60), rel=1e-15)

    def test_filplus_is_tenfold(self):
        assert rewards_per_sector([1e5], [EiB], sector_quality=10)[0] == 10 * rewards_per_sector([1e5], [EiB])[0]

    def test_qap_doubling_halves(self):
        assert rewards_per_sector([7.0], [2 * EiB])[0] == rewards_per_sector([7.0], [EiB])[0] / 2

    def test_nonpositive_qap(self):
        with pytest.raises(ValueError):
            rewards_per_sector([1.0], [0.0])


class TestLinearForecaster:
    def test_single_point_extrapolates_constant(self):
        fc = LinearForecaster().forecast([5], [EiB], [2 * EiB], SupplyState(day=5), P, 10)
        assert np.all(fc.rbp_hat == EiB) and np.all(fc.qap_hat == 2 * EiB)
        assert fc.start_day == 6 and fc.rewards_per_sector.size == 10

    def test_uses_trailing_window(self):
        days = np.arange(0, 200, dtype=float)
        rbp = np.where(days < 150, 50.0 * EiB, EiB + days * GiB)
        fc = LinearForecaster(window=30).forecast(days, rbp, rbp, SupplyState(day=199), P, 3)
        np.testing.assert_allclose(fc.rbp_hat, EiB + np.arange(200, 203) * GiB, rtol=1e-9)
