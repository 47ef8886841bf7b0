from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest

from filecoin_abm.supply import (
    LN2,
    ModelBreakdownError,
    SupplyParams,
    SupplyState,
    VestingSchedule,
    accumulate_capped_rbp,
    baseline_function,
    baseline_minting_cumulative,
    burn_step,
    capped_rbp_for_baseline_minted,
    capped_rbp_for_network_time,
    circulating_supply_step,
    consensus_pledge_delta,
    effective_network_time,
    lock_collateral,
    lock_daily_reward,
    mint_step,
    minted_cumulative,
    release_due,
    simple_minting_cumulative,
    storage_pledge_delta,
    vesting_cumulative,
    vesting_step,
)
from filecoin_abm.units import EiB, PiB

P = SupplyParams()
B0 = 2.888888888 * EiB

# Frozen from a 50-digit mpmath evaluation.
SIMPLE_365 = 36003423.013688029436
AT_BASELINE_1Y_CUMSUM = 1752207546853808744999.234
AT_BASELINE_1Y_THETA = 364.75001980038101962
AT_BASELINE_1Y_MB = 83953709.111912841779


def _theta_route(r):
    mpmath.mp.dps = 40
    g, lam = mpmath.log(2) / 365, mpmath.log(2) / (6 * 365)
    b0 = mpmath.mpf("2.888888888") * mpmath.mpf(2) ** 60
    theta = mpmath.log(g * mpmath.mpf(r) / b0 + 1) / g
    return float(770e6 * (1 - mpmath.exp(-lam * theta)))


class TestParams:
    def test_defaults(self):
        assert P.simple_supply == pytest.approx(330e6, rel=1e-15)
        assert P.baseline_supply == pytest.approx(770e6, rel=1e-15)
        assert P.b0 == B0

    def test_fractions_must_sum_to_one(self):
        with pytest.raises(ValueError):
            SupplyParams(simple_fraction=0.5, baseline_fraction=0.6)

    def test_vesting_cap(self):
        too_much = (VestingSchedule("a", 0.5e9, 0, 10), VestingSchedule("b", 0.5e9, 0, 10))
        with pytest.raises(ValueError, match="exceeds cap"):
            SupplyParams(vesting_schedules=too_much)

    @pytest.mark.parametrize("kw", [{"lam": 0}, {"g": -1}, {"b0": 0}, {"reward_vest_fraction": 1.5},
                                    {"storage_pledge_mode": "other"}, {"reward_vest_days": 0}])
    def test_rejects_bad_values(self, kw):
        with pytest.raises(ValueError):
            SupplyParams(**kw)


class TestSimpleMinting:
    def test_zero(self):
        assert simple_minting_cumulative(0, P) == 0.0

    def test_half_life(self):
        assert simple_minting_cumulative(2190, P) == pytest.approx(165e6, rel=1e-12)

    def test_one_year_against_oracle(self):
        assert simple_minting_cumulative(365, P) == pytest.approx(SIMPLE_365, rel=1e-12)

    def test_bounded_and_monotone(self):
        d = np.arange(0, 100_000, 37)
        m = simple_minting_cumulative(d, P)
        assert np.all(np.diff(m) > 0)
        assert np.all(m < 330e6)

    def test_negative_day(self):
        with pytest.raises(ValueError):
            simple_minting_cumulative(-1, P)


class TestBaseline:
    def test_day_zero(self):
        assert baseline_function(0, P) == B0

    @pytest.mark.parametrize("d, k", [(365, 2), (730, 4)])
    def test_doublings(self, d, k):
        assert baseline_function(d, P) == pytest.approx(k * B0, rel=1e-12)

    def test_capped_increment(self):
        st = SupplyState(day=0)
        assert accumulate_capped_rbp(st, 0, P) == 0
        assert accumulate_capped_rbp(st, 100 * EiB, P) == B0
        assert accumulate_capped_rbp(st, 1 * EiB, P) == EiB
        assert st.capped_rbp_cumsum == B0 + EiB


class TestBaselineMinting:
    def test_zero(self):
        assert baseline_minting_cumulative(0.0, P) == 0.0
        assert effective_network_time(0.0, P) == 0.0

    def test_one_year_at_baseline(self):
        r = math.fsum(B0 * math.exp(P.g * t) for t in range(365))
        assert r == pytest.approx(AT_BASELINE_1Y_CUMSUM, rel=1e-14)
        assert effective_network_time(r, P) == pytest.approx(AT_BASELINE_1Y_THETA, rel=1e-12)
        assert baseline_minting_cumulative(r, P) == pytest.approx(AT_BASELINE_1Y_MB, rel=1e-9)

    def test_theta_is_one_over_g(self):
        r = (math.e - 1) * B0 / P.g
        assert effective_network_time(r, P) == pytest.approx(365 / LN2, rel=1e-12)

    @pytest.mark.parametrize("d", [30, 100, 1000])
    def test_network_time_tracks_wall_clock_at_baseline(self, d):
        r = math.fsum(B0 * math.exp(P.g * t) for t in range(d + 1))
        assert abs(effective_network_time(r, P) - d) < 1.0

    def test_limit(self):
        r = np.logspace(18, 40, 200)
        m = baseline_minting_cumulative(r, P)
        assert np.all(np.diff(m) > 0)
        assert m[-1] < 770e6
        assert m[-1] == pytest.approx(770e6, rel=1e-3)

    def test_matches_theta_route_randomized(self):
        rng = np.random.default_rng(7)
        r = 10 ** rng.uniform(15, 24, size=200)
        for x in r:
            assert baseline_minting_cumulative(x, P) == pytest.approx(_theta_route(x), rel=1e-9)

    def test_inverses(self):
        for r in (1e18, 3.3e21, 7.7e23):
            assert capped_rbp_for_baseline_minted(baseline_minting_cumulative(r, P), P) == pytest.approx(r, rel=1e-8)
            assert capped_rbp_for_network_time(effective_network_time(r, P), P) == pytest.approx(r, rel=1e-10)
        with pytest.raises(ValueError):
            capped_rbp_for_baseline_minted(770e6, P)

    def test_minted_cumulative_convention(self):
        # minted through day d uses simple time d + 1
        assert minted_cumulative(-1, 0.0, P) == 0.0
        assert minted_cumulative(0, 0.0, P) == pytest.approx(simple_minting_cumulative(1, P), rel=1e-15)


class TestVesting:
    S = (VestingSchedule("team", 100, 0, 200),)

    def test_before_start(self):
        assert vesting_cumulative(5, (VestingSchedule("x", 100, 10, 200),)) == 0

    def test_quarter_point(self):
        assert vesting_cumulative(50, self.S) == pytest.approx(25)

    def test_clamped(self):
        assert vesting_cumulative(400, self.S) == pytest.approx(100)


class TestRewardLocking:
    def test_single_tranche(self):
        st = SupplyState(day=0)
        lock_daily_reward(st, 180.0, P)
        assert st.locked_reward == pytest.approx(135.0)
        for d in range(1, 91):
            st.day = d
            r, _ = release_due(st)
            assert r == pytest.approx(0.75)
        assert st.locked_reward == pytest.approx(67.5)

    def test_zero(self):
        st = SupplyState(day=0)
        lock_daily_reward(st, 0.0, P)
        assert st.locked_reward == 0 and not st.pending_reward_releases

    def test_two_overlapping_tranches(self):
        st = SupplyState(day=0)
        lock_daily_reward(st, 180.0, P)
        st.day = 1
        release_due(st)
        lock_daily_reward(st, 180.0, P)
        st.day = 2
        r, _ = release_due(st)
        assert r == pytest.approx(1.5)

    def test_fully_released(self):
        st = SupplyState(day=0)
        lock_daily_reward(st, 180.0, P)
        for d in range(1, 181):
            st.day = d
            release_due(st)
        assert st.locked_reward == 0.0


class TestPledge:
    def test_storage_zero(self):
        assert storage_pledge_delta(0.0, 1, 100, P) == 0.0

    def test_storage_literal(self):
        assert storage_pledge_delta(10.0, 1, 100, P, mode="paper_literal") == 200.0

    def test_storage_share_scaled(self):
        assert storage_pledge_delta(10.0, 1, 100, P) == pytest.approx(2.0, rel=1e-15)

    def test_consensus_zero(self):
        assert consensus_pledge_delta(5e8, 0, 20 * EiB, 5 * EiB, P) == 0.0

    def test_consensus_qap_above_baseline(self):
        assert consensus_pledge_delta(5e8, 10 * PiB, 20 * EiB, 5 * EiB, P) == pytest.approx(73242.1875, rel=1e-12)

    def test_consensus_baseline_floor(self):
        assert consensus_pledge_delta(5e8, 10 * PiB, 1 * EiB, 5 * EiB, P) == pytest.approx(292968.75, rel=1e-12)


class TestCollateral:
    def test_zero_lock(self):
        st = SupplyState(day=10)
        lock_collateral(st, 0.0, 370)
        assert st.locked_collateral == 0

    def test_release_at_expiry(self):
        st = SupplyState(day=10)
        lock_collateral(st, 100.0, 370)
        for d in range(11, 370):
            st.day = d
            release_due(st)
        assert st.locked_collateral == 100.0
        st.day = 370
        _, c = release_due(st)
        assert c == 100.0 and st.locked_collateral == 0.0

    def test_same_day_releases_sum(self):
        st = SupplyState(day=0)
        lock_collateral(st, 40.0, 5)
        lock_collateral(st, 60.0, 5)
        st.day = 5
        assert release_due(st)[1] == 100.0

    def test_release_must_be_future(self):
        with pytest.raises(ValueError):
            lock_collateral(SupplyState(day=5), 1.0, 5)


class TestBurnAndCirculating:
    def test_no_burn(self):
        st = SupplyState(day=100)
        burn_step(st, 0.0, P)
        assert st.burnt_cum == 0

    def test_gas_burn(self):
        st = SupplyState(day=100)
        burn_step(st, 0.0, SupplyParams(gas_burn_rate_beta=1000.0))
        assert st.burnt_gas == pytest.approx(1e5)

    def test_termination_fees_accumulate(self):
        st = SupplyState(day=1)
        burn_step(st, 50.0, P)
        st.day = 2
        burn_step(st, 0.0, P)
        assert st.burnt_termination == 50.0

    def test_identity(self):
        st = SupplyState(day=0, minted_cum=100, vested_cum=50, locked_reward=10, locked_collateral=20,
                         burnt_termination=20)
        assert circulating_supply_step(st) == 100
        assert circulating_supply_step(SupplyState(day=0)) == 0

    def test_negative_supply_breaks_model(self):
        st = SupplyState(day=0, minted_cum=10, locked_collateral=20)
        with pytest.raises(ModelBreakdownError):
            circulating_supply_step(st)


def test_scripted_thirty_day_identity():
    """Replay a scripted event log and recompute each pool independently."""
    p = SupplyParams(vesting_schedules=(VestingSchedule("v", 1e6, 0, 20),), gas_burn_rate_beta=10.0)
    st = SupplyState.genesis(p)
    rng = np.random.default_rng(3)
    minted_log, collateral_log, fee_log = [], [], []
    for d in range(30):
        st.day = d
        release_due(st)
        amt = float(rng.uniform(0, 500))
        lock_collateral(st, amt, d + 5)
        collateral_log.append((d, amt))
        accumulate_capped_rbp(st, float(rng.uniform(0, 4)) * EiB, p)
        dm = mint_step(st, p)
        minted_log.append(dm)
        lock_daily_reward(st, dm, p)
        vesting_step(st, p)
        fee = float(rng.uniform(0, 3))
        fee_log.append(fee)
        burn_step(st, fee, p)
        circulating_supply_step(st)

        minted = math.fsum(minted_log)
        vested = vesting_cumulative(d, p.vesting_schedules)
        locked_r = math.fsum(0.75 * m * max(0, 180 - (d - k)) / 180 for k, m in enumerate(minted_log))
        locked_c = math.fsum(a for k, a in collateral_log if k + 5 > d)
        burnt = math.fsum(fee_log) + 10.0 * d
        expect = minted + vested - locked_r - locked_c - burnt
        assert st.circulating == pytest.approx(expect, rel=1e-12)
        assert st.minted_cum == pytest.approx(minted, rel=1e-12)
