from __future__ import annotations

import pytest

from filecoin_abm.power import (
    NetworkPower,
    PowerKind,
    PowerTranche,
    expire_step,
    onboard,
    quality_adjusted_power,
    renew,
    terminate,
)
from filecoin_abm.units import EiB, PiB


def _check(ledger: NetworkPower):
    assert ledger.qap == ledger.rbp_cc + 10 * ledger.rbp_deal
    assert sum(ledger.per_agent_qap.values()) == ledger.qap
    cc = sum(t.rb_amount for t in ledger.active_tranches if t.kind is PowerKind.CC)
    deal = sum(t.rb_amount for t in ledger.active_tranches if t.kind is PowerKind.FILPLUS)
    assert (cc, deal) == (ledger.rbp_cc, ledger.rbp_deal)


class TestQAP:
    def test_cc_only(self):
        assert quality_adjusted_power(10 * EiB, 0) == 10 * EiB

    def test_deal_only(self):
        assert quality_adjusted_power(0, 10 * EiB) == 100 * EiB

    def test_mixed(self):
        # 10 EiB raw with a 20% verified-deal share
        assert quality_adjusted_power(8 * EiB, 2 * EiB) == 28 * EiB

    def test_negative(self):
        with pytest.raises(ValueError):
            quality_adjusted_power(-1, 0)


class TestOnboard:
    def test_zero_is_noop(self):
        lg = NetworkPower()
        assert onboard(lg, "a", 0, 0.5, 10) == (0, [])
        assert lg.qap == 0

    def test_full_filplus(self):
        lg = NetworkPower()
        dq, ts = onboard(lg, "a", PiB, 1.0, 10)
        assert dq == 10 * PiB
        assert [t.kind for t in ts] == [PowerKind.FILPLUS]

    def test_half_filplus(self):
        lg = NetworkPower()
        dq, _ = onboard(lg, "a", PiB, 0.5, 10)
        assert dq == 11 * PiB // 2
        _check(lg)

    def test_expiry_day(self):
        lg = NetworkPower(day=7)
        _, ts = onboard(lg, "a", PiB, 0.0, 30)
        assert ts[0].expiry_day == 37

    @pytest.mark.parametrize("kw", [{"fil_plus_fraction": 1.5}, {"rb_amount": -1}, {"duration": 0}])
    def test_invalid(self, kw):
        args = {"rb_amount": PiB, "fil_plus_fraction": 0.0, "duration": 10, **kw}
        with pytest.raises(ValueError):
            onboard(NetworkPower(), "a", **args)


class TestRenewAndExpire:
    def test_renew_zero(self):
        lg = NetworkPower()
        assert renew(lg, "a", 0, 10) == (0, [])

    def test_renew_expiring_cc(self):
        lg = NetworkPower()
        onboard(lg, "a", PiB, 0.0, 5)
        expire_step(lg, 5)
        assert lg.rbp_cc == 0
        dq, ts = renew(lg, "a", PiB, 10)
        assert dq == PiB and lg.rbp_cc == PiB
        assert ts[0].expiry_day == 15
        _check(lg)

    def test_filplus_not_renewable(self):
        lg = NetworkPower()
        onboard(lg, "a", PiB, 1.0, 5)
        expire_step(lg, 5)
        dq, _ = renew(lg, "a", PiB, 10)
        assert dq == 0
        assert lg.warnings and "clamped" in lg.warnings[0]

    def test_renew_clamped_to_own_expiry(self):
        lg = NetworkPower()
        onboard(lg, "a", PiB, 0.0, 5)
        onboard(lg, "b", PiB, 0.0, 5)
        expire_step(lg, 5)
        dq, _ = renew(lg, "a", 3 * PiB, 10)
        assert dq == PiB
        assert lg.expiring_cc == {"a": 0, "b": PiB}

    def test_no_expiry_leaves_ledger(self):
        lg = NetworkPower()
        onboard(lg, "a", PiB, 0.3, 50)
        before = (lg.rbp_cc, lg.rbp_deal, lg.qap)
        assert expire_step(lg, 10) == {}
        assert (lg.rbp_cc, lg.rbp_deal, lg.qap) == before

    def test_single_cc_expiry(self):
        lg = NetworkPower()
        onboard(lg, "a", PiB, 0.0, 3)
        onboard(lg, "a", 2 * PiB, 0.0, 9)
        expire_step(lg, 3)
        assert lg.rbp_cc == 2 * PiB and lg.qap == 2 * PiB

    def test_mixed_expiry(self):
        lg = NetworkPower()
        onboard(lg, "a", 4 * PiB, 0.25, 3)
        q0 = lg.qap
        out = expire_step(lg, 3)
        assert out == {"a": {"cc": 3 * PiB, "filplus": PiB}}
        assert q0 - lg.qap == 3 * PiB + 10 * PiB

    def test_skipped_day_detected(self):
        lg = NetworkPower()
        onboard(lg, "a", PiB, 0.0, 3)
        with pytest.raises(RuntimeError):
            expire_step(lg, 4)


class TestTerminate:
    def test_latest_expiry_first(self):
        lg = NetworkPower()
        onboard(lg, "a", PiB, 0.0, 10)
        onboard(lg, "a", PiB, 0.0, 20)
        for t in lg.active_tranches:
            t.pledge = 8.0
        removed = terminate(lg, "a", PiB + PiB // 2)
        assert [(t.expiry_day, rb) for t, rb, _ in removed] == [(20, PiB), (10, PiB // 2)]
        assert [p for *_, p in removed] == [8.0, 4.0]
        assert lg.rbp_cc == PiB // 2
        _check(lg)

    def test_over_terminate_clamped(self):
        lg = NetworkPower()
        onboard(lg, "a", PiB, 0.0, 10)
        terminate(lg, "a", 5 * PiB)
        assert lg.qap == 0 and lg.warnings


def test_tranche_validation():
    with pytest.raises(ValueError):
        PowerTranche("a", 0, PowerKind.CC, 0, 1)
    with pytest.raises(ValueError):
        PowerTranche("a", 1, PowerKind.CC, 5, 5)
