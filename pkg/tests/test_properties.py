"""Randomized property suites (500 cases each, derandomized for reproducibility)."""

from __future__ import annotations

import copy

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from filecoin_abm.agents import AgentSpec, estimate_fofr, fofr_decide, npv_of_duration
from filecoin_abm.data_io import config_from_dict
from filecoin_abm.engine import run
from filecoin_abm.experiments import SEEDED_NETWORK
from filecoin_abm.power import NetworkPower, PowerKind, expire_step, onboard, renew, terminate
from filecoin_abm.units import PiB, TiB

CASES = settings(max_examples=500, deadline=None, derandomize=True,
                 suppress_health_check=[HealthCheck.too_slow])

forecasts = st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=30, max_size=60).map(np.array)


@CASES
@given(f=forecasts, pledge=st.floats(1e-3, 1e3), k=st.floats(1e-3, 1e3), dur=st.integers(1, 30))
def test_fofr_scale_invariance(f, pledge, k, dur):
    base = estimate_fofr(f, dur, pledge)
    assert np.isclose(estimate_fofr(f * k, dur, pledge * k), base, rtol=1e-12, atol=1e-300)


@CASES
@given(f=forecasts, r1=st.floats(0, 2), dr=st.floats(0, 2), dur=st.integers(1, 30),
       pledge=st.floats(0, 10), cost=st.floats(0, 10), ext=st.floats(0, 1))
def test_npv_non_increasing_in_discount_rate(f, r1, dr, dur, pledge, cost, ext):
    lo = npv_of_duration(f, dur, pledge, cost, r1, ext)
    hi = npv_of_duration(f, dur, pledge, cost, r1 + dr, ext)
    assert hi <= lo + 1e-12 * max(1.0, abs(lo))


@CASES
@given(f=forecasts, pledge=st.floats(1e-3, 10), t1=st.floats(0, 50), dt=st.floats(0, 50),
       durs=st.lists(st.integers(1, 30), min_size=1, max_size=3, unique=True))
def test_fofr_threshold_monotonicity(f, pledge, t1, dt, durs):
    def active(th):
        spec = AgentSpec("f", "fofr", daily_onboard_rb=PiB, fofr_threshold=th, candidate_durations=tuple(durs))
        return fofr_decide(spec, f, pledge, expiring_cc=0).onboard_rb

    assert active(t1 + dt) <= active(t1)


def _seeded(agents, days):
    raw = copy.deepcopy(SEEDED_NETWORK)
    raw["end_day"] = raw["start_day"] + days
    raw["agents"] = agents
    return config_from_dict(raw)


@CASES
@given(k=st.integers(2, 6), n=st.integers(1, 64), eighths=st.integers(0, 8),
       renew=st.sampled_from([0.0, 0.5, 1.0]), dur=st.integers(2, 8), days=st.integers(1, 14))
def test_aggregation_linearity(k, n, eighths, renew, dur, days):
    # per-agent quota is a multiple of 16 TiB so every byte split is exact
    per_agent = 16 * n * TiB
    agent = {"strategy": "dca", "fil_plus_fraction": eighths / 8, "renewal_fraction": renew,
             "candidate_durations": [dur]}
    whole = run(_seeded([{**agent, "id": "one", "daily_onboard_rb": k * per_agent}], days))
    split = run(_seeded([{**agent, "id": f"p{j}", "daily_onboard_rb": per_agent} for j in range(k)], days))
    for name in ("rbp", "qap", "delta_minted", "locked_collateral", "circulating"):
        np.testing.assert_allclose(whole.series(name), split.series(name), rtol=1e-12)


@CASES
@given(quota=st.integers(1, 4096), fp=st.floats(0, 1), thr=st.floats(0, 0.5), disc=st.floats(0, 0.5),
       rate=st.floats(0, 0.4), days=st.integers(1, 6))
def test_determinism(quota, fp, thr, disc, rate, days):
    agents = [
        {"id": "d", "strategy": "dca", "daily_onboard_rb": quota * TiB, "fil_plus_fraction": fp},
        {"id": "f", "strategy": "fofr", "daily_onboard_rb": quota * TiB, "fofr_threshold": thr},
        {"id": "n", "strategy": "npv", "daily_onboard_rb": quota * TiB, "discount_rate": disc},
    ]
    cfg = config_from_dict({**copy.deepcopy(SEEDED_NETWORK), "end_day": SEEDED_NETWORK["start_day"] + days,
                            "agents": agents, "external_rate": rate})
    a, b = run(cfg), run(cfg)
    assert a.network == b.network and a.agents == b.agents


ops = st.lists(
    st.one_of(
        st.tuples(st.just("onboard"), st.sampled_from("abc"), st.integers(0, 10**18), st.floats(0, 1),
                  st.integers(1, 6)),
        st.tuples(st.just("renew"), st.sampled_from("abc"), st.integers(0, 10**18), st.integers(1, 6)),
        st.tuples(st.just("terminate"), st.sampled_from("abc"), st.integers(0, 10**18)),
        st.tuples(st.just("expire")),
    ),
    max_size=40,
)


@CASES
@given(seq=ops)
def test_power_ledger_identity_and_partition(seq):
    lg = NetworkPower(day=0)
    for op in seq:
        if op[0] == "onboard":
            onboard(lg, op[1], op[2], op[3], op[4])
        elif op[0] == "renew":
            renew(lg, op[1], op[2], op[3])
        elif op[0] == "terminate":
            terminate(lg, op[1], op[2])
        else:
            expire_step(lg, lg.day + 1)
        assert lg.qap == lg.rbp_cc + 10 * lg.rbp_deal
        assert sum(lg.per_agent_qap.values()) == lg.qap
        owned = {}
        for t in lg.active_tranches:
            owned[t.owner] = owned.get(t.owner, 0) + t.rb_amount * (10 if t.kind is PowerKind.FILPLUS else 1)
        assert {o: q for o, q in lg.per_agent_qap.items() if q} == owned
        assert lg.rbp_cc >= 0 and lg.rbp_deal >= 0
