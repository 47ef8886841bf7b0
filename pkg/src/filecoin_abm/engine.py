"""Daily closed-loop simulation of the storage network economy.

Within a day the engine runs, in order: lock releases and power expiry,
forecast refresh, agent decisions (from history through the previous day),
application of decisions and pledge locking, minting/vesting/burning, the
circulating-supply update, reward distribution and borrowing-cost accrual.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from datetime import date
from enum import Enum
from typing import Callable

import numpy as np

from ._version import __version__
from .agents import AgentAccount, AgentSpec, Observation, PowerDecision, Strategy, decide, throughput_multipliers
from .forecasting import Forecaster, LinearForecaster
from .power import NetworkPower, PowerKind, PowerTranche, expire_step, onboard, renew, terminate
from .supply import (
    ModelBreakdownError,
    SupplyParams,
    SupplyState,
    accumulate_capped_rbp,
    baseline_function,
    burn_step,
    circulating_supply_step,
    consensus_pledge_delta,
    lock_collateral,
    lock_daily_reward,
    minted_cumulative,
    mint_step,
    release_collateral_early,
    release_due,
    storage_pledge_delta,
    vesting_step,
)
from .units import DEFAULT_SECTOR_SIZE, GiB

logger = logging.getLogger(__name__)

GENESIS_DATE = date(2020, 10, 15)
REPLAY_AGENT_ID = "historical"


class Mode(str, Enum):
    SIMULATE = "simulate"
    BACKTEST = "backtest"


class SimulationAborted(RuntimeError):
    """Raised when the model breaks down mid-run; carries the partial trajectory."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class RateSchedule:
    """Piecewise-constant annual borrowing rate.

    Segment ``k`` covers ``[start_k, start_{k+1})``; the last segment runs to
    ``end_day`` (exclusive) or forever when ``end_day`` is None.
    """

    segments: tuple = ((0, 0.0),)
    end_day: int | None = None

    def __post_init__(self):
        segs = tuple(sorted((int(d), float(r)) for d, r in self.segments))
        if not segs:
            raise ValueError("rate schedule needs at least one segment")
        if len({d for d, _ in segs}) != len(segs):
            raise ValueError("rate schedule has duplicate start days")
        if any(r < 0 for _, r in segs):
            raise ValueError("rates must be >= 0")
        if self.end_day is not None and self.end_day <= segs[-1][0]:
            raise ValueError("end_day must be after the last segment start")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def constant(cls, rate: float, start_day: int = 0) -> "RateSchedule":
        return cls(((start_day, rate),))

    def rate_at(self, day: int) -> float:
        if day < self.segments[0][0] or (self.end_day is not None and day >= self.end_day):
            raise ValueError(f"day {day} is outside the rate schedule span")
        rate = self.segments[0][1]
        for start, r in self.segments:
            if start <= day:
                rate = r
            else:
                break
        return rate


def external_rate(schedule: RateSchedule, day: int) -> float:
    return schedule.rate_at(day)


@dataclass(frozen=True)
class ForecastSettings:
    window: int = 90
    floor: float = float(GiB)
    sector_size: float = float(DEFAULT_SECTOR_SIZE)


@dataclass(frozen=True)
class InitialState:
    """Network state at the end of ``start_day - 1``.

    Pre-existing power belongs to ``owner`` and expires uniformly over the
    first ``expiry_days`` simulated days; pre-existing collateral is released
    alongside it.
    """

    rbp_cc: float = 0.0
    rbp_deal: float = 0.0
    expiry_days: int = 540
    owner: str = "legacy"
    capped_rbp_cumsum: float = 0.0
    locked_reward: float = 0.0
    locked_collateral: float = 0.0
    burnt: float = 0.0
    vested_offset: float = 0.0

    def __post_init__(self):
        for name in ("rbp_cc", "rbp_deal", "capped_rbp_cumsum", "locked_reward", "locked_collateral", "burnt"):
            if getattr(self, name) < 0:
                raise ValueError(f"initial.{name} must be >= 0")
        if self.expiry_days < 1:
            raise ValueError("initial.expiry_days must be >= 1")


@dataclass(frozen=True)
class SimulationConfig:
    start_day: int = 0
    end_day: int = 30
    supply_params: SupplyParams = field(default_factory=SupplyParams)
    agent_specs: tuple = ()
    external_rate_schedule: RateSchedule = field(default_factory=RateSchedule)
    forecast: ForecastSettings = field(default_factory=ForecastSettings)
    initial: InitialState = field(default_factory=InitialState)
    mode: Mode = Mode.SIMULATE
    seed: int = 0  # reserved for stochastic extensions
    genesis_date: date = GENESIS_DATE
    termination_fee_days: float = 90.0
    backtest_duration: int = 360
    backtest_max_rel_error: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "agent_specs", tuple(self.agent_specs))
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.start_day < 0:
            raise ValueError("start_day must be >= 0")
        if self.end_day < self.start_day:
            raise ValueError("end_day must not precede start_day")
        ids = [s.id for s in self.agent_specs]
        if len(set(ids)) != len(ids):
            raise ValueError("agent ids must be unique")
        if self.initial.owner in ids and (self.initial.rbp_cc or self.initial.rbp_deal):
            raise ValueError(f"initial power owner {self.initial.owner!r} clashes with an agent id")
        if self.backtest_duration < 1:
            raise ValueError("backtest_duration must be >= 1")
        if self.termination_fee_days < 0:
            raise ValueError("termination_fee_days must be >= 0")

    @property
    def days(self) -> int:
        return self.end_day - self.start_day


@dataclass
class DayRecord:
    day: int
    rbp: float
    rbp_cc: float
    rbp_deal: float
    qap: float
    baseline: float
    delta_minted: float
    minted_cum: float
    vested_cum: float
    locked_reward: float
    locked_collateral: float
    burnt_termination: float
    burnt_gas: float
    circulating: float
    capped_rbp_cumsum: float
    pledge_per_sector: float
    circulating_for_pledge: float = 0.0
    onboarded_rb: float = 0.0
    onboarded_deal_rb: float = 0.0
    renewed_rb: float = 0.0
    terminated_rb: float = 0.0
    external_rate: float = 0.0
    rewards: dict = field(default_factory=dict)

    @property
    def locked(self) -> float:
        return self.locked_reward + self.locked_collateral

    @property
    def burnt_cum(self) -> float:
        return self.burnt_termination + self.burnt_gas


@dataclass
class AgentDayRecord:
    day: int
    agent_id: str
    qap: float
    daily_reward: float
    cum_reward: float
    pledge_outstanding: float
    borrow_cost_cum: float
    net_cum_reward: float
    onboarded_rb_cum: float = 0.0


@dataclass
class Trajectory:
    config: SimulationConfig
    agent_ids: list
    initial: DayRecord | None = None
    network: list = field(default_factory=list)
    agents: list = field(default_factory=list)
    decisions: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    engine_version: str = __version__

    def __len__(self):
        return len(self.network)

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.network], dtype=float)

    def agent_series(self, agent_id: str, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.agents if r.agent_id == agent_id], dtype=float)


def distribute_rewards(delta_minted: float, per_agent_qap: dict, qap_total: float) -> dict:
    """Split a day's minting pro rata to each owner's share of network QAP."""
    if delta_minted < 0:
        raise ValueError("delta_minted must be >= 0")
    if qap_total <= 0:
        return {}
    return {owner: delta_minted * q / qap_total for owner, q in per_agent_qap.items() if q > 0}


def _baseline(day, p):
    # pre-genesis seed day (-1) still needs a target for the seed record
    return p.b0 * math.exp(p.g * day)


def _split_evenly(total: int, n: int) -> list:
    base, rem = divmod(total, n)
    return [base + (1 if k < rem else 0) for k in range(n)]


class Simulation:
    """One simulation run. Use :meth:`run`, or :meth:`step` day by day."""

    def __init__(self, config: SimulationConfig, forecaster: Forecaster | None = None,
                 agent_update: Callable | None = None, replay: dict | None = None):
        self.config = config
        self.params = config.supply_params
        fs = config.forecast
        self.forecaster = forecaster or LinearForecaster(fs.window, fs.floor, fs.sector_size)
        self.sector_size = fs.sector_size
        self.agent_update = agent_update
        self.replay = replay
        self.specs = sorted(config.agent_specs, key=lambda s: s.id)
        if replay is not None:
            self.specs = [AgentSpec(REPLAY_AGENT_ID, Strategy.DCA)]
        self._refresh_population()
        self.accounts = {s.id: AgentAccount(s.id) for s in self.specs}
        self.growth_index = 1.0
        self.day = config.start_day
        self._seed()
        self.trajectory = Trajectory(config=config, agent_ids=[s.id for s in self.specs], initial=self._initial_record)
        self._hist_days = [self._initial_record.day]
        self._hist_rbp = [self._initial_record.rbp]
        self._hist_qap = [self._initial_record.qap]

    def _refresh_population(self):
        self.multipliers = throughput_multipliers(self.specs) if self.specs else {}
        self._needs_forecast = any(s.strategy is not Strategy.DCA for s in self.specs)
        self._max_duration = max((max(s.candidate_durations) for s in self.specs), default=1)

    def _seed(self):
        cfg, p, init = self.config, self.params, self.config.initial
        start = cfg.start_day
        self.ledger = NetworkPower(day=start - 1)
        cc, deal = int(round(init.rbp_cc)), int(round(init.rbp_deal))
        n = init.expiry_days
        collateral_release = None
        if cc or deal:
            per_day = list(zip(_split_evenly(cc, n), _split_evenly(deal, n)))
            qa_total = cc + 10 * deal
            collateral_release = {}
            for k, (c, dl) in enumerate(per_day):
                for amount, kind in ((c, PowerKind.CC), (dl, PowerKind.FILPLUS)):
                    if amount:
                        self.ledger._add(PowerTranche(init.owner, amount, kind, start - 1, start + k))
                if init.locked_collateral and (c or dl):
                    collateral_release[start + k] = init.locked_collateral * (c + 10 * dl) / qa_total
        try:
            self.supply = SupplyState.genesis(
                p, start,
                capped_rbp_cumsum=init.capped_rbp_cumsum,
                locked_reward=init.locked_reward,
                locked_collateral=init.locked_collateral,
                burnt_termination=init.burnt,
                vested_offset=init.vested_offset,
                collateral_release=collateral_release,
            )
        except ModelBreakdownError as exc:
            raise SimulationAborted(f"seed state is inconsistent: {exc}") from exc
        rbp = float(self.ledger.rbp)
        b_prev = _baseline(start - 1, p)
        if start >= 1:
            r_prev = max(init.capped_rbp_cumsum - min(b_prev, rbp), 0.0)
            dm = self.supply.minted_cum - minted_cumulative(start - 2, r_prev, p)
        else:
            dm = 0.0
        self.supply.delta_minted = dm
        self._last_delta_minted = dm
        self._last_pledge = self._pledge_per_sector(dm, float(self.ledger.qap), b_prev, self.supply.circulating, 0.0)
        self._initial_record = self._record(start - 1, b_prev, self._last_pledge, self.supply.circulating, {}, {}, 0.0)

    def _pledge_per_sector(self, delta_minted_prev, qap, baseline, circulating, qap_onboarded):
        p, s = self.params, self.sector_size
        if p.storage_pledge_mode == "paper_literal":
            storage = storage_pledge_delta(delta_minted_prev, s, 0, p) * s / max(qap_onboarded, s)
        else:
            storage = storage_pledge_delta(delta_minted_prev, s, max(qap, s), p)
        return storage + consensus_pledge_delta(circulating, s, qap, baseline, p)

    def _record(self, day, baseline, pledge, circ_for_pledge, flows, rewards, rate):
        st, lg = self.supply, self.ledger
        return DayRecord(
            day=day,
            rbp=float(lg.rbp), rbp_cc=float(lg.rbp_cc), rbp_deal=float(lg.rbp_deal), qap=float(lg.qap),
            baseline=baseline,
            delta_minted=st.delta_minted, minted_cum=st.minted_cum, vested_cum=st.vested_cum,
            locked_reward=st.locked_reward, locked_collateral=st.locked_collateral,
            burnt_termination=st.burnt_termination, burnt_gas=st.burnt_gas,
            circulating=st.circulating, capped_rbp_cumsum=st.capped_rbp_cumsum,
            pledge_per_sector=pledge, circulating_for_pledge=circ_for_pledge,
            onboarded_rb=flows.get("onboarded", 0.0), onboarded_deal_rb=flows.get("onboarded_deal", 0.0),
            renewed_rb=flows.get("renewed", 0.0), terminated_rb=flows.get("terminated", 0.0),
            external_rate=rate, rewards=rewards,
        )

    # -- observation and decisions -------------------------------------------------

    def observe(self, day: int, expiring_cc: dict | None = None) -> dict:
        """Build each agent's observation for ``day`` from recorded history only."""
        rate = self.config.external_rate_schedule.rate_at(day)
        if self._needs_forecast:
            last = self.trajectory.network[-1] if self.trajectory.network else self.trajectory.initial
            snapshot = SupplyState(day=last.day, capped_rbp_cumsum=last.capped_rbp_cumsum)
            horizon = max(self.config.end_day - day, self._max_duration)
            fc = self.forecaster.forecast(self._hist_days, self._hist_rbp, self._hist_qap, snapshot, self.params, horizon)
            rps = fc.rewards_per_sector
        else:
            rps = np.zeros(0)
        expiring_cc = expiring_cc or {}
        return {
            s.id: Observation(day, rps, self._last_pledge, rate, float(expiring_cc.get(s.id, 0)))
            for s in self.specs
        }

    def decide(self, day: int, observations: dict) -> list:
        if self.replay is not None:
            return [self.replay[day]]
        return [decide(s, observations[s.id], self.multipliers[s.id]) for s in self.specs]

    # -- daily step ---------------------------------------------------------------------

    def step(self, day: int | None = None) -> DayRecord:
        day = self.day if day is None else day
        if day != self.day:
            raise ValueError(f"expected day {self.day}, got {day}")
        if not self.config.start_day <= day < self.config.end_day:
            raise ValueError(f"day {day} outside [{self.config.start_day}, {self.config.end_day})")
        p, st, lg = self.params, self.supply, self.ledger
        circ_prev = st.circulating

        # (1) releases and expiry
        st.day = day
        release_due(st)
        for acct in self.accounts.values():
            acct.release_pledge(day)
        expire_step(lg, day)

        # (2-3) forecast and decisions, from history through day - 1
        obs = self.observe(day, lg.expiring_cc)
        decisions = self.decide(day, obs)

        # (4) aggregate and apply
        flows, term_fees, delta_qa, new_tranches = self._apply(day, decisions)
        qap = float(lg.qap)
        baseline = baseline_function(day, p)
        self._lock_pledges(day, delta_qa, new_tranches, qap, baseline, circ_prev)

        # (5) minting, reward vesting, token vesting, burning
        accumulate_capped_rbp(st, float(lg.rbp), p)
        dm = mint_step(st, p)
        lock_daily_reward(st, dm, p)
        vesting_step(st, p)
        burn_step(st, term_fees, p)

        # (6) circulating supply
        try:
            circulating_supply_step(st)
        except ModelBreakdownError as exc:
            raise SimulationAborted(str(exc), self.trajectory) from exc

        # (7) rewards and borrowing costs
        rewards = distribute_rewards(dm, lg.per_agent_qap, qap)
        rate = obs[self.specs[0].id].external_rate if self.specs else self.config.external_rate_schedule.rate_at(day)
        factor = math.exp(rate / 365.0)
        for acct in self.accounts.values():
            acct.rewards_earned_cum += rewards.get(acct.agent, 0.0)
            acct.accrue_interest(self.growth_index, factor)
        self.growth_index *= factor

        pledge = self._pledge_per_sector(self._last_delta_minted, qap, baseline, circ_prev, sum(delta_qa.values()))
        rec = self._record(day, baseline, pledge, circ_prev, flows, rewards, rate)
        self.trajectory.network.append(rec)
        self.trajectory.decisions.append(decisions)
        for s in self.specs:
            acct = self.accounts[s.id]
            self.trajectory.agents.append(AgentDayRecord(
                day=day, agent_id=s.id, qap=float(lg.per_agent_qap.get(s.id, 0)),
                daily_reward=rewards.get(s.id, 0.0), cum_reward=acct.rewards_earned_cum,
                pledge_outstanding=acct.pledge_outstanding, borrow_cost_cum=acct.borrow_cost_cum,
                net_cum_reward=acct.net_reward_cum, onboarded_rb_cum=acct.onboarded_rb_cum,
            ))
            acct.net_reward_trajectory.append(acct.net_reward_cum)

        self._last_pledge = pledge
        self._last_delta_minted = dm
        self._hist_days.append(day)
        self._hist_rbp.append(rec.rbp)
        self._hist_qap.append(rec.qap)
        self.day = day + 1

        # (8) population update; identity unless a hook is supplied
        if self.agent_update is not None:
            specs = sorted(self.agent_update(list(self.specs), self.trajectory), key=lambda s: s.id)
            if [s.id for s in specs] != [s.id for s in self.specs] or specs != self.specs:
                self.specs = specs
                self._refresh_population()
                for s in specs:
                    self.accounts.setdefault(s.id, AgentAccount(s.id))
        return rec

    def _apply(self, day, decisions):
        lg, st = self.ledger, self.supply
        flows = {"onboarded": 0.0, "onboarded_deal": 0.0, "renewed": 0.0, "terminated": 0.0}
        delta_qa, new_tranches = {}, {}
        term_fees = 0.0
        qap_prev = float(lg.qap)
        for dec in sorted(decisions, key=lambda d: d.agent):
            acct = self.accounts[dec.agent]
            if dec.terminate_rb > 0:
                removed = terminate(lg, dec.agent, dec.terminate_rb)
                qa_removed = 0
                for t, rb, pledge_part in removed:
                    qa_removed += rb * t.kind.multiplier
                    if pledge_part > 0:
                        release_collateral_early(st, pledge_part, t.expiry_day)
                        acct.release_pledge_early(pledge_part, t.expiry_day)
                    flows["terminated"] += rb
                if qa_removed and qap_prev > 0:
                    fee = self.config.termination_fee_days * self._last_delta_minted * qa_removed / qap_prev
                    term_fees += fee
                    acct.termination_fees_cum += fee
            dq, tranches = 0, []
            if dec.renew_rb > 0:
                q, ts = renew(lg, dec.agent, dec.renew_rb, dec.renew_duration, day)
                dq += q
                tranches += ts
                renewed = sum(t.rb_amount for t in ts)
                flows["renewed"] += renewed
                acct.renewed_rb_cum += renewed
            if dec.onboard_rb > 0:
                q, ts = onboard(lg, dec.agent, dec.onboard_rb, dec.fil_plus_fraction, dec.duration, day)
                dq += q
                tranches += ts
                rb = sum(t.rb_amount for t in ts)
                flows["onboarded"] += rb
                flows["onboarded_deal"] += sum(t.rb_amount for t in ts if t.kind is PowerKind.FILPLUS)
                acct.onboarded_rb_cum += rb
            if dq:
                delta_qa[dec.agent] = delta_qa.get(dec.agent, 0) + dq
                new_tranches.setdefault(dec.agent, []).extend(tranches)
        self.trajectory.warnings.extend(lg.warnings)
        lg.warnings.clear()
        return flows, term_fees, delta_qa, new_tranches

    def _lock_pledges(self, day, delta_qa, new_tranches, qap, baseline, circulating):
        p, st = self.params, self.supply
        total_dqa = sum(delta_qa.values())
        if total_dqa == 0:
            return
        dm_prev = self._last_delta_minted
        literal_storage = storage_pledge_delta(dm_prev, total_dqa, qap, p, "paper_literal")
        for agent, dqa in delta_qa.items():
            if p.storage_pledge_mode == "paper_literal":
                storage = literal_storage * dqa / total_dqa
            else:
                storage = storage_pledge_delta(dm_prev, dqa, qap, p)
            pledge = storage + consensus_pledge_delta(circulating, dqa, qap, baseline, p)
            acct = self.accounts[agent]
            for t in new_tranches[agent]:
                amount = pledge * t.qa_amount / dqa
                t.pledge = amount
                lock_collateral(st, amount, t.expiry_day)
                acct.lock_pledge(amount, t.expiry_day, self.growth_index)

    def run(self) -> Trajectory:
        while self.day < self.config.end_day:
            self.step()
        return self.trajectory


def run(config: SimulationConfig, **kwargs) -> Trajectory:
    """Run a full simulation from ``config.start_day`` to ``config.end_day``."""
    if config.mode is Mode.BACKTEST:
        raise ValueError("backtest mode needs historical data; call backtest() instead")
    return Simulation(config, **kwargs).run()


# -- backtesting ---------------------------------------------------------------------


@dataclass
class BacktestRow:
    day: int
    date: date
    minted_model: float
    minted_actual: float
    circulating_model: float
    circulating_actual: float

    @property
    def minted_rel_error(self) -> float:
        return _rel_err(self.minted_model, self.minted_actual)

    @property
    def circulating_rel_error(self) -> float:
        return _rel_err(self.circulating_model, self.circulating_actual)


def _rel_err(model, actual):
    return abs(model - actual) / max(abs(actual), 1e-12)


@dataclass
class BacktestReport:
    rows: list
    threshold: float

    def _errs(self, name):
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    @property
    def max_rel_error_minted(self) -> float:
        return float(self._errs("minted_rel_error").max()) if self.rows else 0.0

    @property
    def mean_rel_error_minted(self) -> float:
        return float(self._errs("minted_rel_error").mean()) if self.rows else 0.0

    @property
    def max_rel_error_circulating(self) -> float:
        return float(self._errs("circulating_rel_error").max()) if self.rows else 0.0

    @property
    def mean_rel_error_circulating(self) -> float:
        return float(self._errs("circulating_rel_error").mean()) if self.rows else 0.0

    @property
    def max_rel_error(self) -> float:
        return max(self.max_rel_error_minted, self.max_rel_error_circulating)

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.threshold

    def summary(self) -> dict:
        return {
            "days": len(self.rows),
            "threshold": self.threshold,
            "max_rel_error_minted": self.max_rel_error_minted,
            "mean_rel_error_minted": self.mean_rel_error_minted,
            "max_rel_error_circulating": self.max_rel_error_circulating,
            "mean_rel_error_circulating": self.mean_rel_error_circulating,
            "passed": self.passed,
        }


def backtest(config: SimulationConfig, historical, threshold: float | None = None):
    """Replay historical onboarding/renewals and compare minted and circulating supply.

    Row dates map to day indices through ``config.genesis_date``; every day
    in ``[start_day, end_day)`` must be present. Returns ``(trajectory, report)``.
    """
    by_day = {(d - config.genesis_date).days: k for k, d in enumerate(historical.dates)}
    span = range(config.start_day, config.end_day)
    missing = [d for d in span if d not in by_day]
    if missing:
        shown = ", ".join(f"{d} ({config.genesis_date.fromordinal(config.genesis_date.toordinal() + d)})"
                          for d in missing[:20])
        more = f" and {len(missing) - 20} more" if len(missing) > 20 else ""
        raise ValueError(f"historical data is missing days: {shown}{more}")
    replay = {}
    for d in span:
        k = by_day[d]
        onboard_rb = float(historical.onboarded_rb[k])
        renew_rb = float(historical.renewed_rb[k])
        replay[d] = PowerDecision(
            agent=REPLAY_AGENT_ID,
            onboard_rb=onboard_rb,
            fil_plus_fraction=float(historical.fil_plus_share[k]),
            duration=config.backtest_duration if onboard_rb > 0 else 0,
            renew_rb=renew_rb,
            renew_duration=config.backtest_duration if renew_rb > 0 else 0,
        )
    cfg = replace(config, agent_specs=(), initial=replace(config.initial, owner=REPLAY_AGENT_ID),
                  mode=Mode.SIMULATE)
    traj = Simulation(cfg, replay=replay).run()
    rows = []
    for rec in traj.network:
        k = by_day[rec.day]
        rows.append(BacktestRow(
            day=rec.day, date=historical.dates[k],
            minted_model=rec.minted_cum, minted_actual=float(historical.minted[k]),
            circulating_model=rec.circulating, circulating_actual=float(historical.circulating[k]),
        ))
    thr = config.backtest_max_rel_error if threshold is None else threshold
    return traj, BacktestReport(rows, thr)
