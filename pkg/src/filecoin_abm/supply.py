"""Token-flow model: minting, vesting, locking, burning and circulating supply.

Every monetary quantity is in FIL, power in bytes and time in days. The
functions accept scalars or numpy arrays where noted; ``SupplyState`` is the
mutable per-run ledger driven one day at a time by the engine.

Minted supply through the end of day ``d`` is ``M^S(d + 1) + M^B(R_d)``: the
simple-minting term covers the whole of day ``d`` and ``R_d`` includes the
capped raw-byte power of day ``d`` itself.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .units import EiB

LN2 = math.log(2.0)

STORAGE_PLEDGE_MODES = ("share_scaled", "paper_literal")


class ModelBreakdownError(RuntimeError):
    """A token pool went negative; the run cannot continue meaningfully."""


@dataclass(frozen=True)
class VestingSchedule:
    recipient_id: str
    total_amount: float
    start_day: int
    duration_days: int

    def __post_init__(self):
        if self.total_amount < 0:
            raise ValueError(f"vesting {self.recipient_id!r}: total_amount must be >= 0")
        if self.duration_days < 1:
            raise ValueError(f"vesting {self.recipient_id!r}: duration_days must be >= 1")


@dataclass(frozen=True)
class SupplyParams:
    max_supply: float = 1.1e9
    simple_fraction: float = 0.30
    baseline_fraction: float = 0.70
    lam: float = LN2 / (6 * 365)
    g: float = LN2 / 365
    b0: float = 2.888888888 * EiB
    reward_vest_fraction: float = 0.75
    reward_vest_days: int = 180
    storage_pledge_days_multiplier: float = 20.0
    consensus_pledge_fraction: float = 0.30
    gas_burn_rate_beta: float = 0.0
    vesting_schedules: tuple[VestingSchedule, ...] = ()
    vesting_cap: float = 0.9e9
    storage_pledge_mode: str = "share_scaled"

    def __post_init__(self):
        object.__setattr__(self, "vesting_schedules", tuple(self.vesting_schedules))
        if not math.isclose(self.simple_fraction + self.baseline_fraction, 1.0, rel_tol=0, abs_tol=1e-12):
            raise ValueError("simple_fraction + baseline_fraction must equal 1")
        if self.lam <= 0 or self.g <= 0 or self.b0 <= 0:
            raise ValueError("lambda, g and b0 must be positive")
        for name in ("simple_fraction", "baseline_fraction", "reward_vest_fraction", "consensus_pledge_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.max_supply <= 0:
            raise ValueError("max_supply must be positive")
        if self.reward_vest_days < 1:
            raise ValueError("reward_vest_days must be >= 1")
        if self.storage_pledge_days_multiplier < 0 or self.gas_burn_rate_beta < 0:
            raise ValueError("storage pledge multiplier and gas burn rate must be >= 0")
        if self.storage_pledge_mode not in STORAGE_PLEDGE_MODES:
            raise ValueError(f"storage_pledge_mode must be one of {STORAGE_PLEDGE_MODES}")
        total = sum(s.total_amount for s in self.vesting_schedules)
        if total > self.vesting_cap * (1 + 1e-12):
            raise ValueError(f"vesting schedules total {total:.6g} FIL exceeds cap {self.vesting_cap:.6g}")

    @property
    def simple_supply(self) -> float:
        return self.simple_fraction * self.max_supply

    @property
    def baseline_supply(self) -> float:
        return self.baseline_fraction * self.max_supply


def _checked(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError(f"{name} must be >= 0, got {x!r}")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def simple_minting_cumulative(d, p: SupplyParams):
    """Cumulative simple minting ``M_inf^S * (1 - exp(-lambda * d))``."""
    d = _checked(d, "day")
    return _out(-p.simple_supply * np.expm1(-p.lam * d))


def baseline_function(d, p: SupplyParams):
    """Baseline storage target ``b0 * exp(g * d)`` in bytes."""
    d = _checked(d, "day")
    return _out(p.b0 * np.exp(p.g * d))


def effective_network_time(capped_rbp_cumsum, p: SupplyParams):
    """Effective network time in days for a cumulative capped RBP (byte-days)."""
    r = _checked(capped_rbp_cumsum, "capped_rbp_cumsum")
    return _out(np.log1p(p.g * r / p.b0) / p.g)


def baseline_minting_cumulative(capped_rbp_cumsum, p: SupplyParams):
    """Closed-form cumulative baseline minting ``M_inf^B (1 - (g R / b0 + 1)^(-lambda/g))``.

    The power is evaluated as ``exp(-(lambda/g) * log1p(g R / b0))`` so small
    ``R`` keeps full relative precision.
    """
    r = _checked(capped_rbp_cumsum, "capped_rbp_cumsum")
    return _out(-p.baseline_supply * np.expm1(-(p.lam / p.g) * np.log1p(p.g * r / p.b0)))


def capped_rbp_for_baseline_minted(baseline_minted: float, p: SupplyParams) -> float:
    """Invert the baseline-minting curve: cumulative capped RBP that has minted ``baseline_minted``."""
    if baseline_minted < 0:
        raise ValueError("baseline_minted must be >= 0")
    frac = baseline_minted / p.baseline_supply
    if frac >= 1:
        raise ValueError("baseline_minted must be below the baseline-minting asymptote")
    # (x + 1)^(-lambda/g) = 1 - frac
    return p.b0 / p.g * math.expm1(-(p.g / p.lam) * math.log1p(-frac))


def capped_rbp_for_network_time(theta: float, p: SupplyParams) -> float:
    if theta < 0:
        raise ValueError("effective network time must be >= 0")
    return p.b0 / p.g * math.expm1(p.g * theta)


def minted_cumulative(day, capped_rbp_cumsum, p: SupplyParams):
    """Total minted through the end of ``day`` given capped RBP accumulated through ``day``."""
    day = np.asarray(day, dtype=float)
    return _out(simple_minting_cumulative(day + 1, p) + baseline_minting_cumulative(capped_rbp_cumsum, p))


def _vested(d: float, schedules) -> float:
    total = 0.0
    for s in schedules:
        frac = (d - s.start_day) / s.duration_days
        total += min(max(frac, 0.0), 1.0) * s.total_amount
    return total


def vesting_cumulative(d, schedules) -> float:
    """Cumulative vested tokens at day ``d`` over linear per-recipient schedules."""
    if d < 0:
        raise ValueError(f"day must be >= 0, got {d!r}")
    return _vested(d, schedules)


def storage_pledge_delta(delta_minted, delta_qap, qap_total, p: SupplyParams, mode=None) -> float:
    """Storage-pledge collateral for an onboarding of ``delta_qap`` bytes.

    ``share_scaled`` locks ``multiplier * delta_minted`` pro rata to the
    onboarder's share of network QAP; ``paper_literal`` locks the full
    ``multiplier * delta_minted``.
    """
    mode = mode or p.storage_pledge_mode
    if delta_minted < 0 or delta_qap < 0 or qap_total < 0:
        raise ValueError("storage pledge inputs must be >= 0")
    base = max(p.storage_pledge_days_multiplier * delta_minted, 0.0)
    if mode == "paper_literal":
        return base
    if mode != "share_scaled":
        raise ValueError(f"unknown storage pledge mode {mode!r}")
    if delta_qap == 0:
        return 0.0
    if qap_total == 0:
        raise ValueError("qap_total is zero while delta_qap is positive")
    return base * (delta_qap / qap_total)


def consensus_pledge_delta(circulating, delta_qap, qap_total, baseline, p: SupplyParams) -> float:
    """Consensus-pledge collateral ``max(0.3 S dQAP / max(QAP, b), 0)``."""
    if min(circulating, delta_qap, qap_total, baseline) < 0:
        raise ValueError("consensus pledge inputs must be >= 0")
    denom = max(qap_total, baseline)
    if denom == 0:
        raise ValueError("both qap_total and baseline are zero")
    return max(p.consensus_pledge_fraction * circulating * delta_qap / denom, 0.0)


@dataclass
class SupplyState:
    """Token pools at the end of ``day`` (``day`` is set to the day being processed during a step)."""

    day: int
    minted_cum: float = 0.0
    capped_rbp_cumsum: float = 0.0
    vested_cum: float = 0.0
    vested_offset: float = 0.0
    locked_reward: float = 0.0
    locked_collateral: float = 0.0
    burnt_termination: float = 0.0
    burnt_gas: float = 0.0
    circulating: float = 0.0
    delta_minted: float = 0.0
    pending_reward_releases: dict = field(default_factory=lambda: defaultdict(float))
    pending_collateral_releases: dict = field(default_factory=lambda: defaultdict(float))
    reward_locked_total: float = 0.0
    reward_released_total: float = 0.0
    collateral_locked_total: float = 0.0
    collateral_released_total: float = 0.0

    @property
    def locked(self) -> float:
        return self.locked_reward + self.locked_collateral

    @property
    def burnt_cum(self) -> float:
        return self.burnt_termination + self.burnt_gas

    @classmethod
    def genesis(
        cls,
        p: SupplyParams,
        start_day: int = 0,
        capped_rbp_cumsum: float = 0.0,
        locked_reward: float = 0.0,
        locked_collateral: float = 0.0,
        burnt_termination: float = 0.0,
        vested_offset: float = 0.0,
        collateral_release: dict | None = None,
    ) -> "SupplyState":
        """State at the end of ``start_day - 1``.

        Pre-existing locked rewards release uniformly over the next
        ``reward_vest_days``; pre-existing collateral follows
        ``collateral_release`` (day -> amount), or releases uniformly over the
        same window when not given.
        """
        if start_day < 0:
            raise ValueError("start_day must be >= 0")
        for name, v in (("capped_rbp_cumsum", capped_rbp_cumsum), ("locked_reward", locked_reward),
                        ("locked_collateral", locked_collateral), ("burnt_termination", burnt_termination)):
            if v < 0:
                raise ValueError(f"{name} must be >= 0")
        day = start_day - 1
        st = cls(day=day, capped_rbp_cumsum=float(capped_rbp_cumsum), vested_offset=float(vested_offset))
        st.minted_cum = minted_cumulative(day, st.capped_rbp_cumsum, p)
        st.vested_cum = _vested(day, p.vesting_schedules) + vested_offset
        st.burnt_termination = float(burnt_termination)
        st.burnt_gas = p.gas_burn_rate_beta * max(day, 0)
        if locked_reward > 0:
            tranche = locked_reward / p.reward_vest_days
            for k in range(p.reward_vest_days):
                st.pending_reward_releases[start_day + k] += tranche
            st.locked_reward = float(locked_reward)
            st.reward_locked_total = float(locked_reward)
        if locked_collateral > 0:
            if collateral_release is None:
                n = p.reward_vest_days
                collateral_release = {start_day + k: locked_collateral / n for k in range(n)}
            scheduled = sum(collateral_release.values())
            if not math.isclose(scheduled, locked_collateral, rel_tol=1e-9):
                raise ValueError("collateral release schedule does not sum to locked_collateral")
            for rday, amount in collateral_release.items():
                if rday <= day:
                    raise ValueError("collateral release day must be after the seed day")
                st.pending_collateral_releases[rday] += amount
            st.locked_collateral = float(locked_collateral)
            st.collateral_locked_total = float(locked_collateral)
        if st.vested_cum < 0:
            raise ValueError("seeded vested supply is negative")
        circulating_supply_step(st)
        return st


def accumulate_capped_rbp(state: SupplyState, rbp_today: float, p: SupplyParams) -> float:
    """Add ``min(b_d, rbp_today)`` to the cumulative capped RBP; returns the increment."""
    if rbp_today < 0:
        raise ValueError("rbp_today must be >= 0")
    inc = min(baseline_function(state.day, p), float(rbp_today))
    state.capped_rbp_cumsum += inc
    return inc


def mint_step(state: SupplyState, p: SupplyParams) -> float:
    """Recompute cumulative minting for ``state.day``; returns the day's minted amount."""
    minted = minted_cumulative(state.day, state.capped_rbp_cumsum, p)
    delta = max(minted - state.minted_cum, 0.0)
    state.minted_cum = max(minted, state.minted_cum)
    state.delta_minted = delta
    return delta


def lock_daily_reward(state: SupplyState, delta_minted: float, p: SupplyParams) -> None:
    """Lock the vesting share of a day's minted rewards, released linearly from the next day."""
    if delta_minted < 0:
        raise ValueError("delta_minted must be >= 0")
    if delta_minted == 0:
        return
    locked = p.reward_vest_fraction * delta_minted
    tranche = locked / p.reward_vest_days
    for k in range(1, p.reward_vest_days + 1):
        state.pending_reward_releases[state.day + k] += tranche
    state.locked_reward += locked
    state.reward_locked_total += locked


def lock_collateral(state: SupplyState, new_collateral: float, release_day: int) -> None:
    if new_collateral < 0:
        raise ValueError("new_collateral must be >= 0")
    if release_day <= state.day:
        raise ValueError(f"release_day {release_day} must be after current day {state.day}")
    if new_collateral == 0:
        return
    state.pending_collateral_releases[release_day] += new_collateral
    state.locked_collateral += new_collateral
    state.collateral_locked_total += new_collateral


def release_collateral_early(state: SupplyState, amount: float, scheduled_day: int) -> None:
    """Release collateral now that was scheduled for ``scheduled_day`` (used on termination)."""
    pending = state.pending_collateral_releases.get(scheduled_day, 0.0)
    if amount < 0 or amount > pending * (1 + 1e-12):
        raise ValueError("cannot release more collateral than is scheduled")
    amount = min(amount, pending)
    state.pending_collateral_releases[scheduled_day] = pending - amount
    state.locked_collateral = _snap(state.locked_collateral - amount, state.collateral_locked_total)
    state.collateral_released_total += amount


def _snap(x: float, scale: float) -> float:
    # float residue of add/subtract cycles
    if x < 0 and x > -1e-9 * max(scale, 1.0):
        return 0.0
    return x


def release_due(state: SupplyState) -> tuple[float, float]:
    """Release reward and collateral tranches falling due on ``state.day``."""
    r = state.pending_reward_releases.pop(state.day, 0.0)
    c = state.pending_collateral_releases.pop(state.day, 0.0)
    if r:
        state.locked_reward = _snap(state.locked_reward - r, state.reward_locked_total)
        state.reward_released_total += r
    if c:
        state.locked_collateral = _snap(state.locked_collateral - c, state.collateral_locked_total)
        state.collateral_released_total += c
    if not state.pending_reward_releases and abs(state.locked_reward) < 1e-9 * max(state.reward_locked_total, 1.0):
        state.locked_reward = 0.0
    return r, c


def vesting_step(state: SupplyState, p: SupplyParams) -> float:
    state.vested_cum = vesting_cumulative(state.day, p.vesting_schedules) + state.vested_offset
    return state.vested_cum


def burn_step(state: SupplyState, termination_fees: float, p: SupplyParams) -> float:
    """Accumulate termination fees and set gas burn to ``beta * d``; returns total burnt."""
    if termination_fees < 0:
        raise ValueError("termination_fees must be >= 0")
    state.burnt_termination += termination_fees
    state.burnt_gas = p.gas_burn_rate_beta * state.day
    return state.burnt_cum


def circulating_supply_step(state: SupplyState) -> float:
    """``S = M + V - L - B``; raises ``ModelBreakdownError`` if negative."""
    s = state.minted_cum + state.vested_cum - state.locked - state.burnt_cum
    scale = max(state.minted_cum + state.vested_cum, 1.0)
    if s < 0:
        if s > -1e-9 * scale:
            s = 0.0
        else:
            raise ModelBreakdownError(
                f"circulating supply negative on day {state.day}: {s:.6g} FIL "
                f"(minted={state.minted_cum:.6g}, vested={state.vested_cum:.6g}, "
                f"locked={state.locked:.6g}, burnt={state.burnt_cum:.6g})"
            )
    state.circulating = s
    return s
