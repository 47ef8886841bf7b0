"""Storage-provider agents: constant-rate (DCA), FIL-on-FIL return (FoFR) and NPV strategies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .units import FILPLUS_MULTIPLIER

DEFAULT_DURATIONS = (180, 360, 540)


class Strategy(str, Enum):
    DCA = "dca"
    FOFR = "fofr"
    NPV = "npv"


@dataclass(frozen=True)
class AgentSpec:
    id: str
    strategy: Strategy
    daily_onboard_rb: float = 0.0
    fil_plus_fraction: float = 0.0
    renewal_fraction: float = 0.0
    fofr_threshold: float | None = None
    discount_rate: float | None = None
    candidate_durations: tuple = DEFAULT_DURATIONS
    capitalization_weight: float = 1.0
    extra_cost_per_sector_day: float = 0.0  # FIL per sector per day, on top of pledge borrowing

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        object.__setattr__(self, "candidate_durations", tuple(int(d) for d in self.candidate_durations))
        if self.daily_onboard_rb < 0:
            raise ValueError(f"agent {self.id}: daily_onboard_rb must be >= 0")
        for name in ("fil_plus_fraction", "renewal_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"agent {self.id}: {name} must lie in [0, 1]")
        if not self.candidate_durations:
            raise ValueError(f"agent {self.id}: candidate_durations must be nonempty")
        if any(d < 1 for d in self.candidate_durations):
            raise ValueError(f"agent {self.id}: durations must be >= 1 day")
        if self.capitalization_weight <= 0:
            raise ValueError(f"agent {self.id}: capitalization_weight must be > 0")
        if self.strategy is Strategy.FOFR and self.fofr_threshold is None:
            raise ValueError(f"agent {self.id}: fofr strategy requires fofr_threshold")
        if self.strategy is Strategy.NPV:
            if self.discount_rate is None:
                raise ValueError(f"agent {self.id}: npv strategy requires discount_rate")
            if self.discount_rate < 0:
                raise ValueError(f"agent {self.id}: discount_rate must be >= 0")
        if self.extra_cost_per_sector_day < 0:
            raise ValueError(f"agent {self.id}: extra_cost_per_sector_day must be >= 0")

    @property
    def quality(self) -> float:
        """QA multiplier of this agent's onboarded sectors."""
        return 1.0 + (FILPLUS_MULTIPLIER - 1) * self.fil_plus_fraction


@dataclass(frozen=True)
class PowerDecision:
    agent: str
    onboard_rb: float = 0.0
    fil_plus_fraction: float = 0.0
    duration: int = 0
    renew_rb: float = 0.0
    renew_duration: int = 0
    terminate_rb: float = 0.0

    def __post_init__(self):
        if min(self.onboard_rb, self.renew_rb, self.terminate_rb) < 0:
            raise ValueError("decision amounts must be >= 0")
        if self.onboard_rb > 0 and self.duration < 1:
            raise ValueError("onboarding needs a duration >= 1")
        if self.renew_rb > 0 and self.renew_duration < 1:
            raise ValueError("renewal needs a duration >= 1")

    @property
    def is_idle(self) -> bool:
        return self.onboard_rb == 0 and self.renew_rb == 0 and self.terminate_rb == 0


@dataclass
class Observation:
    """What an agent sees when deciding for ``day``: history through ``day - 1`` plus today's forecast."""

    day: int
    rewards_per_sector: np.ndarray  # CC sector, index 0 is ``day``
    pledge_per_sector: float  # previous day's pledge for a CC sector
    external_rate: float
    expiring_cc: float = 0.0


@dataclass
class AgentAccount:
    """Per-agent reward and collateral bookkeeping.

    Pledge is assumed borrowed at the external rate and interest compounds
    continuously per tranche until the tranche's collateral is released.
    Debt is stored normalised by a shared growth index so a day's accrual is O(1).
    """

    agent: str
    rewards_earned_cum: float = 0.0
    pledge_outstanding: float = 0.0
    borrow_cost_cum: float = 0.0
    termination_fees_cum: float = 0.0
    onboarded_rb_cum: float = 0.0
    renewed_rb_cum: float = 0.0
    net_reward_trajectory: list = field(default_factory=list)
    _releases: dict = field(default_factory=dict, repr=False)
    _debt_norm: float = field(default=0.0, repr=False)

    @property
    def net_reward_cum(self) -> float:
        return self.rewards_earned_cum - self.borrow_cost_cum - self.termination_fees_cum

    def lock_pledge(self, amount: float, release_day: int, growth_index: float) -> None:
        if amount <= 0:
            return
        norm = amount / growth_index
        prev = self._releases.get(release_day, (0.0, 0.0))
        self._releases[release_day] = (prev[0] + amount, prev[1] + norm)
        self.pledge_outstanding += amount
        self._debt_norm += norm

    def release_pledge(self, day: int) -> float:
        amount, norm = self._releases.pop(day, (0.0, 0.0))
        self._settle(amount, norm)
        return amount

    def release_pledge_early(self, amount: float, scheduled_day: int) -> None:
        total, norm = self._releases.get(scheduled_day, (0.0, 0.0))
        if total <= 0 or amount <= 0:
            return
        frac = min(amount / total, 1.0)
        if frac >= 1.0:
            del self._releases[scheduled_day]
        else:
            self._releases[scheduled_day] = (total * (1 - frac), norm * (1 - frac))
        self._settle(total * frac, norm * frac)

    def _settle(self, amount, norm):
        self.pledge_outstanding -= amount
        self._debt_norm -= norm
        if not self._releases:
            # clear float residue once nothing is scheduled
            self.pledge_outstanding = 0.0
            self._debt_norm = 0.0

    def accrue_interest(self, growth_index_before: float, daily_factor: float) -> float:
        """Charge one day of interest on the outstanding borrowed pledge."""
        interest = self._debt_norm * growth_index_before * (daily_factor - 1.0)
        self.borrow_cost_cum += interest
        return interest


def capitalization_scale(specs) -> dict:
    """Relative capitalization ``c_i = a_i / sum(a)`` per agent id."""
    specs = list(specs)
    if not specs:
        raise ValueError("capitalization_scale needs at least one agent")
    weights = [s.capitalization_weight for s in specs]
    if any(w <= 0 for w in weights):
        raise ValueError("capitalization weights must be > 0")
    total = math.fsum(weights)
    return {s.id: s.capitalization_weight / total for s in specs}


def throughput_multipliers(specs) -> dict:
    """Per-agent quota multiplier ``c_i * N``; equal weights give 1 for everyone."""
    specs = list(specs)
    capitalization_scale(specs)  # validation
    total = math.fsum(s.capitalization_weight for s in specs)
    n = len(specs)
    return {s.id: s.capitalization_weight * n / total for s in specs}


def dca_decide(spec: AgentSpec, expiring_cc: float, scale: float = 1.0) -> PowerDecision:
    """Constant onboarding plus a fixed fraction of expiring CC renewed; ignores forecasts."""
    duration = spec.candidate_durations[0]
    return PowerDecision(
        agent=spec.id,
        onboard_rb=spec.daily_onboard_rb * scale,
        fil_plus_fraction=spec.fil_plus_fraction,
        duration=duration,
        renew_rb=spec.renewal_fraction * expiring_cc,
        renew_duration=duration,
    )


def estimate_fofr(rewards_per_sector_forecast, duration: int, pledge_per_sector_prev: float) -> float:
    """FIL-on-FIL return: forecast rewards over ``duration`` days divided by pledge."""
    if pledge_per_sector_prev <= 0:
        raise ValueError("pledge_per_sector_prev must be > 0")
    rps = np.asarray(rewards_per_sector_forecast, dtype=float)
    if rps.size < duration:
        raise ValueError(f"forecast covers {rps.size} days, need {duration}")
    return float(rps[:duration].sum()) / pledge_per_sector_prev


def _argmax_shortest(durations, values):
    # ties go to the shortest duration
    best_d, best_v = None, -math.inf
    for d, v in sorted(zip(durations, values)):
        if v > best_v:
            best_d, best_v = d, v
    return best_d, best_v


def fofr_decide(spec: AgentSpec, rewards_per_sector_forecast, pledge_prev: float, expiring_cc: float,
                scale: float = 1.0) -> PowerDecision:
    """Onboard and renew at the FoFR-maximising duration when it reaches the threshold."""
    if pledge_prev <= 0:
        return PowerDecision(spec.id)
    fofrs = [estimate_fofr(rewards_per_sector_forecast, d, pledge_prev) for d in spec.candidate_durations]
    duration, best = _argmax_shortest(spec.candidate_durations, fofrs)
    if best < spec.fofr_threshold:
        return PowerDecision(spec.id)
    return PowerDecision(
        agent=spec.id,
        onboard_rb=spec.daily_onboard_rb * scale,
        fil_plus_fraction=spec.fil_plus_fraction,
        duration=duration,
        renew_rb=spec.renewal_fraction * expiring_cc,
        renew_duration=duration,
    )


def borrow_cost(pledge: float, rate: float, duration: int) -> float:
    """Continuously compounded interest on ``pledge`` borrowed for ``duration`` days at annual ``rate``."""
    return pledge * math.expm1(rate * duration / 365.0)


def npv_of_duration(rewards_per_sector_forecast, duration: int, pledge_per_sector: float,
                    cost_per_sector: float, discount_rate: float, external_rate: float = 0.0) -> float:
    """Continuously discounted forecast rewards less costs for one sector.

    Cash flow ``t`` (1-based) is discounted by ``exp(-discount_rate * t / 365)``.
    Costs are ``cost_per_sector`` plus interest on the pledge borrowed at
    ``external_rate`` for the whole duration.
    """
    if discount_rate < 0:
        raise ValueError("discount_rate must be >= 0")
    rps = np.asarray(rewards_per_sector_forecast, dtype=float)
    if rps.size < duration:
        raise ValueError(f"forecast covers {rps.size} days, need {duration}")
    t = np.arange(1, duration + 1, dtype=float)
    pv = float(rps[:duration] @ np.exp(-discount_rate * t / 365.0))
    return pv - cost_per_sector - borrow_cost(pledge_per_sector, external_rate, duration)


def npv_decide(spec: AgentSpec, rewards_per_sector_forecast, pledge_prev: float, external_rate: float,
               expiring_cc: float, scale: float = 1.0) -> PowerDecision:
    """Onboard and renew at the NPV-maximising duration unless every NPV is negative."""
    q = spec.quality
    npvs = []
    for d in spec.candidate_durations:
        # rewards and pledge both scale with sector quality; operating costs do not
        per_cc = npv_of_duration(rewards_per_sector_forecast, d, pledge_prev, 0.0, spec.discount_rate, external_rate)
        npvs.append(q * per_cc - spec.extra_cost_per_sector_day * d)
    duration, best = _argmax_shortest(spec.candidate_durations, npvs)
    if best < 0:
        return PowerDecision(spec.id)
    return PowerDecision(
        agent=spec.id,
        onboard_rb=spec.daily_onboard_rb * scale,
        fil_plus_fraction=spec.fil_plus_fraction,
        duration=duration,
        renew_rb=spec.renewal_fraction * expiring_cc,
        renew_duration=duration,
    )


def decide(spec: AgentSpec, obs: Observation, scale: float = 1.0) -> PowerDecision:
    if spec.strategy is Strategy.DCA:
        return dca_decide(spec, obs.expiring_cc, scale)
    if spec.strategy is Strategy.FOFR:
        return fofr_decide(spec, obs.rewards_per_sector, obs.pledge_per_sector, obs.expiring_cc, scale)
    return npv_decide(spec, obs.rewards_per_sector, obs.pledge_per_sector, obs.external_rate,
                      obs.expiring_cc, scale)
