"""Aggregate network power ledger.

Power is held as homogeneous tranches (one per onboarding or renewal and
kind) rather than individual sectors. Byte amounts are Python ints so the
QAP identity and the per-owner partition hold exactly.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum

from .units import FILPLUS_MULTIPLIER

logger = logging.getLogger(__name__)


class PowerKind(str, Enum):
    CC = "cc"
    FILPLUS = "filplus"

    @property
    def multiplier(self) -> int:
        return FILPLUS_MULTIPLIER if self is PowerKind.FILPLUS else 1


@dataclass
class PowerTranche:
    owner: str
    rb_amount: int
    kind: PowerKind
    onboard_day: int
    expiry_day: int
    pledge: float = 0.0

    def __post_init__(self):
        if self.rb_amount <= 0:
            raise ValueError("tranche rb_amount must be positive")
        if self.expiry_day <= self.onboard_day:
            raise ValueError("tranche must expire after it is onboarded")

    @property
    def qa_amount(self) -> int:
        return self.rb_amount * self.kind.multiplier


def quality_adjusted_power(rbp_cc, rbp_deal):
    """QAP with FIL+ bytes weighted 10x."""
    if rbp_cc < 0 or rbp_deal < 0:
        raise ValueError("power must be >= 0")
    return rbp_cc + FILPLUS_MULTIPLIER * rbp_deal


@dataclass
class NetworkPower:
    day: int = 0
    rbp_cc: int = 0
    rbp_deal: int = 0
    qap: int = 0
    tranches: dict = field(default_factory=lambda: defaultdict(list))
    per_agent_qap: dict = field(default_factory=dict)
    expiring_cc: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def rbp(self) -> int:
        return self.rbp_cc + self.rbp_deal

    @property
    def active_tranches(self):
        for day in sorted(self.tranches):
            yield from self.tranches[day]

    def _add(self, tranche: PowerTranche) -> None:
        self.tranches[tranche.expiry_day].append(tranche)
        if tranche.kind is PowerKind.CC:
            self.rbp_cc += tranche.rb_amount
        else:
            self.rbp_deal += tranche.rb_amount
        self.qap += tranche.qa_amount
        self.per_agent_qap[tranche.owner] = self.per_agent_qap.get(tranche.owner, 0) + tranche.qa_amount

    def _remove_amount(self, tranche: PowerTranche, rb: int) -> None:
        if tranche.kind is PowerKind.CC:
            self.rbp_cc -= rb
        else:
            self.rbp_deal -= rb
        qa = rb * tranche.kind.multiplier
        self.qap -= qa
        self.per_agent_qap[tranche.owner] -= qa


def onboard(ledger: NetworkPower, owner: str, rb_amount: float, fil_plus_fraction: float, duration: int,
            day: int | None = None):
    """Add ``rb_amount`` bytes split into CC and FIL+ tranches expiring after ``duration`` days.

    Returns ``(delta_qap, new_tranches)``.
    """
    if rb_amount < 0:
        raise ValueError("rb_amount must be >= 0")
    if not 0.0 <= fil_plus_fraction <= 1.0:
        raise ValueError("fil_plus_fraction must lie in [0, 1]")
    total = int(round(rb_amount))
    if total == 0:
        return 0, []
    if duration < 1:
        raise ValueError("duration must be >= 1")
    day = ledger.day if day is None else day
    deal = int(round(total * fil_plus_fraction))
    cc = total - deal
    created = []
    for amount, kind in ((cc, PowerKind.CC), (deal, PowerKind.FILPLUS)):
        if amount > 0:
            t = PowerTranche(owner, amount, kind, day, day + duration)
            ledger._add(t)
            created.append(t)
    return sum(t.qa_amount for t in created), created


def renew(ledger: NetworkPower, owner: str, rb_amount: float, duration: int, day: int | None = None):
    """Re-commit CC power that expired today for ``duration`` more days.

    Only CC power that expired on the ledger's current day is renewable;
    requests above that are clamped and a warning is recorded.
    Returns ``(delta_qap, new_tranches)``.
    """
    if rb_amount < 0:
        raise ValueError("rb_amount must be >= 0")
    want = int(round(rb_amount))
    if want == 0:
        return 0, []
    available = ledger.expiring_cc.get(owner, 0)
    if want > available:
        msg = f"day {ledger.day}: {owner} asked to renew {want} B but only {available} B of CC expired; clamped"
        ledger.warnings.append(msg)
        logger.warning(msg)
        want = available
    if want == 0:
        return 0, []
    if duration < 1:
        raise ValueError("duration must be >= 1")
    day = ledger.day if day is None else day
    ledger.expiring_cc[owner] = available - want
    t = PowerTranche(owner, want, PowerKind.CC, day, day + duration)
    ledger._add(t)
    return t.qa_amount, [t]


def expire_step(ledger: NetworkPower, day: int) -> dict:
    """Remove tranches expiring on ``day``.

    Returns ``{owner: {"cc": bytes, "filplus": bytes}}`` and makes the expired
    CC available for renewal today.
    """
    ledger.day = day
    ledger.expiring_cc = {}
    expired: dict = {}
    for t in ledger.tranches.pop(day, []):
        ledger._remove_amount(t, t.rb_amount)
        rec = expired.setdefault(t.owner, {"cc": 0, "filplus": 0})
        rec[t.kind.value] += t.rb_amount
    for owner, rec in expired.items():
        if rec["cc"]:
            ledger.expiring_cc[owner] = rec["cc"]
    stale = [d for d in ledger.tranches if d < day]
    if stale:
        raise RuntimeError(f"ledger skipped expiry days {sorted(stale)}")
    return expired


def terminate(ledger: NetworkPower, owner: str, rb_amount: float):
    """Remove up to ``rb_amount`` bytes of ``owner``'s active power, latest expiry first.

    Returns a list of ``(tranche, rb_removed, pledge_removed)``; the tranche's
    pledge is reduced pro rata.
    """
    want = int(round(rb_amount))
    removed = []
    for day in sorted(ledger.tranches, reverse=True):
        if want <= 0:
            break
        for t in list(ledger.tranches[day]):
            if want <= 0:
                break
            if t.owner != owner:
                continue
            take = min(want, t.rb_amount)
            pledge_part = t.pledge * take / t.rb_amount
            ledger._remove_amount(t, take)
            removed.append((t, take, pledge_part))
            want -= take
            if take == t.rb_amount:
                ledger.tranches[day].remove(t)
            else:
                t.rb_amount -= take
                t.pledge -= pledge_part
        if not ledger.tranches[day]:
            del ledger.tranches[day]
    if want > 0:
        msg = f"day {ledger.day}: {owner} asked to terminate more power than it holds; clamped"
        ledger.warnings.append(msg)
        logger.warning(msg)
    return removed
