"""Config parsing, historical-data ingestion and trajectory output.

Unit conversions (EiB/PiB to bytes) happen only here; everything inside the
engine is bytes, FIL and days.
"""

from __future__ import annotations

import copy
import csv
import json
import math
from dataclasses import dataclass, fields, is_dataclass
from datetime import date, timedelta
from enum import Enum
from pathlib import Path
from typing import Any, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .agents import DEFAULT_DURATIONS, AgentSpec
from .engine import (
    GENESIS_DATE,
    BacktestReport,
    ForecastSettings,
    InitialState,
    Mode,
    RateSchedule,
    SimulationConfig,
    Trajectory,
)
from .supply import (
    LN2,
    SupplyParams,
    VestingSchedule,
    capped_rbp_for_baseline_minted,
    capped_rbp_for_network_time,
    simple_minting_cumulative,
    vesting_cumulative,
)
from .units import DEFAULT_SECTOR_SIZE, EiB, GiB, PiB, parse_bytes

HISTORICAL_COLUMNS = (
    "date", "rbp_eib", "qap_eib", "onboarded_rb_pib", "renewed_rb_pib", "fil_plus_share",
    "circulating_supply_fil", "minted_fil", "vested_fil", "locked_fil", "burnt_fil",
)
# the rest of the contract is best-effort and may be absent
REQUIRED_HISTORICAL = ("date", "onboarded_rb_pib", "renewed_rb_pib", "fil_plus_share",
                       "circulating_supply_fil", "minted_fil")

NETWORK_COLUMNS = (
    "day", "rbp_bytes", "qap_bytes", "baseline_bytes", "delta_minted_fil", "minted_cum_fil",
    "vested_cum_fil", "locked_reward_fil", "locked_collateral_fil", "burnt_cum_fil", "circulating_fil",
)
AGENT_COLUMNS = (
    "day", "agent_id", "qap_bytes", "daily_reward_fil", "cum_reward_fil", "pledge_outstanding_fil",
    "borrow_cost_cum_fil", "net_cum_reward_fil",
)


class ConfigError(ValueError):
    """Config or input-file validation failure."""


def fmt(x) -> str:
    """12 significant digits, no thousands separators."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".12g")


# -- config schema -------------------------------------------------------------------

ByteValue = Union[float, int, str]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class VestingModel(_Strict):
    recipient_id: str
    total_amount: float = Field(ge=0)
    start_day: int = 0
    duration_days: int = Field(ge=1)


class SupplyModel(_Strict):
    max_supply: float = Field(1.1e9, gt=0)
    simple_fraction: float = Field(0.30, ge=0, le=1)
    baseline_fraction: float = Field(0.70, ge=0, le=1)
    lam: float = Field(LN2 / (6 * 365), gt=0, alias="lambda")
    g: float = Field(LN2 / 365, gt=0)
    b0: ByteValue = 2.888888888 * EiB
    reward_vest_fraction: float = Field(0.75, ge=0, le=1)
    reward_vest_days: int = Field(180, ge=1)
    storage_pledge_days_multiplier: float = Field(20.0, ge=0)
    consensus_pledge_fraction: float = Field(0.30, ge=0, le=1)
    gas_burn_rate_beta: float = Field(0.0, ge=0)
    vesting_schedules: list[VestingModel] = []
    vesting_cap: float = Field(0.9e9, ge=0)
    storage_pledge_mode: Literal["share_scaled", "paper_literal"] = "share_scaled"

    @field_validator("b0")
    @classmethod
    def _bytes(cls, v):
        return parse_bytes(v)


class AgentModel(_Strict):
    id: str
    strategy: Literal["dca", "fofr", "npv"]
    daily_onboard_rb: ByteValue = 0.0
    fil_plus_fraction: float = Field(0.0, ge=0, le=1)
    renewal_fraction: float = Field(0.0, ge=0, le=1)
    fofr_threshold: Optional[float] = None
    discount_rate: Optional[float] = Field(None, ge=0)
    candidate_durations: list[int] = Field(list(DEFAULT_DURATIONS), min_length=1)
    capitalization_weight: float = Field(1.0, gt=0)
    extra_cost_per_sector_day: float = Field(0.0, ge=0)

    @field_validator("strategy", mode="before")
    @classmethod
    def _lower(cls, v):
        return v.lower() if isinstance(v, str) else v

    @field_validator("daily_onboard_rb")
    @classmethod
    def _bytes(cls, v):
        v = parse_bytes(v)
        if v < 0:
            raise ValueError("must be >= 0")
        return v

    @field_validator("candidate_durations")
    @classmethod
    def _durations(cls, v):
        if any(d < 1 for d in v):
            raise ValueError("durations must be >= 1")
        return v

    @model_validator(mode="after")
    def _strategy_fields(self):
        if self.strategy == "fofr" and self.fofr_threshold is None:
            raise ValueError("fofr strategy requires fofr_threshold")
        if self.strategy == "npv" and self.discount_rate is None:
            raise ValueError("npv strategy requires discount_rate")
        return self


class RateModel(_Strict):
    segments: list[tuple[int, float]] = Field(min_length=1)
    end_day: Optional[int] = None

    @field_validator("segments")
    @classmethod
    def _nonneg(cls, v):
        if any(r < 0 for _, r in v):
            raise ValueError("rates must be >= 0")
        return v


class ForecastModel(_Strict):
    window: int = Field(90, ge=1)
    floor: ByteValue = float(GiB)
    sector_size: ByteValue = float(DEFAULT_SECTOR_SIZE)

    @field_validator("floor", "sector_size")
    @classmethod
    def _bytes(cls, v):
        v = parse_bytes(v)
        if v <= 0:
            raise ValueError("must be > 0")
        return v


class InitialModel(_Strict):
    rbp_cc: ByteValue = 0.0
    rbp_deal: ByteValue = 0.0
    expiry_days: int = Field(540, ge=1)
    owner: str = "legacy"
    capped_rbp_cumsum: Optional[ByteValue] = None
    effective_network_time: Optional[float] = Field(None, ge=0)
    locked_reward: float = Field(0.0, ge=0)
    locked_collateral: float = Field(0.0, ge=0)
    burnt: float = Field(0.0, ge=0)
    vested_offset: float = 0.0

    @field_validator("rbp_cc", "rbp_deal", "capped_rbp_cumsum")
    @classmethod
    def _bytes(cls, v):
        if v is None:
            return v
        v = parse_bytes(v)
        if v < 0:
            raise ValueError("must be >= 0")
        return v

    @model_validator(mode="after")
    def _one_clock(self):
        if self.capped_rbp_cumsum is not None and self.effective_network_time is not None:
            raise ValueError("give capped_rbp_cumsum or effective_network_time, not both")
        return self


class BacktestModel(_Strict):
    duration: int = Field(360, ge=1)
    max_rel_error: float = Field(0.05, ge=0)


class ConfigModel(_Strict):
    start_day: int = Field(0, ge=0)
    end_day: int = Field(ge=0)
    mode: Literal["simulate", "backtest"] = "simulate"
    seed: int = 0
    genesis_date: date = GENESIS_DATE
    termination_fee_days: float = Field(90.0, ge=0)
    supply: SupplyModel = SupplyModel()
    agents: list[AgentModel] = []
    external_rate: Union[float, RateModel] = 0.0
    forecast: ForecastModel = ForecastModel()
    initial: InitialModel = InitialModel()
    backtest: BacktestModel = BacktestModel()

    @field_validator("external_rate")
    @classmethod
    def _rate(cls, v):
        if isinstance(v, (int, float)) and v < 0:
            raise ValueError("rate must be >= 0")
        return v

    @model_validator(mode="after")
    def _checks(self):
        if self.end_day < self.start_day:
            raise ValueError("end_day must not precede start_day")
        ids = [a.id for a in self.agents]
        dup = sorted({i for i in ids if ids.count(i) > 1})
        if dup:
            raise ValueError(f"duplicate agent ids: {dup}")
        if abs(self.supply.simple_fraction + self.supply.baseline_fraction - 1.0) > 1e-12:
            raise ValueError("supply.simple_fraction + supply.baseline_fraction must equal 1")
        return self


def _format_validation(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "<root>"
        lines.append(f"  {loc}: {err['msg']}")
    return "invalid config:\n" + "\n".join(lines)


def config_from_dict(raw: dict) -> SimulationConfig:
    """Validate a raw config mapping and build a :class:`SimulationConfig`."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at the top level")
    try:
        m = ConfigModel.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from None
    try:
        return _build(m)
    except ValueError as exc:
        raise ConfigError(f"invalid config: {exc}") from None


def _build(m: ConfigModel) -> SimulationConfig:
    s = m.supply
    params = SupplyParams(
        max_supply=s.max_supply, simple_fraction=s.simple_fraction, baseline_fraction=s.baseline_fraction,
        lam=s.lam, g=s.g, b0=s.b0, reward_vest_fraction=s.reward_vest_fraction,
        reward_vest_days=s.reward_vest_days, storage_pledge_days_multiplier=s.storage_pledge_days_multiplier,
        consensus_pledge_fraction=s.consensus_pledge_fraction, gas_burn_rate_beta=s.gas_burn_rate_beta,
        vesting_schedules=tuple(VestingSchedule(**v.model_dump()) for v in s.vesting_schedules),
        vesting_cap=s.vesting_cap, storage_pledge_mode=s.storage_pledge_mode,
    )
    agents = tuple(AgentSpec(**{**a.model_dump(), "candidate_durations": tuple(a.candidate_durations)})
                   for a in m.agents)
    if isinstance(m.external_rate, RateModel):
        rates = RateSchedule(tuple(m.external_rate.segments), m.external_rate.end_day)
    else:
        rates = RateSchedule.constant(float(m.external_rate), min(m.start_day, 0))
    i = m.initial
    if i.effective_network_time is not None:
        cumsum = capped_rbp_for_network_time(i.effective_network_time, params)
    else:
        cumsum = i.capped_rbp_cumsum or 0.0
    initial = InitialState(
        rbp_cc=i.rbp_cc, rbp_deal=i.rbp_deal, expiry_days=i.expiry_days, owner=i.owner,
        capped_rbp_cumsum=cumsum, locked_reward=i.locked_reward, locked_collateral=i.locked_collateral,
        burnt=i.burnt, vested_offset=i.vested_offset,
    )
    return SimulationConfig(
        start_day=m.start_day, end_day=m.end_day, supply_params=params, agent_specs=agents,
        external_rate_schedule=rates, forecast=ForecastSettings(m.forecast.window, m.forecast.floor,
                                                                m.forecast.sector_size),
        initial=initial, mode=Mode(m.mode), seed=m.seed, genesis_date=m.genesis_date,
        termination_fee_days=m.termination_fee_days,
        backtest_duration=m.backtest.duration, backtest_max_rel_error=m.backtest.max_rel_error,
    )


def load_config_dict(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a mapping at the top level")
    return raw


def load_config(path) -> SimulationConfig:
    """Load and validate a YAML run configuration; unknown keys are rejected."""
    return config_from_dict(load_config_dict(path))


def _coerce_scalar(text: str):
    return yaml.safe_load(text)


def set_path(raw: dict, dotted: str, value: Any) -> dict:
    """Return a copy of ``raw`` with ``dotted`` set to ``value``.

    Inside ``agents`` the next component selects an agent by id, by list
    index, or ``*`` for all agents. ``external_rate`` with a scalar sets a
    constant schedule.
    """
    out = copy.deepcopy(raw)
    parts = dotted.split(".")
    if not all(parts):
        raise ConfigError(f"bad parameter path {dotted!r}")
    if isinstance(value, str):
        value = _coerce_scalar(value)
    if parts[0] == "agents" and len(parts) >= 3:
        agents = out.get("agents") or []
        sel = parts[1]
        if sel == "*":
            targets = agents
        elif sel.isdigit() and int(sel) < len(agents):
            targets = [agents[int(sel)]]
        else:
            targets = [a for a in agents if isinstance(a, dict) and a.get("id") == sel]
        if not targets:
            raise ConfigError(f"parameter path {dotted!r} matches no agent")
        for a in targets:
            _assign(a, parts[2:], value, dotted)
        return out
    _assign(out, parts, value, dotted)
    return out


def _assign(node, parts, value, dotted):
    for key in parts[:-1]:
        nxt = node.get(key)
        if nxt is None:
            nxt = node[key] = {}
        if not isinstance(nxt, dict):
            raise ConfigError(f"parameter path {dotted!r}: {key!r} is not a section")
        node = nxt
    node[parts[-1]] = value


def _jsonable(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, date):
        return obj.isoformat()
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def config_to_dict(config: SimulationConfig) -> dict:
    """Plain-data echo of a resolved config (internal units)."""
    return _jsonable(config)


# -- historical data ------------------------------------------------------------------


@dataclass
class HistoricalData:
    """Daily network history in internal units (bytes, FIL).

    Optional columns that were absent in the file are all-NaN.
    """

    dates: list
    rbp: np.ndarray
    qap: np.ndarray
    onboarded_rb: np.ndarray
    renewed_rb: np.ndarray
    fil_plus_share: np.ndarray
    circulating: np.ndarray
    minted: np.ndarray
    vested: np.ndarray
    locked: np.ndarray
    burnt: np.ndarray

    def __len__(self):
        return len(self.dates)


_HIST_FIELDS = {
    "rbp_eib": ("rbp", EiB),
    "qap_eib": ("qap", EiB),
    "onboarded_rb_pib": ("onboarded_rb", PiB),
    "renewed_rb_pib": ("renewed_rb", PiB),
    "fil_plus_share": ("fil_plus_share", 1),
    "circulating_supply_fil": ("circulating", 1),
    "minted_fil": ("minted", 1),
    "vested_fil": ("vested", 1),
    "locked_fil": ("locked", 1),
    "burnt_fil": ("burnt", 1),
}


def load_historical(path) -> HistoricalData:
    """Read and validate a historical network CSV (see ``HISTORICAL_COLUMNS``)."""
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise ConfigError(f"cannot read historical data {path}: {exc.strerror or exc}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ConfigError(f"{path}: empty file, expected header {','.join(HISTORICAL_COLUMNS)}")
        header = [h.strip() for h in header]
        unknown = [h for h in header if h not in HISTORICAL_COLUMNS]
        missing = [c for c in REQUIRED_HISTORICAL if c not in header]
        if unknown or missing:
            raise ConfigError(f"{path}: bad header; missing {missing}, unknown {unknown}; "
                              f"expected {','.join(HISTORICAL_COLUMNS)}")
        if len(set(header)) != len(header):
            raise ConfigError(f"{path}: duplicate columns in header")
        rows = [(n, r) for n, r in enumerate(reader, start=2) if any(c.strip() for c in r)]
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    col = {h: k for k, h in enumerate(header)}
    dates = []
    values = {name: np.full(len(rows), np.nan) for name, _ in _HIST_FIELDS.values()}
    for k, (line, row) in enumerate(rows):
        if len(row) != len(header):
            raise ConfigError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
        try:
            d = date.fromisoformat(row[col["date"]].strip())
        except ValueError:
            raise ConfigError(f"{path}:{line}: unparseable date {row[col['date']]!r}") from None
        if dates:
            gap = (d - dates[-1]).days
            if gap <= 0:
                raise ConfigError(f"{path}:{line}: date {d} is not after {dates[-1]}")
            if gap > 1:
                miss = [dates[-1] + timedelta(days=j) for j in range(1, gap)]
                shown = ", ".join(x.isoformat() for x in miss[:10])
                raise ConfigError(f"{path}:{line}: missing day(s) {shown}" + (" ..." if len(miss) > 10 else ""))
        dates.append(d)
        for cname, (name, scale) in _HIST_FIELDS.items():
            if cname not in col:
                continue
            text = row[col[cname]].strip()
            try:
                v = float(text)
            except ValueError:
                raise ConfigError(f"{path}:{line}: {cname} is not a number: {text!r}") from None
            if not math.isfinite(v) or v < 0:
                raise ConfigError(f"{path}:{line}: {cname} must be finite and >= 0, got {text}")
            if cname == "fil_plus_share" and v > 1:
                raise ConfigError(f"{path}:{line}: fil_plus_share must be <= 1, got {text}")
            values[name][k] = v * scale
    return HistoricalData(dates=dates, **values)


def historical_from_trajectory(trajectory: Trajectory, genesis_date: date | None = None) -> HistoricalData:
    """Turn a simulated trajectory into history rows, e.g. for self-consistency backtests."""
    g = genesis_date or trajectory.config.genesis_date
    recs = trajectory.network
    arr = lambda f: np.array([f(r) for r in recs], dtype=float)
    return HistoricalData(
        dates=[g + timedelta(days=r.day) for r in recs],
        rbp=arr(lambda r: r.rbp), qap=arr(lambda r: r.qap),
        onboarded_rb=arr(lambda r: r.onboarded_rb), renewed_rb=arr(lambda r: r.renewed_rb),
        fil_plus_share=arr(lambda r: r.onboarded_deal_rb / r.onboarded_rb if r.onboarded_rb else 0.0),
        circulating=arr(lambda r: r.circulating), minted=arr(lambda r: r.minted_cum),
        vested=arr(lambda r: r.vested_cum), locked=arr(lambda r: r.locked), burnt=arr(lambda r: r.burnt_cum),
    )


def initial_state_from_historical(data: HistoricalData, start_day: int, params: SupplyParams,
                                  genesis_date: date = GENESIS_DATE, **kwargs) -> InitialState:
    """Seed state matching the history row for ``start_day - 1``.

    Power splits into CC and FIL+ from the RBP/QAP pair; cumulative capped
    RBP is recovered by inverting the minted total. Locked tokens are split
    into a vesting-reward part (a steady-state estimate from the last day's
    minting) and collateral. Any residual between the row's circulating
    supply and the pool identity goes to ``vested_offset``. ``kwargs`` pass
    through to :class:`InitialState` (e.g. ``owner``, ``expiry_days``).
    """
    target = genesis_date + timedelta(days=start_day - 1)
    try:
        k = data.dates.index(target)
    except ValueError:
        raise ConfigError(f"historical data has no row for {target} (day {start_day - 1})") from None
    for name in ("rbp", "qap", "minted", "vested", "locked", "burnt", "circulating"):
        if math.isnan(getattr(data, name)[k]):
            raise ConfigError(f"seeding needs column {name!r}, which is absent")
    rbp, qap = float(data.rbp[k]), float(data.qap[k])
    deal = min(max((qap - rbp) / 9.0, 0.0), rbp)
    minted = float(data.minted[k])
    simple = simple_minting_cumulative(start_day, params)
    try:
        cumsum = capped_rbp_for_baseline_minted(max(minted - simple, 0.0), params)
    except ValueError as exc:
        raise ConfigError(f"cannot invert minted supply at {target}: {exc}") from None
    locked = float(data.locked[k])
    dm = minted - float(data.minted[k - 1]) if k > 0 else 0.0
    # steady state: each of the last 180 days still holds (180 - age)/180 of its locked share
    locked_reward = min(params.reward_vest_fraction * max(dm, 0.0) * (params.reward_vest_days - 1) / 2, locked)
    burnt = float(data.burnt[k])
    vested_model = vesting_cumulative(max(start_day - 1, 0), params.vesting_schedules)
    vested_offset = float(data.circulating[k]) - (minted + vested_model - locked - burnt)
    return InitialState(
        rbp_cc=rbp - deal, rbp_deal=deal, capped_rbp_cumsum=cumsum, locked_reward=locked_reward,
        locked_collateral=locked - locked_reward, burnt=burnt, vested_offset=vested_offset, **kwargs,
    )


def write_historical(data: HistoricalData, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HISTORICAL_COLUMNS)
        for k, d in enumerate(data.dates):
            row = [d.isoformat()]
            for cname in HISTORICAL_COLUMNS[1:]:
                name, scale = _HIST_FIELDS[cname]
                v = getattr(data, name)[k]
                # full precision: scales are powers of two, so this round-trips exactly
                row.append(repr(float(v / scale)))
            w.writerow(row)
    return path


# -- outputs ---------------------------------------------------------------------


def _network_row(r):
    return (r.day, r.rbp, r.qap, r.baseline, r.delta_minted, r.minted_cum, r.vested_cum,
            r.locked_reward, r.locked_collateral, r.burnt_cum, r.circulating)


def _agent_row(r):
    return (r.day, r.agent_id, r.qap, r.daily_reward, r.cum_reward, r.pledge_outstanding,
            r.borrow_cost_cum, r.net_cum_reward)


def _write_csv(path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def trajectory_summary(trajectory: Trajectory) -> dict:
    last = trajectory.network[-1] if trajectory.network else trajectory.initial
    final = None
    if last is not None:
        final = {
            "day": last.day, "minted_cum_fil": last.minted_cum, "vested_cum_fil": last.vested_cum,
            "locked_reward_fil": last.locked_reward, "locked_collateral_fil": last.locked_collateral,
            "burnt_termination_fil": last.burnt_termination, "burnt_gas_fil": last.burnt_gas,
            "circulating_fil": last.circulating, "rbp_bytes": last.rbp, "qap_bytes": last.qap,
        }
    agents = {}
    for aid in trajectory.agent_ids:
        recs = [r for r in trajectory.agents if r.agent_id == aid]
        r = recs[-1] if recs else None
        agents[aid] = {
            "cum_reward_fil": r.cum_reward if r else 0.0,
            "borrow_cost_cum_fil": r.borrow_cost_cum if r else 0.0,
            "net_cum_reward_fil": r.net_cum_reward if r else 0.0,
            "onboarded_rb_cum_bytes": r.onboarded_rb_cum if r else 0.0,
        }
    return {
        "engine_version": trajectory.engine_version,
        "days": len(trajectory.network),
        "final_supply": final,
        "agents": agents,
        "warnings": len(trajectory.warnings),
        "config": config_to_dict(trajectory.config),
    }


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def write_trajectory(trajectory: Trajectory, out_dir) -> dict:
    """Write ``network.csv``, ``agents.csv`` and ``summary.json`` into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from None
    paths = {"network": out / "network.csv", "agents": out / "agents.csv", "summary": out / "summary.json"}
    _write_csv(paths["network"], NETWORK_COLUMNS, (_network_row(r) for r in trajectory.network))
    _write_csv(paths["agents"], AGENT_COLUMNS, (_agent_row(r) for r in trajectory.agents))
    write_json(trajectory_summary(trajectory), paths["summary"])
    return paths


def read_table(path) -> dict:
    """Read an output CSV into column arrays (``agent_id`` stays a list of str)."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    cols = {}
    for k, h in enumerate(header):
        vals = [r[k] for r in rows]
        cols[h] = vals if h in ("agent_id", "date") else np.array([float(v) for v in vals], dtype=float)
    return cols


def write_backtest(trajectory: Trajectory, report: BacktestReport, out_dir) -> dict:
    """Model-vs-actual CSVs for minted and circulating supply plus an error summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = write_trajectory(trajectory, out)
    header = ("day", "date", "model_fil", "actual_fil", "rel_error")
    paths["minted"] = out / "backtest_minted.csv"
    _write_csv(paths["minted"], header, ((r.day, r.date.isoformat(), r.minted_model, r.minted_actual,
                                          r.minted_rel_error) for r in report.rows))
    paths["circulating"] = out / "backtest_circulating.csv"
    _write_csv(paths["circulating"], header, ((r.day, r.date.isoformat(), r.circulating_model,
                                               r.circulating_actual, r.circulating_rel_error)
                                              for r in report.rows))
    paths["report"] = write_json(report.summary(), out / "backtest_report.json")
    return paths
