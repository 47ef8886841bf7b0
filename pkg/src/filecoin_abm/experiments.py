"""Canned experiments: external-rate sensitivity and wealth concentration.

Horizons, quotas and the seeded network below are fixture choices; every
value can be overridden with ``key=value`` pairs (dot paths into the config,
plus the experiment-level keys ``rates`` and ``days``).
"""

from __future__ import annotations

import copy
import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data_io import ConfigError, config_from_dict, fmt, set_path, write_json, write_trajectory
from .engine import Simulation, Trajectory

EXPERIMENTS = ("rate_sensitivity", "rate_sensitivity_riskaverse", "wealth_concentration")
WARMUP_DAYS = 90
DEFAULT_RATES = (0.10, 0.20, 0.30)
WEALTH_VECTORS = {
    "equal": (1, 1, 1, 1, 1),
    "top_heavy": (4, 1, 1, 1, 1),
    "graded": (5, 4, 3, 2, 1),
}

# A mid-life network: ~12 EiB raw power with a FIL+ slice, partly vested
# investor/team allocations, and existing locked rewards and collateral.
SEEDED_NETWORK = {
    "start_day": 960,
    "end_day": 960 + 1500,
    "supply": {
        "vesting_schedules": [
            {"recipient_id": "protocol_labs", "total_amount": 0.6e9, "start_day": 0, "duration_days": 2190},
            {"recipient_id": "investors", "total_amount": 0.3e9, "start_day": 0, "duration_days": 1095},
        ],
    },
    "initial": {
        "rbp_cc": "11 EiB",
        "rbp_deal": "1.2 EiB",
        "expiry_days": 540,
        "effective_network_time": 760.0,
        "locked_reward": 35e6,
        "locked_collateral": 110e6,
        "burnt": 30e6,
    },
}


def _npv_agent(agent_id, fil_plus, discount):
    return {
        "id": agent_id,
        "strategy": "npv",
        "daily_onboard_rb": "1 PiB",
        "fil_plus_fraction": fil_plus,
        "renewal_fraction": 0.5,
        "discount_rate": discount,
    }


def rate_sensitivity_config(risk_averse: bool = False) -> dict:
    cfg = copy.deepcopy(SEEDED_NETWORK)
    cc_discount = 0.2 if risk_averse else 0.1
    cfg["agents"] = [_npv_agent("filplus", 1.0, 0.1), _npv_agent("cc", 0.0, cc_discount)]
    return cfg


def wealth_config(weights) -> dict:
    cfg = copy.deepcopy(SEEDED_NETWORK)
    cfg["agents"] = [
        {"id": f"agent_{k + 1}", "strategy": "dca", "daily_onboard_rb": "1 PiB",
         "fil_plus_fraction": 0.1, "renewal_fraction": 0.5, "capitalization_weight": w}
        for k, w in enumerate(weights)
    ]
    return cfg


def _split_overrides(overrides):
    meta, rest = {}, []
    for key, value in overrides:
        if key in ("rates", "days"):
            meta[key] = value
        else:
            rest.append((key, value))
    return meta, rest


def _apply(raw, overrides, days):
    for key, value in overrides:
        raw = set_path(raw, key, value)
    if days is not None:
        raw = set_path(raw, "end_day", raw.get("start_day", 0) + int(days))
    return raw


def _parse_rates(value):
    if isinstance(value, (int, float)):
        return (float(value),)
    text = str(value).strip().strip("[]")
    try:
        rates = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"bad rates override {value!r}") from None
    if not rates:
        raise ConfigError("rates override is empty")
    return rates


def experiment_plan(name: str, overrides=()) -> dict:
    """Scenario name -> raw config mapping for a canned experiment."""
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    meta, rest = _split_overrides(overrides)
    days = meta.get("days")
    if name == "wealth_concentration":
        return {scen: _apply(wealth_config(w), rest, days) for scen, w in WEALTH_VECTORS.items()}
    rates = _parse_rates(meta["rates"]) if "rates" in meta else DEFAULT_RATES
    base = rate_sensitivity_config(risk_averse=name.endswith("riskaverse"))
    return {f"rate_{fmt(r)}": _apply(set_path(base, "external_rate", r), rest, days) for r in rates}


@dataclass
class ExperimentResult:
    name: str
    trajectories: dict
    report: dict
    paths: dict = field(default_factory=dict)


def _final(traj: Trajectory, agent_id: str, name: str) -> float:
    s = traj.agent_series(agent_id, name)
    return float(s[-1]) if s.size else 0.0


def rate_sensitivity_report(trajs: dict, rates: dict, warmup: int = WARMUP_DAYS) -> dict:
    """Ordering checks: FIL+ >= CC after warm-up, and end rewards non-increasing in the rate."""
    per_rate = {}
    filplus_ge_cc = True
    for scen, traj in trajs.items():
        fp = traj.agent_series("filplus", "net_cum_reward")
        cc = traj.agent_series("cc", "net_cum_reward")
        ok = bool(np.all(fp[warmup:] >= cc[warmup:]))
        filplus_ge_cc &= ok
        per_rate[scen] = {
            "rate": rates[scen],
            "filplus_net_cum_reward_fil": _final(traj, "filplus", "net_cum_reward"),
            "cc_net_cum_reward_fil": _final(traj, "cc", "net_cum_reward"),
            "filplus_borrow_cost_fil": _final(traj, "filplus", "borrow_cost_cum"),
            "cc_borrow_cost_fil": _final(traj, "cc", "borrow_cost_cum"),
            "filplus_ge_cc_after_warmup": ok,
        }
    order = sorted(per_rate.values(), key=lambda r: r["rate"])
    monotone = {}
    for agent in ("filplus", "cc"):
        ends = [r[f"{agent}_net_cum_reward_fil"] for r in order]
        monotone[agent] = all(b <= a for a, b in zip(ends, ends[1:]))
    return {
        "warmup_days": warmup,
        "scenarios": per_rate,
        "checks": {
            "filplus_ge_cc_every_rate_every_day": filplus_ge_cc,
            "net_reward_non_increasing_in_rate": all(monotone.values()),
            "non_increasing_by_agent": monotone,
        },
    }


def relative_rewards(trajs: dict, baseline: str = "equal") -> list:
    """Rows of cumulative reward per agent relative to the equal-weights run and to the top agent."""
    base = trajs[baseline]
    rows = []
    for scen, traj in trajs.items():
        ids = traj.agent_ids
        cum = {a: traj.agent_series(a, "cum_reward") for a in ids}
        weights = {s.id: s.capitalization_weight for s in traj.config.agent_specs}
        top = max(ids, key=lambda a: (weights[a], -ids.index(a)))
        days = traj.series("day")
        for a in ids:
            b = base.agent_series(a, "cum_reward")
            for k, d in enumerate(days):
                rel_base = cum[a][k] / b[k] if b[k] > 0 else float("nan")
                rel_top = cum[a][k] / cum[top][k] if cum[top][k] > 0 else float("nan")
                rows.append((scen, int(d), a, cum[a][k], b[k], rel_base, rel_top))
    return rows


def wealth_report(trajs: dict, warmup: int = WARMUP_DAYS, tol: float = 1e-12) -> dict:
    """Power conservation against the equal-weights run and relative-reward trends."""
    base = trajs["equal"]
    base_rbp, base_qap = base.series("rbp"), base.series("qap")
    scenarios = {}
    for scen, traj in trajs.items():
        rbp, qap = traj.series("rbp"), traj.series("qap")
        denom = np.maximum(np.abs(base_qap), 1.0)
        power_err = float(np.max(np.abs(qap - base_qap) / denom)) if qap.size else 0.0
        rbp_err = float(np.max(np.abs(rbp - base_rbp) / np.maximum(base_rbp, 1.0))) if rbp.size else 0.0
        weights = {s.id: s.capitalization_weight for s in traj.config.agent_specs}
        top = max(traj.agent_ids, key=lambda a: (weights[a], -traj.agent_ids.index(a)))
        top_cum = traj.agent_series(top, "cum_reward")
        trends = {}
        for a in traj.agent_ids:
            if a == top:
                continue
            cum = traj.agent_series(a, "cum_reward")
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(top_cum > 0, cum / top_cum, np.nan)[warmup:]
            ratio = ratio[~np.isnan(ratio)]
            steps = np.diff(ratio)
            trends[a] = {
                "final_ratio_to_top": float(ratio[-1]) if ratio.size else None,
                "max_increase": float(steps.max()) if steps.size else 0.0,
                "non_increasing": bool(np.all(steps <= tol * np.maximum(ratio[:-1], 1.0))),
            }
        scenarios[scen] = {
            "weights": [weights[a] for a in traj.agent_ids],
            "top_agent": top,
            "max_rel_qap_diff_vs_equal": power_err,
            "max_rel_rbp_diff_vs_equal": rbp_err,
            "ratios_to_top": trends,
            "final_cum_reward_fil": {a: _final(traj, a, "cum_reward") for a in traj.agent_ids},
        }
    checks = {
        "power_matches_equal_weights": all(s["max_rel_qap_diff_vs_equal"] <= 1e-9 and
                                           s["max_rel_rbp_diff_vs_equal"] <= 1e-9 for s in scenarios.values()),
        "lower_capitalized_non_increasing": all(t["non_increasing"] for scen, s in scenarios.items()
                                                if scen != "equal" for t in s["ratios_to_top"].values()),
    }
    return {"warmup_days": warmup, "scenarios": scenarios, "checks": checks}


def run_experiment(name: str, out_dir=None, overrides=()) -> ExperimentResult:
    """Run every scenario of a canned experiment; writes files when ``out_dir`` is given."""
    plan = experiment_plan(name, overrides)
    configs = {scen: config_from_dict(raw) for scen, raw in plan.items()}
    trajs = {scen: Simulation(cfg).run() for scen, cfg in configs.items()}
    if name == "wealth_concentration":
        report = wealth_report(trajs)
    else:
        rates = {scen: cfg.external_rate_schedule.rate_at(cfg.start_day) for scen, cfg in configs.items()}
        report = rate_sensitivity_report(trajs, rates)
    report = {"experiment": name, **report}
    result = ExperimentResult(name, trajs, report)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for scen, traj in trajs.items():
            result.paths[scen] = write_trajectory(traj, out / scen)
        if name == "wealth_concentration":
            path = out / "relative_rewards.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(("scenario", "day", "agent_id", "cum_reward_fil", "baseline_cum_reward_fil",
                            "relative_to_baseline", "relative_to_top"))
                for row in relative_rewards(trajs):
                    w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
            result.paths["relative_rewards"] = path
        else:
            path = out / "reward_trajectories.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(("scenario", "rate", "day", "agent_id", "cum_reward_fil", "borrow_cost_cum_fil",
                            "net_cum_reward_fil"))
                for scen, traj in trajs.items():
                    for r in traj.agents:
                        w.writerow([scen, fmt(rates[scen]), fmt(r.day), r.agent_id, fmt(r.cum_reward),
                                    fmt(r.borrow_cost_cum), fmt(r.net_cum_reward)])
            result.paths["reward_trajectories"] = path
        result.paths["report"] = write_json(report, out / "report.json")
    return result
