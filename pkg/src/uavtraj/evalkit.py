"""Task-level metrics over episode logs, parameter sweeps, and CSV output."""

from __future__ import annotations

import csv
import json
import math
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

from . import config as config_mod
from . import orchestrator as orch
from .advisor import ABLATIONS
from .config import RunConfig, Seeds, derive_seed
from .env import EpisodeLog
from .errors import EmptyDenominator

METRICS = ("DCR", "CR", "SLR", "RVR", "ECR")
METRICS_HEADER = ("variable", "value", "policy", *METRICS, "reward_mean", "reward_std", "n_episodes", "seed")
REWARDS_HEADER = ("variable", "value", "policy", "phase", "episode", "reward")
EVENTS_HEADER = ("variable", "value", "policy", "collided_ou", "collided_bz", "entered_nfz",
                 "advisor_terminated", "n_episodes")


@dataclass(frozen=True)
class TaskOutcome:
    collected: float
    total_target: float
    collided: bool
    landed_ok: bool
    rz_violated: bool
    energy_used: float
    energy_total: float
    collided_ou: bool = False
    collided_bz: bool = False
    entered_nfz: bool = False
    advisor_terminated: bool = False
    reward: float = 0.0

    def __post_init__(self):
        if self.collected > self.total_target + 1e-9 or self.energy_used < 0:
            raise ValueError("outcome breaks collected <= target or energy_used >= 0")


def outcome_from_log(log: EpisodeLog) -> TaskOutcome:
    recs = log.records
    ev = [r["events"] for r in recs]
    last = ev[-1] if ev else {}
    energy_used = recs[-1]["energy"] if recs else 0.0
    c_ou = any(e["collided_ou"] for e in ev)
    c_bz = any(e["collided_bz"] for e in ev)
    nfz = any(e["entered_nfz"] for e in ev)
    landed = bool(last.get("landed", False)) and not log.advisor_terminated
    return TaskOutcome(
        collected=min(sum(e["td"] for e in ev), log.initial_data),
        total_target=log.initial_data,
        collided=c_ou or c_bz or nfz,
        landed_ok=landed and energy_used <= log.energy_limit,
        rz_violated=any(e["rz_speed_violation"] for e in ev),
        energy_used=energy_used,
        energy_total=log.energy_total,
        collided_ou=c_ou, collided_bz=c_bz, entered_nfz=nfz,
        advisor_terminated=log.advisor_terminated,
        reward=log.total_reward,
    )


def _count_ratio(outcomes: Sequence[TaskOutcome], attr: str) -> float:
    if not outcomes:
        raise EmptyDenominator("no tasks to average over")
    return sum(1 for o in outcomes if getattr(o, attr)) / len(outcomes)


def dcr(outcomes: Sequence[TaskOutcome]) -> float:
    den = sum(o.total_target for o in outcomes)
    if den <= 0:
        raise EmptyDenominator("total target data is zero")
    return sum(o.collected for o in outcomes) / den


def cr(outcomes: Sequence[TaskOutcome]) -> float:
    return _count_ratio(outcomes, "collided")


def slr(outcomes: Sequence[TaskOutcome]) -> float:
    return _count_ratio(outcomes, "landed_ok")


def rvr(outcomes: Sequence[TaskOutcome]) -> float:
    return _count_ratio(outcomes, "rz_violated")


def ecr(outcomes: Sequence[TaskOutcome]) -> float:
    den = sum(o.energy_total for o in outcomes)
    if den <= 0:
        raise EmptyDenominator("total energy budget is zero")
    return sum(o.energy_used for o in outcomes) / den


def summarize(outcomes: Sequence[TaskOutcome]) -> dict:
    rewards = [o.reward for o in outcomes]
    return {
        "DCR": dcr(outcomes), "CR": cr(outcomes), "SLR": slr(outcomes), "RVR": rvr(outcomes),
        "ECR": ecr(outcomes),
        "reward_mean": statistics.fmean(rewards),
        "reward_std": statistics.pstdev(rewards) if len(rewards) > 1 else 0.0,
        "n_episodes": len(outcomes),
    }


# -- sweeps -----------------------------------------------------------------------------
SCENARIO_COUNTS = {"N_OU": "n_ou", "N_GE": "n_ge", "N_NFZ": "n_nfz", "N_BZ": "n_bz", "N_RZ": "n_rz"}
SAC_FIELDS = {"actor_lr": "actor_lr", "critic_lr": "critic_lr", "batch": "batch"}
EVAL_ONLY = {"d_th", "prompt_ablation"}
VARIABLES = (*SCENARIO_COUNTS, *SAC_FIELDS, "sigma", "d_th", "prompt_ablation")


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    episodes: int = 20
    policies: tuple[str, ...] = ("hybrid",)
    seed_base: int = 0
    train_episodes: int = 500
    checkpoint: str = ""
    preset: str = "reduced"  # reduced | default
    config: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ValueError(f"unknown sweep variable {self.variable!r}; expected one of {VARIABLES}")
        if not self.values:
            raise ValueError("sweep needs at least one value")
        if self.variable == "prompt_ablation":
            bad = [v for v in self.values if v not in ABLATIONS]
            if bad:
                raise ValueError(f"unknown ablation(s) {bad}; expected {list(ABLATIONS)}")
        for p in self.policies:
            if p not in config_mod.POLICIES:
                raise ValueError(f"unknown policy {p!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        d = dict(d)
        d["values"] = tuple(tuple(v) if isinstance(v, list) else v for v in d["values"])
        if "policies" in d:
            d["policies"] = tuple(d["policies"])
        return cls(**d)

    @classmethod
    def load(cls, path) -> "SweepSpec":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    @property
    def eval_only(self) -> bool:
        return self.variable in EVAL_ONLY


@dataclass
class SweepRow:
    variable: str
    value: object
    policy: str
    seed: int
    metrics: Optional[dict] = None
    events: Optional[dict] = None
    train_rewards: list = field(default_factory=list)
    eval_rewards: list = field(default_factory=list)
    error: str = ""

    @property
    def failed(self) -> bool:
        return self.metrics is None


def base_config(spec: SweepSpec) -> RunConfig:
    doc = json.loads(json.dumps(spec.config))
    if spec.preset == "reduced":
        cfg = config_mod.reduced_config(**doc)
    else:
        cfg = config_mod.from_dict(doc)
    b = spec.seed_base
    seeds = Seeds(derive_seed(b, 1), derive_seed(b, 2), derive_seed(b, 3), derive_seed(b, 4))
    return replace(cfg, seeds=seeds, run=replace(cfg.run, episodes=spec.train_episodes))


def apply_value(cfg: RunConfig, variable: str, value) -> RunConfig:
    if variable in SCENARIO_COUNTS:
        v = int(value)
        cfg = replace(cfg, scenario=replace(cfg.scenario, **{SCENARIO_COUNTS[variable]: (v, v)}))
    elif variable in SAC_FIELDS:
        kind = int if variable == "batch" else float
        cfg = replace(cfg, sac=replace(cfg.sac, **{SAC_FIELDS[variable]: kind(value)}))
    elif variable == "sigma":
        cfg = replace(cfg, reward=replace(cfg.reward, weights=tuple(float(x) for x in value)))
    elif variable == "d_th":
        cfg = replace(cfg, advisor=replace(cfg.advisor, trigger=replace(cfg.advisor.trigger,
                                                                         threshold_m=float(value))))
    elif variable == "prompt_ablation":
        cfg = replace(cfg, advisor=replace(cfg.advisor, prompt=ABLATIONS[value]))
    config_mod.validate(cfg)
    return cfg


def _events(outcomes: Sequence[TaskOutcome]) -> dict:
    return {k: sum(1 for o in outcomes if getattr(o, k))
            for k in ("collided_ou", "collided_bz", "entered_nfz", "advisor_terminated")}


def run_sweep(spec: SweepSpec, out_dir=None, advisor=None,
              progress: Optional[Callable[[SweepRow], None]] = None) -> list[SweepRow]:
    """Evaluate every (value, policy) cell; eval-only variables share one trained actor per policy."""
    base = base_config(spec)
    shared: dict = {}

    def actor_for(cfg: RunConfig, policy: str, key):
        if policy == "heuristic":
            return None, []
        if spec.checkpoint:
            if "ckpt" not in shared:
                shared["ckpt"] = orch.load_agent(spec.checkpoint, cfg)
            return shared["ckpt"], []
        if key in shared:
            return shared[key]
        tr = orch.Trainer(orch.with_policy(cfg, policy), None, advisor)
        res = tr.train()
        shared[key] = (tr.agent, res.rewards)
        return shared[key]

    rows = []
    for value in spec.values:
        for policy in spec.policies:
            row = SweepRow(spec.variable, value, policy, spec.seed_base)
            try:
                cfg = orch.with_policy(apply_value(base, spec.variable, value), policy)
                key = (policy,) if spec.eval_only else (policy, _value_text(value))
                agent, train_rewards = actor_for(cfg if not spec.eval_only else orch.with_policy(base, policy),
                                                 policy, key)
                logs = orch.evaluate(cfg, agent, spec.episodes, seed=cfg.seeds.eval, advisor=advisor)
                outs = [outcome_from_log(lg) for lg in logs]
                row.metrics = summarize(outs)
                row.events = _events(outs)
                row.train_rewards = list(train_rewards)
                row.eval_rewards = [o.reward for o in outs]
            except Exception as exc:  # a failed cell is recorded and the sweep moves on
                row.error = f"{type(exc).__name__}: {exc}"
            rows.append(row)
            if progress is not None:
                progress(row)
    if out_dir is not None:
        write_outputs(rows, out_dir)
    return rows


# -- output -----------------------------------------------------------------------------
def _value_text(v) -> str:
    if isinstance(v, (list, tuple)):
        return json.dumps(list(v), separators=(",", ":"))
    return str(v)


def _num(x) -> str:
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else ""
    return str(x)


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_outputs(rows: Sequence[SweepRow], out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"metrics": out / "metrics.csv", "rewards": out / "rewards.csv", "events": out / "collisions.csv"}
    with paths["metrics"].open("w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(METRICS_HEADER)
        for r in rows:
            head = [r.variable, _value_text(r.value), r.policy]
            if r.failed:
                w.writerow(head + [""] * (len(METRICS) + 2) + [0, r.seed])
            else:
                m = r.metrics
                w.writerow(head + [_num(m[k]) for k in METRICS]
                           + [_num(m["reward_mean"]), _num(m["reward_std"]), m["n_episodes"], r.seed])
    with paths["rewards"].open("w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(REWARDS_HEADER)
        for r in rows:
            head = [r.variable, _value_text(r.value), r.policy]
            for phase, series in (("train", r.train_rewards), ("eval", r.eval_rewards)):
                for i, x in enumerate(series, 1):
                    w.writerow(head + [phase, i, _num(float(x))])
    with paths["events"].open("w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(EVENTS_HEADER)
        for r in rows:
            ev = r.events or {}
            n = r.metrics["n_episodes"] if r.metrics else 0
            w.writerow([r.variable, _value_text(r.value), r.policy]
                       + [ev.get(k, "") for k in EVENTS_HEADER[3:-1]] + [n])
    failed = [r for r in rows if r.failed]
    if failed:
        lines = [f"{r.variable}={_value_text(r.value)} {r.policy}: {r.error}" for r in failed]
        (out / "failed_cells.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return paths


def read_metrics(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
