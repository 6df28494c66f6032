"""Run configuration: defaults, JSON loading, validation, provenance and seed streams."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .advisor import AdvisorConfig, TRIGGER_CLASSES
from .comms import ChannelParams
from .energy import RotorParams
from .env import LAYOUT, EpisodeConfig, RewardConfig, SafetyRadii
from .errors import ConfigParseError, ValidationError
from .sac import SacConfig
from .world import ScenarioConfig

POLICIES = ("heuristic", "sac", "sac_heuristic", "sac_llm_fixed_fp", "hybrid")
EFFECTIVE_FORMAT = "uavtraj-effective-config/1"

PAPER, DESIGN, USER = "paper-default", "design-default", "user"

# leaves whose default value is a published table/text value; everything else is a design default
PAPER_FIELDS = {
    "scenario.area.X", "scenario.area.Y", "scenario.n_ge", "scenario.n_ou", "scenario.n_nfz",
    "scenario.n_bz", "scenario.n_rz", "scenario.zone_side", "scenario.dv", "scenario.tp_w",
    "scenario.ta_size", "scenario.v_max", "scenario.v_limit", "scenario.pr_m",
    "channel.noise_w", "channel.tau",
    "energy.e_total_j", "energy.e_limit_j",
    "reward.weights",
    "radii.d_min.ou", "radii.d_min.bz", "radii.d_min.nfz", "radii.d_min.area",
    "radii.d_safe.ou", "radii.d_safe.bz", "radii.d_safe.nfz", "radii.d_safe.area",
    "sac.actor_lr", "sac.critic_lr", "sac.gamma", "sac.batch", "sac.hidden",
    "advisor.trigger.threshold_m", "advisor.max_attempts",
    "run.episodes",
}

SCENARIO_EXCLUDE = {"seed"}


@dataclass(frozen=True)
class EnergyConfig:
    rotor: RotorParams = RotorParams()
    e_total_j: float = 1e6
    e_limit_j: float = 8e5
    hover_as_printed: bool = False
    fly_with_induced: bool = False


@dataclass(frozen=True)
class Seeds:
    scenario: int = 1
    policy: int = 2
    advisor: int = 3
    eval: int = 4


@dataclass(frozen=True)
class RunSection:
    policy: str = "hybrid"
    fp: float = 0.5
    episodes: int = 4000
    checkpoint_every: int = 100


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioConfig = ScenarioConfig()
    channel: ChannelParams = ChannelParams()
    energy: EnergyConfig = EnergyConfig()
    reward: RewardConfig = RewardConfig()
    radii: SafetyRadii = SafetyRadii()
    sac: SacConfig = SacConfig()
    advisor: AdvisorConfig = AdvisorConfig()
    episode: EpisodeConfig = EpisodeConfig()
    seeds: Seeds = Seeds()
    run: RunSection = RunSection()
    provenance: dict = field(default_factory=dict, compare=False, repr=False)

    def scenario_config(self, seed: int) -> ScenarioConfig:
        return replace(self.scenario, seed=int(seed))

    def to_dict(self) -> dict:
        return _to_plain(self)


def derive_seed(*keys: int) -> int:
    """Stable 63-bit seed from a tuple of integers."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(2, np.uint64)[0] >> 1)


# -- dataclass <-> plain JSON -----------------------------------------------------------
def _to_plain(obj, path: str = "") -> Any:
    if dataclasses.is_dataclass(obj):
        out = {}
        for f in dataclasses.fields(obj):
            if f.name == "provenance" or (path == "scenario" and f.name in SCENARIO_EXCLUDE):
                continue
            sub = f"{path}.{f.name}" if path else f.name
            out[f.name] = _to_plain(getattr(obj, f.name), sub)
        return out
    if isinstance(obj, tuple):
        return [_to_plain(v) for v in obj]
    return obj


def _coerce(value, default, path: str):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ValidationError(f"{path}: expected a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(f"{path}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ValidationError(f"{path}: expected a string, got {value!r}")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, list):
            raise ValidationError(f"{path}: expected a list, got {value!r}")
        proto = default[0] if default else None
        if proto is None:
            return tuple(value)
        return tuple(_coerce(v, proto, f"{path}[{i}]") for i, v in enumerate(value))
    return value


def _from_plain(default, data, path: str, prov: dict, user_prov: dict | None):
    if not isinstance(data, dict):
        raise ValidationError(f"{path or '<root>'}: expected an object")
    cls = type(default)
    names = {f.name for f in dataclasses.fields(cls)} - {"provenance"}
    if path == "scenario":
        names -= SCENARIO_EXCLUDE
    unknown = set(data) - names
    if unknown:
        raise ValidationError(f"{path or '<root>'}: unknown field(s) {sorted(unknown)}")
    kwargs = {}
    for name in sorted(names):
        sub = f"{path}.{name}" if path else name
        dv = getattr(default, name)
        if dataclasses.is_dataclass(dv):
            kwargs[name] = _from_plain(dv, data.get(name, {}), sub, prov, user_prov)
            continue
        if name in data:
            kwargs[name] = _coerce(data[name], dv, sub)
            if user_prov is not None and sub in user_prov:
                prov[sub] = user_prov[sub]
            else:
                prov[sub] = USER
        else:
            kwargs[name] = dv
            prov[sub] = PAPER if sub in PAPER_FIELDS else DESIGN
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{path or '<root>'}: {exc}") from exc


def from_dict(data: dict) -> RunConfig:
    if "config" in data and data.get("format") == EFFECTIVE_FORMAT:
        prov: dict = {}
        cfg = _from_plain(RunConfig(), data["config"], "", prov, data.get("provenance", {}))
    else:
        prov = {}
        cfg = _from_plain(RunConfig(), data, "", prov, None)
    cfg = replace(cfg, provenance=prov)
    validate(cfg)
    return cfg


def load(path) -> RunConfig:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(str(path), exc.lineno, exc.msg) from exc
    return from_dict(data)


def default_config() -> RunConfig:
    return from_dict({})


def effective_config(cfg: RunConfig) -> dict:
    prov = dict(cfg.provenance)
    if not prov:
        _from_plain(RunConfig(), cfg.to_dict(), "", prov, None)
        prov = {k: (PAPER if k in PAPER_FIELDS else DESIGN) for k in prov}
    return {"format": EFFECTIVE_FORMAT, "config": cfg.to_dict(),
            "provenance": dict(sorted(prov.items()))}


def write_effective_config(cfg: RunConfig, directory) -> Path:
    p = Path(directory) / "effective_config.json"
    p.write_text(json.dumps(effective_config(cfg), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return p


# -- validation -----------------------------------------------------------------------
def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


def _range(r, name: str, lo_min: float = 0) -> None:
    _check(len(r) == 2, f"{name} must be a [lo, hi] pair")
    _check(r[0] >= lo_min and r[0] <= r[1], f"{name} must satisfy {lo_min} <= lo <= hi, got {list(r)}")


def validate(cfg: RunConfig) -> None:
    sc = cfg.scenario
    for name in ("n_ge", "n_ou", "n_nfz", "n_bz", "n_rz"):
        _range(getattr(sc, name), f"scenario.{name}")
    _check(sc.n_ge[1] <= LAYOUT.max_ge, f"scenario.n_ge upper bound exceeds observation capacity {LAYOUT.max_ge}")
    for name in ("n_nfz", "n_bz", "n_rz"):
        _check(getattr(sc, name)[1] <= LAYOUT.max_zone_per_type,
               f"scenario.{name} upper bound exceeds observation capacity {LAYOUT.max_zone_per_type}")
    _range(sc.zone_side, "scenario.zone_side")
    _check(sc.zone_side[0] > 0, "scenario.zone_side must be positive")
    _check(sc.zone_side[1] + sc.ta_size < min(sc.area.X, sc.area.Y),
           "scenario.zone_side upper bound leaves no room beside the take-off/landing areas")
    _range(sc.dv, "scenario.dv")
    _check(sc.dv[1] > 0, "scenario.dv upper bound must be positive")
    _check(sc.tp_w > 0, "scenario.tp_w must be positive")
    _check(sc.altitude_m > 0, "scenario.altitude_m must be positive")
    _check(0 < sc.ta_size < min(sc.area.X, sc.area.Y) / 2, "scenario.ta_size must fit twice in the area")
    _check(sc.v_max > 0, "scenario.v_max must be positive")
    _check(0 < sc.v_limit < sc.v_max, "v_limit < v_max must hold (0 < v_limit < v_max)")
    _check(sc.pr_m > 0, "scenario.pr_m must be positive")
    _check(sc.ou_heading_period >= 1, "scenario.ou_heading_period must be >= 1")

    en = cfg.energy
    _check(0 < en.e_limit_j <= en.e_total_j, "E_limit <= E_total must hold (and both positive)")

    w = cfg.reward.weights
    _check(len(w) == 9, "reward.weights must hold nine values")
    _check(all(x >= 0 for x in w), "reward.weights must be non-negative")
    _check(cfg.reward.landing_bonus >= 0 and cfg.reward.collision_penalty >= 0,
           "reward.landing_bonus and reward.collision_penalty must be non-negative")

    for cls in ("ou", "bz", "nfz", "area"):
        lo, hi = getattr(cfg.radii.d_min, cls), getattr(cfg.radii.d_safe, cls)
        _check(0 < lo < hi, f"radii for {cls}: 0 < d_min < d_safe must hold")
    _check(cfg.radii.d_tar_la > 0, "radii.d_tar_la must be positive")

    s = cfg.sac
    _check(0 < s.gamma < 1, "sac.gamma must lie in (0, 1)")
    _check(0 < s.polyak <= 1, "sac.polyak must lie in (0, 1]")
    _check(s.temperature >= 0, "sac.temperature must be non-negative")
    _check(s.batch >= 1, "sac.batch must be >= 1")
    _check(s.actor_lr > 0 and s.critic_lr > 0, "learning rates must be positive")
    _check(s.buffer_capacity >= s.batch, "sac.buffer_capacity must hold at least one batch")
    _check(len(s.hidden) >= 1 and all(h >= 1 for h in s.hidden), "sac.hidden dims must be >= 1")
    _check(s.log_std_min < s.log_std_max, "sac.log_std_min < log_std_max must hold")
    _check(s.warmup_steps >= 0 and s.grad_steps_per_episode >= 0, "step counts must be >= 0")

    a = cfg.advisor
    _check(a.kind in ("scripted", "remote", "replay", "none"), f"advisor.kind {a.kind!r} is not recognised")
    _check(a.trigger.threshold_m > 0, "advisor.trigger.threshold_m must be positive")
    _check(set(a.trigger.classes) <= set(TRIGGER_CLASSES),
           f"advisor.trigger.classes must be a subset of {list(TRIGGER_CLASSES)}")
    _check(1 <= a.max_attempts <= 10, "advisor.max_attempts must lie in [1, 10]")
    _check(a.v_cruise > 0 and a.k_rep >= 0, "advisor.v_cruise > 0 and k_rep >= 0 must hold")
    _check(a.endpoint.timeout_s > 0, "advisor.endpoint.timeout_s must be positive")
    if a.kind == "remote":
        _check(bool(a.endpoint.url), "advisor.endpoint.url is required for the remote advisor")
    if a.kind == "replay":
        _check(bool(a.replay_path), "advisor.replay_path is required for the replay advisor")

    ep = cfg.episode
    _check(ep.t_max >= 1, "episode.t_max must be >= 1")
    _check(ep.collision_radius_m > 0, "episode.collision_radius_m must be positive")

    r = cfg.run
    _check(r.policy in POLICIES, f"run.policy must be one of {list(POLICIES)}")
    _check(0.0 <= r.fp <= 1.0, "run.fp must lie in [0, 1]")
    _check(r.episodes >= 1, "run.episodes must be >= 1")
    _check(r.checkpoint_every >= 1, "run.checkpoint_every must be >= 1")


# -- JSON schema ------------------------------------------------------------------------
def _schema_for(obj, path: str = "") -> dict:
    if dataclasses.is_dataclass(obj):
        props = {}
        for f in dataclasses.fields(obj):
            if f.name == "provenance" or (path == "scenario" and f.name in SCENARIO_EXCLUDE):
                continue
            sub = f"{path}.{f.name}" if path else f.name
            props[f.name] = _schema_for(getattr(obj, f.name), sub)
        return {"type": "object", "properties": props, "additionalProperties": False}
    if isinstance(obj, bool):
        return {"type": "boolean", "default": obj}
    if isinstance(obj, int):
        return {"type": "integer", "default": obj}
    if isinstance(obj, float):
        return {"type": "number", "default": obj}
    if isinstance(obj, str):
        return {"type": "string", "default": obj}
    if isinstance(obj, tuple):
        items = _schema_for(obj[0]) if obj else {}
        items.pop("default", None)
        return {"type": "array", "items": items, "default": list(obj)}
    return {}


def json_schema() -> dict:
    s = _schema_for(RunConfig())
    s["$schema"] = "https://json-schema.org/draft/2020-12/schema"
    s["title"] = "uavtraj run configuration"
    return s


# -- presets ----------------------------------------------------------------------------
REDUCED_LANDING_BONUS = 150.0


def reduced_config(policy: str = "sac", episodes: int = 500, **sections) -> RunConfig:
    """Desk-scale setting: 250x250 m, five GEs, two OUs, one zone of each type, 200 slots."""
    doc = {
        "scenario": {"area": {"X": 250.0, "Y": 250.0}, "n_ge": [5, 5], "n_ou": [2, 2],
                     "n_nfz": [1, 1], "n_bz": [1, 1], "n_rz": [1, 1], "zone_side": [25.0, 100.0]},
        "episode": {"t_max": 200},
        # without a landing payoff the short-horizon learner never finds the landing area
        "reward": {"landing_bonus": REDUCED_LANDING_BONUS},
        "run": {"policy": policy, "episodes": episodes},
    }
    for name, vals in sections.items():
        doc.setdefault(name, {}).update(vals)
    return from_dict(doc)
