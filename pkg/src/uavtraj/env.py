"""The POMDP environment: observation encoding, composite reward, slot stepping, episode logs."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import comms, energy
from .dynamics import SlotClock, UavState, step_dcu, visible_ous
from .errors import EpisodeFinished
from .world import Scenario, dist_point_rect, dist_to_area_boundary, inside_any, min_dist_to_zones


@dataclass(frozen=True)
class ObservationLayout:
    max_ge: int = 15
    ge_features: int = 3
    max_zone_per_type: int = 3
    zone_features: int = 4
    zone_types: int = 3
    max_ou: int = 7
    ou_features: int = 4
    dcu_features: int = 14

    @property
    def ge_offset(self) -> int:
        return 0

    @property
    def zone_offset(self) -> int:
        return self.max_ge * self.ge_features

    @property
    def ou_offset(self) -> int:
        return self.zone_offset + self.zone_types * self.max_zone_per_type * self.zone_features

    @property
    def dcu_offset(self) -> int:
        return self.ou_offset + self.max_ou * self.ou_features

    @property
    def total_dim(self) -> int:
        return self.dcu_offset + self.dcu_features


LAYOUT = ObservationLayout()


@dataclass(frozen=True)
class RewardConfig:
    weights: tuple[float, ...] = (8.0, 0.4, 0.4, 0.4, 0.6, 0.4, 0.6, 1.0, 0.01)
    r1_as_printed: bool = False
    r7_as_printed: bool = False
    landing_bonus: float = 0.0  # one-off reward on touching down inside the landing area
    landing_bonus_by_data: bool = False  # scale the landing bonus by the fraction of data collected
    collision_penalty: float = 0.0  # one-off cost on an OU/BZ collision or NFZ entry


@dataclass(frozen=True)
class ClassRadii:
    ou: float
    bz: float
    nfz: float
    area: float


@dataclass(frozen=True)
class SafetyRadii:
    d_min: ClassRadii = ClassRadii(5.0, 5.0, 5.0, 5.0)
    d_safe: ClassRadii = ClassRadii(15.0, 15.0, 15.0, 15.0)
    d_tar_la: float = 100.0


@dataclass(frozen=True)
class EpisodeConfig:
    t_max: int = 400
    collision_radius_m: float = 2.0
    resample_scenario: bool = True


@dataclass(frozen=True)
class RewardInputs:
    """Everything the reward needs, measured after the flight and hover phases of a slot."""

    td: float
    d_ou: float
    d_bz: float
    d_nfz: float
    in_rz: bool
    speed: float
    d_area: float
    exited_area: bool
    d_la: float
    energy_remaining: float
    energy_min: float
    landed: bool = False
    collided: bool = False
    collected_fraction: float = 1.0


@dataclass(frozen=True)
class RewardBreakdown:
    r1: float
    r2: float
    r3: float
    r4: float
    r5: float
    r6: float
    r7: float
    r8: float
    r9: float
    total: float
    r_land: float = 0.0
    r_crash: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


def barrier(d: float, d_min: float, d_safe: float, sigma: float) -> float:
    if d >= d_safe:
        return 0.0
    if d > d_min:
        return -sigma * (d_safe - d) / (d_safe - d_min)
    return -sigma


def compute_reward(ri: RewardInputs, rc: RewardConfig, radii: SafetyRadii, v_limit: float,
                   v_max: float) -> RewardBreakdown:
    s = rc.weights
    if rc.r1_as_printed:
        r1 = s[0] if ri.td >= 0.0 else 0.0
    else:
        r1 = s[0] if ri.td > 0.0 else 0.0
    r2 = barrier(ri.d_ou, radii.d_min.ou, radii.d_safe.ou, s[1])
    r3 = barrier(ri.d_bz, radii.d_min.bz, radii.d_safe.bz, s[2])
    r4 = barrier(ri.d_nfz, radii.d_min.nfz, radii.d_safe.nfz, s[3])
    if ri.in_rz and ri.speed > v_limit:
        r5 = -s[4] * (min(ri.speed, v_max) - v_limit) / (v_max - v_limit)
    else:
        r5 = 0.0
    if ri.exited_area:
        r6 = -s[5]
    else:
        r6 = barrier(ri.d_area, radii.d_min.area, radii.d_safe.area, s[5])
    if 0.0 < ri.d_la < radii.d_tar_la:
        shaping = s[6] * (1.0 - ri.d_la / radii.d_tar_la)
        r7 = -shaping if rc.r7_as_printed else shaping
    else:
        r7 = 0.0
    if ri.energy_remaining < ri.energy_min and ri.energy_min > 0:
        r8 = -s[7] * (ri.energy_min - ri.energy_remaining) / ri.energy_min
    else:
        r8 = 0.0
    r9 = -s[8]
    r_land = 0.0
    if ri.landed:
        r_land = rc.landing_bonus * (ri.collected_fraction if rc.landing_bonus_by_data else 1.0)
    r_crash = -rc.collision_penalty if ri.collided else 0.0
    total = r1 + r2 + r3 + r4 + r5 + r6 + r7 + r8 + r9 + r_land + r_crash
    return RewardBreakdown(r1, r2, r3, r4, r5, r6, r7, r8, r9, total, r_land, r_crash)


@dataclass
class Events:
    collided_ou: bool = False
    collided_bz: bool = False
    entered_nfz: bool = False
    rz_speed_violation: bool = False
    exited_area_attempt: bool = False
    landed: bool = False
    energy_exhausted: bool = False
    timeout: bool = False
    td: float = 0.0

    @property
    def collided(self) -> bool:
        return self.collided_ou or self.collided_bz or self.entered_nfz

    @property
    def terminal(self) -> bool:
        return self.collided or self.landed or self.energy_exhausted or self.timeout


@dataclass
class StepOutcome:
    observation: np.ndarray
    reward: RewardBreakdown
    done: bool
    events: Events


@dataclass
class EpisodeLog:
    scenario: Scenario
    seed: int
    records: list = field(default_factory=list)
    advisor_terminated: bool = False
    initial_data: float = 0.0
    energy_total: float = 1e6
    energy_limit: float = 8e5

    def __len__(self):
        return len(self.records)

    @property
    def total_reward(self) -> float:
        return float(sum(r["reward"]["total"] for r in self.records))

    def header(self) -> dict:
        return {
            "header": True,
            "seed": self.seed,
            "advisor_terminated": self.advisor_terminated,
            "initial_data": self.initial_data,
            "energy_total": self.energy_total,
            "energy_limit": self.energy_limit,
            "scenario": self.scenario.to_dict(),
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps(self.header(), sort_keys=True, separators=(",", ":"))]
        lines += [json.dumps(r, sort_keys=True, separators=(",", ":")) for r in self.records]
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str) -> "EpisodeLog":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        head, recs = rows[0], rows[1:]
        if not head.get("header"):
            raise ValueError("episode log is missing its header line")
        return cls(Scenario.from_dict(head["scenario"]), head["seed"], recs,
                   head["advisor_terminated"], head["initial_data"], head["energy_total"],
                   head["energy_limit"])

    @classmethod
    def read(cls, path) -> "EpisodeLog":
        with open(path, encoding="utf-8") as fh:
            return cls.from_jsonl(fh.read())


class UavEnv:
    """One DCU flying one scenario, slot by slot."""

    def __init__(self, scenario: Scenario, cfg, layout: ObservationLayout = LAYOUT):
        self.scenario = scenario
        self.cfg = cfg
        self.layout = layout
        self.clock = SlotClock()
        sc = cfg.scenario
        self.v_max = sc.v_max
        self.v_limit = sc.v_limit
        self.pr = sc.pr_m
        self.H = scenario.altitude_m
        self.channel = cfg.channel
        self.rotor = cfg.energy.rotor
        self.t_max = cfg.episode.t_max
        self.dv_max = sc.dv[1]
        if len(scenario.ges) > layout.max_ge:
            raise ValueError(f"scenario has {len(scenario.ges)} GEs, layout holds {layout.max_ge}")
        for name in ("nfz", "rz", "bz"):
            if len(getattr(scenario, name)) > layout.max_zone_per_type:
                raise ValueError(f"too many {name} zones for the observation layout")
        if scenario.ou_tracks:
            self._ou_pos = np.stack([tr.positions for tr in scenario.ou_tracks])
        else:
            self._ou_pos = np.zeros((0, self.t_max + 1, 2))
        tp = scenario.ges[0].transmit_power if scenario.ges else sc.tp_w
        best_snr = comms.snr(tp, self.channel.alpha / self.H, self.channel.noise_w)
        self._td_cap = comms.rate(best_snr) * self.clock.t_hover
        self._e_fly_vmax = energy.fly_energy(self.v_max, 1.0, self.rotor, cfg.energy.fly_with_induced)
        self._static_obs = self._encode_static()
        self.done = True
        self.log: Optional[EpisodeLog] = None

    # -- state access -------------------------------------------------------------
    @property
    def position(self) -> tuple[float, float]:
        return self.dcu.position

    @property
    def velocity(self) -> tuple[float, float]:
        return self.dcu.velocity

    @property
    def energy_remaining(self) -> float:
        return self.ledger.remaining

    def energy_min(self, position=None) -> float:
        p = self.dcu.position if position is None else position
        return self._e_fly_vmax * dist_point_rect(p, self.scenario.landing) / self.v_max

    def visible_ous(self):
        return visible_ous(self.dcu.position, self.scenario.ou_tracks, self.t, self.pr)

    def remaining_data(self) -> list[float]:
        return [g.remaining_data for g in self.ges]

    @property
    def collected(self) -> float:
        return self._collected

    def _ou_distance(self, p, t: int) -> float:
        if len(self._ou_pos) == 0:
            return math.inf
        d = self._ou_pos[:, t, :] - np.asarray(p)
        return float(np.sqrt((d * d).sum(axis=1)).min())

    # -- episode --------------------------------------------------------------------
    def reset(self) -> np.ndarray:
        ta = self.scenario.take_off
        self.dcu = UavState(ta.center, (0.0, 0.0))
        self.t = 0
        self.ledger = energy.EnergyLedger(self.cfg.energy.e_total_j, self.cfg.energy.e_limit_j)
        self.ges = [comms.GeRuntime.fresh(g) for g in self.scenario.ges]
        self.last_td = 0.0
        self._collected = 0.0
        self._initial_data = float(sum(g.initial_data for g in self.scenario.ges))
        self.done = False
        # tie-breaks among equally strong GEs
        self.rng = np.random.default_rng(np.random.SeedSequence([self.scenario.seed, 7]))
        self.log = EpisodeLog(self.scenario, self.scenario.seed,
                              initial_data=self._initial_data,
                              energy_total=self.ledger.total, energy_limit=self.ledger.limit)
        return self.observe()

    def terminate_by_advisor(self) -> None:
        self.done = True
        if self.log is not None:
            self.log.advisor_terminated = True

    def step(self, action, source: str = "policy") -> StepOutcome:
        if self.done:
            raise EpisodeFinished("step() called on a finished episode")
        sc = self.scenario
        action = (float(action[0]), float(action[1]))
        new, clamp = step_dcu(self.dcu, action, sc.area, self.v_max, self.clock.t_fly)
        pos, speed = new.position, new.speed
        t1 = self.t + 1

        ev = Events()
        ev.entered_nfz = inside_any(pos, sc.nfz)
        ev.collided_bz = inside_any(pos, sc.bz)
        d_ou = self._ou_distance(pos, t1)
        ev.collided_ou = d_ou <= self.cfg.episode.collision_radius_m
        in_rz = inside_any(pos, sc.rz)
        ev.rz_speed_violation = in_rz and speed > self.v_limit
        ev.exited_area_attempt = clamp.exited_area

        if not ev.collided:
            res = comms.hover_collect(pos, self.H, self.ges, self.channel, self.clock.t_hover, self.rng)
            ev.td = res.td
        self._collected += ev.td

        ecfg = self.cfg.energy
        e_fly = energy.fly_energy(speed, self.clock.t_fly, self.rotor, ecfg.fly_with_induced)
        e_hover = energy.hover_energy(self.clock.t_hover, self.rotor, ecfg.hover_as_printed)
        _, ev.energy_exhausted = self.ledger.charge(e_fly, e_hover)
        ev.landed = sc.landing.contains(pos)
        ev.timeout = t1 >= self.t_max

        d_la = dist_point_rect(pos, sc.landing)
        ri = RewardInputs(
            td=ev.td, d_ou=d_ou, d_bz=min_dist_to_zones(pos, sc.bz),
            d_nfz=min_dist_to_zones(pos, sc.nfz), in_rz=in_rz, speed=speed,
            d_area=dist_to_area_boundary(pos, sc.area), exited_area=clamp.exited_area,
            d_la=d_la, energy_remaining=self.ledger.remaining,
            energy_min=self._e_fly_vmax * d_la / self.v_max, landed=ev.landed,
            collided=ev.collided,
            collected_fraction=self._collected / self._initial_data if self._initial_data > 0 else 1.0,
        )
        rw = compute_reward(ri, self.cfg.reward, self.cfg.radii, self.v_limit, self.v_max)

        self.dcu = new
        self.t = t1
        self.last_td = ev.td
        self.done = ev.terminal
        obs = self.observe()
        self.log.records.append({
            "t": t1 - 1,
            "pos": [pos[0], pos[1]],
            "vel": [new.velocity[0], new.velocity[1]],
            "action": [action[0], action[1]],
            "source": source,
            "reward": rw.as_dict(),
            "events": asdict(ev),
            "energy": self.ledger.consumed,
        })
        return StepOutcome(obs, rw, self.done, ev)

    # -- observation ----------------------------------------------------------------
    def _encode_static(self) -> np.ndarray:
        lay, sc = self.layout, self.scenario
        X, Y = sc.area.X, sc.area.Y
        v = np.zeros(lay.total_dim)
        for i, g in enumerate(sc.ges):
            o = lay.ge_offset + i * lay.ge_features
            v[o], v[o + 1] = g.position[0] / X, g.position[1] / Y
        for k, zones in enumerate((sc.nfz, sc.rz, sc.bz)):
            for i, r in enumerate(zones):
                o = lay.zone_offset + (k * lay.max_zone_per_type + i) * lay.zone_features
                v[o:o + 4] = (r.x / X, r.y / Y, r.l / X, r.w / Y)
        o = lay.dcu_offset + 6
        for r in (sc.take_off, sc.landing):
            v[o:o + 4] = (r.x / X, r.y / Y, r.l / X, r.w / Y)
            o += 4
        return v

    def observe(self) -> np.ndarray:
        lay = self.layout
        X, Y = self.scenario.area.X, self.scenario.area.Y
        v = self._static_obs.copy()
        for i, g in enumerate(self.ges):
            v[lay.ge_offset + i * lay.ge_features + 2] = g.remaining_data / self.dv_max
        p = self.dcu.position
        for k, (_, op, ov, _) in enumerate(self.visible_ous()[:lay.max_ou]):
            o = lay.ou_offset + k * lay.ou_features
            v[o:o + 4] = ((op[0] - p[0]) / self.pr, (op[1] - p[1]) / self.pr,
                          ov[0] / self.v_max, ov[1] / self.v_max)
        o = lay.dcu_offset
        v[o:o + 6] = (p[0] / X, p[1] / Y, self.dcu.velocity[0] / self.v_max,
                      self.dcu.velocity[1] / self.v_max, self.ledger.remaining / self.ledger.total,
                      self.last_td / self._td_cap)
        return v


def replay_log(log: EpisodeLog, cfg) -> list[dict]:
    """Re-fly the logged actions in a fresh environment and return the regenerated records."""
    env = UavEnv(log.scenario, cfg)
    env.reset()
    for rec in log.records:
        if env.done:
            break
        env.step(rec["action"], rec["source"])
    return env.log.records
