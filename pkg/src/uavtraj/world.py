"""Geometry primitives, scenario sampling and distance queries."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import OutsideArea, SamplingExhausted

MAX_REDRAWS = 10_000
# returned by min_dist_to_zones when there is nothing to measure against
NO_ZONE = math.inf


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle anchored at its lower-left corner."""

    x: float
    y: float
    l: float
    w: float

    def __post_init__(self):
        if not (self.l > 0 and self.w > 0):
            raise ValueError(f"rectangle sides must be positive, got l={self.l}, w={self.w}")

    @property
    def x2(self) -> float:
        return self.x + self.l

    @property
    def y2(self) -> float:
        return self.y + self.w

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + 0.5 * self.l, self.y + 0.5 * self.w)

    def contains(self, p) -> bool:
        return self.x <= p[0] <= self.x2 and self.y <= p[1] <= self.y2

    def intersects(self, other: "Rect") -> bool:
        # closed rectangles: touching counts
        return not (
            self.x2 < other.x or other.x2 < self.x or self.y2 < other.y or other.y2 < self.y
        )

    def inflate(self, margin: float) -> "Rect":
        return Rect(self.x - margin, self.y - margin, self.l + 2 * margin, self.w + 2 * margin)

    def to_list(self) -> list[float]:
        return [self.x, self.y, self.l, self.w]

    @classmethod
    def from_list(cls, v) -> "Rect":
        return cls(*(float(a) for a in v))


@dataclass(frozen=True)
class AreaSpec:
    X: float = 500.0
    Y: float = 500.0

    def __post_init__(self):
        if not (self.X > 0 and self.Y > 0):
            raise ValueError("area dimensions must be positive")

    def contains(self, p) -> bool:
        return 0.0 <= p[0] <= self.X and 0.0 <= p[1] <= self.Y

    def fits(self, r: Rect) -> bool:
        return r.x >= 0 and r.y >= 0 and r.x2 <= self.X and r.y2 <= self.Y


@dataclass(frozen=True)
class GeSpec:
    position: tuple[float, float]
    initial_data: float
    transmit_power: float


@dataclass(frozen=True)
class ScenarioConfig:
    area: AreaSpec = AreaSpec()
    n_ge: tuple[int, int] = (11, 15)
    n_ou: tuple[int, int] = (3, 7)
    n_nfz: tuple[int, int] = (1, 3)
    n_bz: tuple[int, int] = (1, 3)
    n_rz: tuple[int, int] = (1, 3)
    zone_side: tuple[float, float] = (50.0, 200.0)
    dv: tuple[float, float] = (1.0, 3.0)
    tp_w: float = 0.01
    altitude_m: float = 20.0
    ta_size: float = 25.0
    v_max: float = 10.0
    v_limit: float = 5.0
    pr_m: float = 20.0
    ou_heading_period: int = 20
    seed: int = 0


@dataclass
class Scenario:
    area: AreaSpec
    take_off: Rect
    landing: Rect
    nfz: list[Rect]
    bz: list[Rect]
    rz: list[Rect]
    ges: list[GeSpec]
    ou_tracks: list = field(default_factory=list)
    seed: int = 0
    altitude_m: float = 20.0

    @property
    def obstacles(self) -> list[Rect]:
        """Zones the DCU and OUs must stay out of (BZ and NFZ)."""
        return self.bz + self.nfz

    def to_dict(self) -> dict:
        return {
            "area": {"X": self.area.X, "Y": self.area.Y},
            "take_off": self.take_off.to_list(),
            "landing": self.landing.to_list(),
            "nfz": [r.to_list() for r in self.nfz],
            "bz": [r.to_list() for r in self.bz],
            "rz": [r.to_list() for r in self.rz],
            "ges": [
                {
                    "position": list(g.position),
                    "initial_data": g.initial_data,
                    "transmit_power": g.transmit_power,
                }
                for g in self.ges
            ],
            "ou_tracks": [tr.to_dict() for tr in self.ou_tracks],
            "seed": self.seed,
            "altitude_m": self.altitude_m,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        from .dynamics import OuTrack

        return cls(
            area=AreaSpec(float(d["area"]["X"]), float(d["area"]["Y"])),
            take_off=Rect.from_list(d["take_off"]),
            landing=Rect.from_list(d["landing"]),
            nfz=[Rect.from_list(r) for r in d["nfz"]],
            bz=[Rect.from_list(r) for r in d["bz"]],
            rz=[Rect.from_list(r) for r in d["rz"]],
            ges=[
                GeSpec(tuple(float(c) for c in g["position"]), float(g["initial_data"]),
                       float(g["transmit_power"]))
                for g in d["ges"]
            ],
            ou_tracks=[OuTrack.from_dict(t) for t in d.get("ou_tracks", [])],
            seed=int(d["seed"]),
            altitude_m=float(d["altitude_m"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        return cls.from_dict(json.loads(text))


def take_off_rect(area: AreaSpec, size: float) -> Rect:
    # top-left corner, flush
    return Rect(0.0, area.Y - size, size, size)


def landing_rect(area: AreaSpec, size: float) -> Rect:
    # bottom-right corner, flush
    return Rect(area.X - size, 0.0, size, size)


def _draw_count(rng: np.random.Generator, lo_hi) -> int:
    lo, hi = lo_hi
    return int(rng.integers(lo, hi + 1))


def _draw_zone(rng, cfg: ScenarioConfig, forbidden: Sequence[Rect]) -> Rect:
    lo, hi = cfg.zone_side
    for _ in range(MAX_REDRAWS):
        l = float(rng.uniform(lo, hi))
        w = float(rng.uniform(lo, hi))
        x = float(rng.uniform(0.0, cfg.area.X - l))
        y = float(rng.uniform(0.0, cfg.area.Y - w))
        r = Rect(x, y, l, w)
        if not any(r.intersects(f) for f in forbidden):
            return r
    raise SamplingExhausted("could not place a zone clear of the take-off/landing areas")


def _draw_ge(rng, cfg: ScenarioConfig, blocked: Sequence[Rect]) -> GeSpec:
    for _ in range(MAX_REDRAWS):
        p = (float(rng.uniform(0.0, cfg.area.X)), float(rng.uniform(0.0, cfg.area.Y)))
        if not any(r.contains(p) for r in blocked):
            dv = float(rng.uniform(*cfg.dv))
            return GeSpec(p, dv, cfg.tp_w)
    raise SamplingExhausted("could not place a GE outside every BZ/NFZ")


def sample_scenario(cfg: ScenarioConfig, t_max: int = 400, t_fly: float = 1.0) -> Scenario:
    """Draw a random world from ``cfg``; a pure function of ``cfg`` (seed included).

    OU tracks carry ``t_max + 1`` slots so the post-flight position of the last slot can
    still be checked against OU positions.
    """
    from .dynamics import generate_ou_tracks

    layout_ss, track_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    rng = np.random.default_rng(layout_ss)
    ta = take_off_rect(cfg.area, cfg.ta_size)
    la = landing_rect(cfg.area, cfg.ta_size)

    n_nfz = _draw_count(rng, cfg.n_nfz)
    n_bz = _draw_count(rng, cfg.n_bz)
    n_rz = _draw_count(rng, cfg.n_rz)
    nfz = [_draw_zone(rng, cfg, (ta, la)) for _ in range(n_nfz)]
    bz = [_draw_zone(rng, cfg, (ta, la)) for _ in range(n_bz)]
    rz = [_draw_zone(rng, cfg, (ta, la)) for _ in range(n_rz)]

    n_ge = _draw_count(rng, cfg.n_ge)
    ges = [_draw_ge(rng, cfg, bz + nfz) for _ in range(n_ge)]

    n_ou = _draw_count(rng, cfg.n_ou)
    tracks = generate_ou_tracks(
        cfg.area, bz + nfz, n_ou, t_max + 1, v_max=cfg.v_max, seed=track_ss,
        t_fly=t_fly, heading_period=cfg.ou_heading_period,
    )
    return Scenario(cfg.area, ta, la, nfz, bz, rz, ges, tracks, cfg.seed, cfg.altitude_m)


def with_seed(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    return replace(cfg, seed=int(seed))


def dist_point_rect(p, r: Rect) -> float:
    dx = max(r.x - p[0], 0.0, p[0] - r.x2)
    dy = max(r.y - p[1], 0.0, p[1] - r.y2)
    return math.hypot(dx, dy)


def dist_to_area_boundary(p, a: AreaSpec) -> float:
    if not a.contains(p):
        raise OutsideArea(f"point {tuple(p)} lies outside the {a.X}x{a.Y} area")
    return min(p[0], p[1], a.X - p[0], a.Y - p[1])


def min_dist_to_zones(p, zones: Sequence[Rect]) -> float:
    if not zones:
        return NO_ZONE
    return min(dist_point_rect(p, r) for r in zones)


def inside_any(p, zones: Sequence[Rect]) -> bool:
    return any(r.contains(p) for r in zones)
