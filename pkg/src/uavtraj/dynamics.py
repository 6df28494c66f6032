"""Slot kinematics for the DCU and pre-generated random tracks for the other UAVs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SamplingExhausted
from .world import MAX_REDRAWS, AreaSpec, Rect, inside_any

OU_STEP_RETRIES = 1_000


@dataclass(frozen=True)
class SlotClock:
    dt: float = 2.0
    t_fly: float = 1.0
    t_hover: float = 1.0

    def __post_init__(self):
        if abs(self.t_fly + self.t_hover - self.dt) > 1e-12 or abs(self.t_fly - self.dt / 2) > 1e-12:
            raise ValueError("slot must split evenly into flight and hover phases")


@dataclass(frozen=True)
class UavState:
    position: tuple[float, float]
    velocity: tuple[float, float] = (0.0, 0.0)

    @property
    def speed(self) -> float:
        return math.hypot(*self.velocity)


@dataclass(frozen=True)
class ClampInfo:
    clipped: bool
    exited_area: bool
    pre_clamp_position: tuple[float, float]


def clip_speed(action, v_max: float) -> tuple[float, float]:
    """Rescale ``action`` onto the ``v_max`` disc, keeping its direction."""
    vx, vy = float(action[0]), float(action[1])
    s = math.hypot(vx, vy)
    if s > v_max:
        k = v_max / s
        vx, vy = vx * k, vy * k
    return vx, vy


def step_dcu(s: UavState, action, area: AreaSpec, v_max: float = 10.0,
             t_fly: float = 1.0) -> tuple[UavState, ClampInfo]:
    vx, vy = clip_speed(action, v_max)
    clipped = (vx, vy) != (float(action[0]), float(action[1]))
    px = s.position[0] + vx * t_fly
    py = s.position[1] + vy * t_fly
    cx = min(max(px, 0.0), area.X)
    cy = min(max(py, 0.0), area.Y)
    exited = (cx, cy) != (px, py)
    return UavState((cx, cy), (vx, vy)), ClampInfo(clipped, exited, (px, py))


@dataclass
class OuTrack:
    """Per-slot positions and velocities of one OU; slot ``t`` holds the state at slot start."""

    positions: np.ndarray
    velocities: np.ndarray

    def __len__(self):
        return len(self.positions)

    def to_dict(self) -> dict:
        return {
            "positions": [[round(float(x), 6), round(float(y), 6)] for x, y in self.positions],
            "velocities": [[round(float(x), 6), round(float(y), 6)] for x, y in self.velocities],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OuTrack":
        return cls(np.asarray(d["positions"], dtype=float).reshape(-1, 2),
                   np.asarray(d["velocities"], dtype=float).reshape(-1, 2))


def _trunc6(x: float) -> float:
    # toward zero, so rounding never increases speed
    return math.trunc(x * 1e6) / 1e6


def _random_velocity(rng, v_max: float, speed: float | None = None) -> tuple[float, float]:
    if speed is None:
        speed = float(rng.uniform(0.0, v_max))
    heading = float(rng.uniform(0.0, 2.0 * math.pi))
    return _trunc6(speed * math.cos(heading)), _trunc6(speed * math.sin(heading))


def _free(p, area: AreaSpec, blocked: Sequence[Rect]) -> bool:
    return area.contains(p) and not inside_any(p, blocked)


def generate_ou_tracks(area: AreaSpec, blocked: Sequence[Rect], n_ou: int, n_slots: int, *,
                       v_max: float = 10.0, seed=0, t_fly: float = 1.0,
                       heading_period: int = 20) -> list[OuTrack]:
    """Random-walk tracks that never touch a blocked zone nor leave the area.

    Speed and heading are redrawn every ``heading_period`` slots. A step that would
    land in a blocked zone or outside the area first reflects the offending velocity
    component(s); if that still fails, fresh headings are drawn.
    """
    if n_ou < 0 or n_slots < 1:
        raise ValueError("n_ou must be >= 0 and n_slots >= 1")
    rng = np.random.default_rng(seed)
    tracks = []
    for _ in range(n_ou):
        for _ in range(MAX_REDRAWS):
            p = (round(float(rng.uniform(0.0, area.X)), 6), round(float(rng.uniform(0.0, area.Y)), 6))
            if _free(p, area, blocked):
                break
        else:
            raise SamplingExhausted("no free start position for an OU")
        v = _random_velocity(rng, v_max)
        pos = np.empty((n_slots, 2))
        vel = np.empty((n_slots, 2))
        for t in range(n_slots):
            if t > 0 and t % heading_period == 0:
                v = _random_velocity(rng, v_max)
            if t == n_slots - 1:
                pos[t], vel[t] = p, v
                break
            nxt = (round(p[0] + v[0] * t_fly, 6), round(p[1] + v[1] * t_fly, 6))
            tries = 0
            while not _free(nxt, area, blocked):
                tries += 1
                if tries > OU_STEP_RETRIES:
                    raise SamplingExhausted("OU step retries exhausted")
                if tries == 1:
                    bad_x = not _free((p[0] + v[0] * t_fly, p[1]), area, blocked)
                    bad_y = not _free((p[0], p[1] + v[1] * t_fly), area, blocked)
                    if not (bad_x or bad_y):
                        bad_x = bad_y = True
                    v = (-v[0] if bad_x else v[0], -v[1] if bad_y else v[1])
                else:
                    v = _random_velocity(rng, v_max, speed=math.hypot(*v))
                nxt = (round(p[0] + v[0] * t_fly, 6), round(p[1] + v[1] * t_fly, 6))
            pos[t], vel[t] = p, v
            p = nxt
        tracks.append(OuTrack(pos, vel))
    return tracks


def visible_ous(dcu_position, tracks: Sequence[OuTrack], t: int, pr: float):
    """OUs within ``pr`` of the DCU at slot ``t``: list of ``(index, position, velocity, distance)``.

    Ordered nearest first, ties by OU index; the boundary distance ``pr`` is included.
    """
    out = []
    for j, tr in enumerate(tracks):
        p = tr.positions[t]
        d = math.hypot(p[0] - dcu_position[0], p[1] - dcu_position[1])
        if d <= pr:
            out.append((j, (float(p[0]), float(p[1])), (float(tr.velocities[t][0]),
                        float(tr.velocities[t][1])), d))
    out.sort(key=lambda e: (e[3], e[0]))
    return out
