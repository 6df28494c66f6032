"""Line-of-sight air-to-ground channel, GE selection and per-slot data collection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import DegenerateGeometry
from .world import GeSpec


@dataclass(frozen=True)
class ChannelParams:
    alpha: float = 0.018
    noise_w: float = 1e-6
    tau: float = 3.6

    def __post_init__(self):
        if not (self.alpha > 0 and self.noise_w > 0 and self.tau > 0):
            raise ValueError("channel parameters must be positive")

    def max_slant_range(self, tp_w: float) -> float:
        """Largest slant distance whose SNR still reaches ``tau``."""
        return tp_w * self.alpha / (self.noise_w * self.tau)


@dataclass
class GeRuntime:
    spec: GeSpec
    remaining_data: float

    @classmethod
    def fresh(cls, spec: GeSpec) -> "GeRuntime":
        return cls(spec, spec.initial_data)


@dataclass(frozen=True)
class CollectResult:
    ge_index: Optional[int]
    td: float
    snr: float
    rate: float


def slant_distance(dcu_xy, H: float, ge_xy) -> float:
    return math.sqrt((dcu_xy[0] - ge_xy[0]) ** 2 + (dcu_xy[1] - ge_xy[1]) ** 2 + H * H)


def channel_gain(dcu_xy, H: float, ge_xy, cp: ChannelParams) -> float:
    # free-space form: alpha over slant distance
    d = slant_distance(dcu_xy, H, ge_xy)
    if d == 0.0:
        raise DegenerateGeometry("DCU coincides with the GE")
    return cp.alpha / d


def snr(tp: float, gain: float, noise: float) -> float:
    return tp * gain / noise


def rate(snr_value: float) -> float:
    return math.log2(1.0 + snr_value)


def select_ge(dcu_xy, H: float, ges: Sequence[GeRuntime], cp: ChannelParams, rng) -> Optional[int]:
    """Index of the strongest GE that clears ``tau`` and still holds data; ties drawn with ``rng``."""
    best = -1.0
    cands: list[int] = []
    for i, g in enumerate(ges):
        if g.remaining_data <= 0.0:
            continue
        s = snr(g.spec.transmit_power, channel_gain(dcu_xy, H, g.spec.position, cp), cp.noise_w)
        if s < cp.tau:
            continue
        if s > best:
            best, cands = s, [i]
        elif s == best:
            cands.append(i)
    if not cands:
        return None
    if len(cands) == 1:
        return cands[0]
    return cands[int(rng.integers(len(cands)))]


def collect(ge: GeRuntime, snr_value: float, rate_value: float, t_hover: float,
            tau: float = 3.6, ge_index: Optional[int] = None) -> CollectResult:
    if snr_value < tau:
        return CollectResult(ge_index, 0.0, snr_value, rate_value)
    td = min(rate_value * t_hover, ge.remaining_data)
    ge.remaining_data -= td
    if ge.remaining_data < 0.0:
        ge.remaining_data = 0.0
    return CollectResult(ge_index, td, snr_value, rate_value)


def hover_collect(dcu_xy, H: float, ges: Sequence[GeRuntime], cp: ChannelParams, t_hover: float,
                  rng) -> CollectResult:
    """Select a GE at the hover position and drain it for one hover phase."""
    i = select_ge(dcu_xy, H, ges, cp, rng)
    if i is None:
        return CollectResult(None, 0.0, 0.0, 0.0)
    g = ges[i]
    s = snr(g.spec.transmit_power, channel_gain(dcu_xy, H, g.spec.position, cp), cp.noise_w)
    return collect(g, s, rate(s), t_hover, cp.tau, ge_index=i)
