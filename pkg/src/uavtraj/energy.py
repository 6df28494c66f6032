"""Rotary-wing propulsion energy per slot phase."""

from __future__ import annotations

import math
from dataclasses import dataclass

# Hand-worked values under the default RotorParams, joules for a 1 s phase. The test suite
# recomputes them with a separate calculator; production code never reads these.
REFERENCE_FLY_J = {0.0: 79.86, 10.0: 90.76}
REFERENCE_HOVER_J = 88.62
REFERENCE_TOLERANCE_J = 0.05


@dataclass(frozen=True)
class RotorParams:
    profile_drag: float = 0.012        # lambda
    air_density: float = 1.225         # rho, kg/m^3
    solidity: float = 0.05             # eta (= s)
    disc_area: float = 0.503           # A_r, m^2
    blade_angular_velocity: float = 300.0
    rotor_radius: float = 0.4
    fuselage_drag: float = 0.6         # d0
    tip_speed: float = 120.0           # U_tip, m/s
    induced_correction: float = 0.1    # incremental correction factor
    weight: float = 20.0               # N
    hover_induced_velocity: float = 4.03  # v0, m/s

    def __post_init__(self):
        for k, v in self.__dict__.items():
            if not v > 0:
                raise ValueError(f"rotor parameter {k} must be positive, got {v}")

    @property
    def blade_profile_power(self) -> float:
        return (self.profile_drag / 8.0 * self.air_density * self.solidity * self.disc_area
                * self.blade_angular_velocity ** 3 * self.rotor_radius ** 3)

    @property
    def induced_hover_power(self) -> float:
        return (1.0 + self.induced_correction) * self.weight ** 1.5 / math.sqrt(
            2.0 * self.air_density * self.disc_area)


def induced_power(v: float, rp: RotorParams) -> float:
    """Standard forward-flight induced power; equals ``induced_hover_power`` at ``v = 0``."""
    v0 = rp.hover_induced_velocity
    k = math.sqrt(1.0 + v ** 4 / (4.0 * v0 ** 4)) - v ** 2 / (2.0 * v0 ** 2)
    return rp.induced_hover_power * math.sqrt(k)


def fly_power(v: float, rp: RotorParams, with_induced: bool = False) -> float:
    p = (rp.blade_profile_power * (1.0 + 3.0 * v * v / rp.tip_speed ** 2)
         + 0.5 * rp.fuselage_drag * rp.air_density * rp.solidity * rp.disc_area * v ** 3)
    if with_induced:
        p += induced_power(v, rp)
    return p


def fly_energy(v: float, t_fly: float, rp: RotorParams, with_induced: bool = False) -> float:
    return fly_power(v, rp, with_induced) * t_fly


def hover_energy(t_hover: float, rp: RotorParams, as_printed: bool = False) -> float:
    """Energy spent hovering in place for ``t_hover`` seconds.

    ``as_printed`` evaluates the literal published expression at zero velocity, which
    drops the ``sqrt(2 rho A_r)`` divisor from the leading term.
    """
    if as_printed:
        v, v0 = 0.0, rp.hover_induced_velocity
        p = ((1.0 + rp.induced_correction) * rp.weight ** 1.5 * math.sqrt(1.0 + v ** 4 / (4 * v0 ** 4))
             - (v ** 2 / (2.0 * v0)) / math.sqrt(2.0 * rp.air_density * rp.disc_area))
        return p * t_hover
    return rp.induced_hover_power * t_hover


@dataclass
class EnergyLedger:
    total: float = 1e6
    limit: float = 8e5
    consumed: float = 0.0

    @property
    def remaining(self) -> float:
        return self.total - self.consumed

    @property
    def over_limit(self) -> bool:
        return self.consumed > self.limit

    def charge(self, e_fly: float, e_hover: float) -> tuple[float, bool]:
        if e_fly < 0 or e_hover < 0:
            raise ValueError("energy charges must be non-negative")
        self.consumed += e_fly + e_hover
        return self.remaining, self.over_limit


def min_return_energy(d_to_la: float, rp: RotorParams, v_max: float = 10.0,
                      with_induced: bool = False) -> float:
    """Energy to cover ``d_to_la`` metres flying at ``v_max``."""
    return fly_energy(v_max, 1.0, rp, with_induced) * d_to_la / v_max
