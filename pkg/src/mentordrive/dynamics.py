"""Longitudinal car-following dynamics and the lead vehicle's kinematics.

Sign convention: every operation here takes the *closing rate*
(v_follower - v_leader). A positive closing rate means the follower is
gaining on its leader and the desired gap grows accordingly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field


class CollisionError(ValueError):
    """Raised when a follower's gap to its leader is non-positive."""


class NoEquilibriumError(ValueError):
    """Raised when no finite equilibrium gap exists for the requested speed."""


@dataclass(frozen=True)
class IdmParams:
    """Car-following parameters (desk-scale defaults)."""

    a_max: float = 4.0          # maximum acceleration, m/s^2
    b: float = 4.0              # comfortable deceleration magnitude, m/s^2
    s0: float = 5.0             # minimum gap, m
    t_headway: float = 1.0      # safe time headway, s
    v0: float = 15.0            # desired speed, m/s
    delta: float = 4.0          # acceleration exponent

    def __post_init__(self) -> None:
        if self.a_max <= 0 or self.b <= 0 or self.s0 <= 0 or self.v0 <= 0:
            raise ValueError("a_max, b, s0 and v0 must all be positive")
        if self.t_headway < 0 or self.delta <= 0:
            raise ValueError("t_headway must be >= 0 and delta > 0")


@dataclass
class HvState:
    """One follower: arc-length position, speed, last acceleration, headway."""

    loc: float
    v: float
    acc: float = 0.0
    d: float = math.inf


@dataclass(frozen=True)
class AvLimits:
    """Actuator limits for the lead vehicle (not follower physics)."""

    a_accel_max: float = 8.0    # m/s^2 at full throttle
    a_brake_max: float = 8.0    # m/s^2 magnitude at full brake
    steer_max: float = 0.5      # front-wheel angle, rad
    wheelbase: float = 2.5      # m
    v_cap: float = 11.11        # m/s (~40 km/h)


@dataclass
class AvState:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    v: float = 0.0
    acc: float = 0.0
    steering: float = 0.0


@dataclass(frozen=True)
class EquilibriumPoint:
    eq_velocity: float
    eq_gap: float


def idm_accel(gap: float, v_follower: float, approach_rate: float,
              params: IdmParams = IdmParams()) -> float:
    """Follower acceleration from gap, own speed, and closing rate.

    ``approach_rate`` is v_follower - v_leader (positive when closing).
    """
    if gap <= 0:
        raise CollisionError(f"non-positive gap {gap}")
    if v_follower < 0:
        raise ValueError("follower speed must be non-negative")
    s_star = params.s0 + v_follower * params.t_headway + (
        v_follower * approach_rate / (2.0 * math.sqrt(params.a_max * params.b)))
    s_star = max(s_star, params.s0)
    return params.a_max * (1.0 - (v_follower / params.v0) ** params.delta
                           - (s_star / gap) ** 2)


def equilibrium_gap(v: float, params: IdmParams = IdmParams()) -> float:
    """Gap at which a follower holds speed ``v`` behind a leader at ``v``.

    Solved in closed form: zero acceleration at zero closing rate gives
    (s*/d)^2 = 1 - (v/v0)^delta with s* = s0 + v*T.
    """
    if v <= 0:
        raise ValueError("v must be positive")
    if v >= params.v0:
        raise NoEquilibriumError(f"no finite equilibrium gap at v={v} >= v0={params.v0}")
    s_star = params.s0 + v * params.t_headway
    return s_star / math.sqrt(1.0 - (v / params.v0) ** params.delta)


def equilibrium_point(v: float, params: IdmParams = IdmParams()) -> EquilibriumPoint:
    return EquilibriumPoint(eq_velocity=v, eq_gap=equilibrium_gap(v, params))


def deviation(hv: HvState, eq: EquilibriumPoint) -> tuple[float, float]:
    """Gap and speed offsets from an equilibrium operating point."""
    return hv.d - eq.eq_gap, hv.v - eq.eq_velocity


def step_hv(hv: HvState, leader_loc: float, leader_v: float, dt: float,
            params: IdmParams = IdmParams()) -> HvState:
    """Advance one follower by a semi-implicit Euler step (v first, then loc)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    gap = leader_loc - hv.loc
    acc = idm_accel(gap, hv.v, hv.v - leader_v, params)
    v_new = max(0.0, hv.v + dt * acc)
    loc_new = hv.loc + dt * v_new
    return HvState(loc=loc_new, v=v_new, acc=acc, d=leader_loc - loc_new)


def throttle_to_accel(throttle: float, limits: AvLimits) -> float:
    """Map a normalized throttle/brake command to acceleration."""
    t = min(1.0, max(-1.0, throttle))
    return t * (limits.a_accel_max if t >= 0 else limits.a_brake_max)


def step_av(av: AvState, action: tuple[float, float], dt: float,
            limits: AvLimits = AvLimits()) -> AvState:
    """Kinematic-bicycle step for the lead vehicle.

    Action components are clamped to [-1, 1]; speed is clamped to
    [0, v_cap]. ``acc`` in the returned state is the realized dv/dt, so
    braking at standstill reports zero.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    steer_cmd = min(1.0, max(-1.0, action[0]))
    wheel_angle = steer_cmd * limits.steer_max
    accel = throttle_to_accel(action[1], limits)

    v_new = min(limits.v_cap, max(0.0, av.v + dt * accel))
    realized_acc = (v_new - av.v) / dt
    heading_new = av.heading + dt * (v_new / limits.wheelbase) * math.tan(wheel_angle)
    x_new = av.x + dt * v_new * math.cos(heading_new)
    y_new = av.y + dt * v_new * math.sin(heading_new)
    return AvState(x=x_new, y=y_new, heading=heading_new, v=v_new,
                   acc=realized_acc, steering=wheel_angle)
