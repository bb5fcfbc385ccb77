"""Platoon disturbance machinery: current and predicted average follower
velocity under a frozen lead-vehicle action, and the edge-triggered
disturbance cost charged at braking onset.

Two printed-model variants are kept behind flags for auditability:
``literal_sign`` charges 1 - exp(-(v_pred - v_cur)) without rectification,
and ``literal_edge`` fires the trigger on the accel >= threshold crossing
instead of braking onset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .dynamics import AvLimits, AvState, HvState, IdmParams, step_av, step_hv


@dataclass(frozen=True)
class DisturbanceConfig:
    persist_horizon: float = 10.0       # s the lead action is held
    accel_threshold: float = -5.0       # m/s^2; braking-onset trigger level
    dt: float = 0.1
    idm: IdmParams = field(default_factory=IdmParams)
    av: AvLimits = field(default_factory=AvLimits)
    literal_sign: bool = False
    literal_edge: bool = False

    def __post_init__(self) -> None:
        if self.persist_horizon <= 0 or self.dt <= 0:
            raise ValueError("persist_horizon and dt must be positive")
        steps = self.persist_horizon / self.dt
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError("persist_horizon must be a multiple of dt")

    @property
    def rollout_steps(self) -> int:
        return round(self.persist_horizon / self.dt)


def _chained_update(followers: list[HvState], lead_loc: float, lead_v: float,
                    dt: float, idm: IdmParams) -> tuple[list[HvState], bool]:
    """One synchronized platoon update; returns (new states, collided)."""
    out = []
    for hv in followers:
        try:
            stepped = step_hv(hv, lead_loc, lead_v, dt, idm)
        except ValueError:
            return [], True
        lead_loc, lead_v = hv.loc, hv.v
        out.append(stepped)
    return out, False


def current_avg_velocity(followers: list[HvState], av: AvState,
                         cfg: DisturbanceConfig = DisturbanceConfig()) -> float:
    """Mean follower velocity after one car-following response to the lead
    vehicle's present state."""
    if not followers:
        raise ValueError("empty platoon")
    updated, collided = _chained_update(followers, av.x, av.v, cfg.dt, cfg.idm)
    if collided:
        return 0.0
    return sum(h.v for h in updated) / len(updated)


def predict_avg_velocity(followers: list[HvState], av: AvState,
                         action: tuple[float, float],
                         cfg: DisturbanceConfig = DisturbanceConfig()) -> float:
    """Time-and-vehicle mean follower velocity over the persistence horizon
    with the lead action held fixed. Pure: inputs are not mutated.

    A collision inside the rollout truncates it, with velocities counted
    as zero from that sample onward (the prediction is advisory only).
    """
    if not followers:
        raise ValueError("empty platoon")
    platoon = [replace(h) for h in followers]
    lead = replace(av)
    n = cfg.rollout_steps
    total = 0.0
    count = 0
    frozen = False
    for _ in range(n):
        if not frozen:
            lead_prev_loc, lead_prev_v = lead.x, lead.v
            lead = step_av(lead, action, cfg.dt, cfg.av)
            platoon, collided = _chained_update(platoon, lead_prev_loc,
                                                lead_prev_v, cfg.dt, cfg.idm)
            frozen = collided
        total += 0.0 if frozen else sum(h.v for h in platoon)
        count += 1
    return total / (count * len(followers))


def realized_accel(av: AvState, action: tuple[float, float],
                   cfg: DisturbanceConfig = DisturbanceConfig()) -> float:
    """Acceleration the lead vehicle actually realizes for this action."""
    return step_av(av, action, cfg.dt, cfg.av).acc


def braking_edge(accel: float, prev_accel: float,
                 cfg: DisturbanceConfig = DisturbanceConfig()) -> bool:
    lam = cfg.accel_threshold
    if cfg.literal_edge:
        return accel >= lam and prev_accel < lam
    return accel <= lam and prev_accel > lam


def disturbance_cost(followers: list[HvState], av: AvState,
                     action: tuple[float, float], prev_accel: float,
                     cfg: DisturbanceConfig = DisturbanceConfig()) -> float:
    """Cost for a predicted platoon slowdown, charged once per braking onset."""
    if not braking_edge(realized_accel(av, action, cfg), prev_accel, cfg):
        return 0.0
    v_cur = current_avg_velocity(followers, av, cfg)
    v_pred = predict_avg_velocity(followers, av, action, cfg)
    if cfg.literal_sign:
        return 1.0 - math.exp(-(v_pred - v_cur))
    slowdown = max(0.0, v_cur - v_pred)
    return 1.0 - math.exp(-slowdown)
