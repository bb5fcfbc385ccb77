"""Scripted mentor driver: a rule-based safe controller, a takeover trigger
with hysteresis, and empirical estimators for its per-step error rates."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .dynamics import idm_accel, step_av
from .env import AV_RADIUS, ScenarioConfig, WorldState, ground_truth_failure, reset, step

Action = tuple[float, float]

RELEASE_HOLD = {"dense": 5, "sparse": 20}
DENSITY_SIGMA = 0.3


@dataclass(frozen=True)
class ExpertConfig:
    ttc_trigger: float = 1.5            # s, constant-velocity projection
    edge_margin: float = 0.5            # m to the road edge, outward heading
    action_deviation_trigger: float = 0.6   # inf-norm gap to the expert action
    mode: str = "dense"

    def __post_init__(self) -> None:
        if min(self.ttc_trigger, self.edge_margin,
               self.action_deviation_trigger) <= 0:
            raise ValueError("all trigger thresholds must be positive")
        if self.mode not in RELEASE_HOLD:
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def release_hold(self) -> int:
        return RELEASE_HOLD[self.mode]


@dataclass
class HoldState:
    """Per-episode takeover hysteresis owned by the collection loop."""
    active: bool = False
    safe_streak: int = 0


@dataclass(frozen=True)
class ExpertStats:
    kind: str                   # "epsilon" or "kappa"
    rate: float
    events: int
    steps: int
    episodes: int
    ci_low: float
    ci_high: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError("rate must be a probability")


def wilson_interval(events: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    p = events / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials
                         + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _hazards_ahead(cfg: ScenarioConfig, world: WorldState, y: float,
                   heading: float = 0.0) -> list[tuple[float, float]]:
    """(gap, x) for obstacles ahead intersecting the corridor projected from
    lateral position y along the given heading. Sorted by gap."""
    out = []
    slope = math.tan(heading) if abs(heading) < 1.4 else math.copysign(5.0, heading)
    for ox, oy, r in world.obstacles:
        dx = ox - world.av.x
        if dx <= 0 or dx > cfg.sensor_range:
            continue
        y_at = y + slope * dx
        if abs(oy - y_at) < r + AV_RADIUS + 0.2:
            out.append((dx - r - AV_RADIUS, ox))
    out.sort()
    return out


def _lane_clear_distance(cfg: ScenarioConfig, world: WorldState,
                         lane: int) -> float:
    """Gap to the first obstacle ahead in the corridor of a lane's center."""
    hazards = _hazards_ahead(cfg, world, cfg.lane_center(lane))
    return hazards[0][0] if hazards else math.inf


LANE_CHANGE_LOOKAHEAD = 25.0    # m; blocked-lane threshold
LANE_CLEAR_REQUIRED = 40.0      # m a target lane must be clear for


def _target_lane(cfg: ScenarioConfig, world: WorldState) -> int:
    lane = cfg.lane_of(world.av.y)
    if _lane_clear_distance(cfg, world, lane) >= LANE_CHANGE_LOOKAHEAD:
        return lane
    best, best_clear = lane, -1.0
    for cand in (lane - 1, lane + 1):
        if not 0 <= cand < cfg.lane_count:
            continue
        clear = _lane_clear_distance(cfg, world, cand)
        if clear >= LANE_CLEAR_REQUIRED and clear > best_clear:
            best, best_clear = cand, clear
    return best


def expert_action(cfg: ScenarioConfig, world: WorldState,
                  ecfg: ExpertConfig = ExpertConfig()) -> Action:
    """Deterministic reference action: car-following against the nearest
    in-path hazard plus pure-pursuit tracking of the chosen lane center."""
    av = world.av
    idm = replace(cfg.idm, v0=min(cfg.idm.v0, cfg.av.v_cap))

    hazards = _hazards_ahead(cfg, world, av.y)
    if hazards and hazards[0][0] <= 0.1:
        accel = -cfg.av.a_brake_max
    elif hazards:
        # hazard treated as a stationary leader
        accel = idm_accel(hazards[0][0], av.v, av.v, idm)
    else:
        accel = idm.a_max * (1.0 - (av.v / idm.v0) ** idm.delta)
    throttle = accel / cfg.av.a_accel_max if accel >= 0 \
        else accel / cfg.av.a_brake_max
    throttle = min(1.0, max(-1.0, throttle))

    target = _target_lane(cfg, world)
    lookahead = max(5.0, av.v)
    alpha = math.atan2(cfg.lane_center(target) - av.y, lookahead) - av.heading
    wheel = math.atan2(2.0 * cfg.av.wheelbase * math.sin(alpha), lookahead)
    steer = min(1.0, max(-1.0, wheel / cfg.av.steer_max))
    return (steer, throttle)


def time_to_collision(cfg: ScenarioConfig, world: WorldState,
                      action: Action) -> float:
    """Constant-velocity projection along the post-action heading."""
    nxt = step_av(world.av, action, cfg.dt, cfg.av)
    if nxt.v * math.cos(nxt.heading) <= 1e-6:
        return math.inf
    hazards = _hazards_ahead(cfg, world, world.av.y, nxt.heading)
    if not hazards:
        return math.inf
    gap = hazards[0][0]
    return max(0.0, gap) / (nxt.v * math.cos(nxt.heading))


def _edge_danger(cfg: ScenarioConfig, world: WorldState, action: Action,
                 margin: float) -> bool:
    nxt = step_av(world.av, action, cfg.dt, cfg.av)
    if nxt.y < margin and nxt.heading < 0:
        return True
    return cfg.road_width - nxt.y < margin and nxt.heading > 0


def takeover_decision(cfg: ScenarioConfig, world: WorldState, a_av: Action,
                      ecfg: ExpertConfig, hold: HoldState) -> int:
    """1 while the mentor holds control; releases only after release_hold
    consecutive safe steps."""
    a_ref = expert_action(cfg, world, ecfg)
    deviation = max(abs(a_av[0] - a_ref[0]), abs(a_av[1] - a_ref[1]))
    danger = (time_to_collision(cfg, world, a_av) < ecfg.ttc_trigger
              or _edge_danger(cfg, world, a_av, ecfg.edge_margin)
              or deviation > ecfg.action_deviation_trigger)
    if danger:
        hold.active = True
        hold.safe_streak = 0
        return 1
    if hold.active:
        hold.safe_streak += 1
        if hold.safe_streak >= ecfg.release_hold:
            hold.active = False
            hold.safe_streak = 0
            return 0
        return 1
    return 0


def expert_density(cfg: ScenarioConfig, world: WorldState, action: Action,
                   ecfg: ExpertConfig = ExpertConfig(),
                   sigma: float = DENSITY_SIGMA) -> float:
    """Isotropic Gaussian density around the expert action, for the
    probability-based switch."""
    ref = expert_action(cfg, world, ecfg)
    d2 = (action[0] - ref[0]) ** 2 + (action[1] - ref[1]) ** 2
    return math.exp(-d2 / (2 * sigma * sigma)) / (2 * math.pi * sigma * sigma)


def estimate_epsilon(cfg: ScenarioConfig, ecfg: ExpertConfig,
                     n_episodes: int, seed: int) -> ExpertStats:
    """Per-step unsafe-action rate of the expert driving alone."""
    if n_episodes < 1:
        raise ValueError("need at least one episode")
    events = steps = 0
    for ep in range(n_episodes):
        world, _ = reset(cfg, seed + ep)
        while not world.done:
            a = expert_action(cfg, world, ecfg)
            events += ground_truth_failure(cfg, world, a)
            steps += 1
            world, _, _ = step(cfg, world, a)
    lo, hi = wilson_interval(events, steps)
    return ExpertStats(kind="epsilon", rate=events / steps, events=events,
                       steps=steps, episodes=n_episodes, ci_low=lo, ci_high=hi)


def estimate_kappa(cfg: ScenarioConfig,
                   agent_policy: Callable[[np.ndarray], Action],
                   ecfg: ExpertConfig, n_episodes: int,
                   seed: int) -> ExpertStats:
    """Per-step missed-takeover rate under the mixed policy: the agent
    proposes, the trigger decides, misses are unsafe agent actions that
    went through."""
    events = steps = 0
    for ep in range(n_episodes):
        world, obs = reset(cfg, seed + ep)
        hold = HoldState()
        while not world.done:
            a_av = agent_policy(obs)
            decision = takeover_decision(cfg, world, a_av, ecfg, hold)
            if not decision and ground_truth_failure(cfg, world, a_av):
                events += 1
            applied = expert_action(cfg, world, ecfg) if decision else a_av
            steps += 1
            world, obs, _ = step(cfg, world, applied)
    lo, hi = wilson_interval(events, steps)
    return ExpertStats(kind="kappa", rate=events / steps, events=events,
                       steps=steps, episodes=n_episodes, ci_low=lo, ci_high=hi)
