"""Straight multi-lane road with randomized obstacles, one controllable lead
vehicle, and a chain of car-following vehicles behind it.

The uncertainty in each episode comes from obstacle count and placement.
Environment reward/cost here are evaluation-only signals: the training
pipeline never reads them (see trainer.Transition).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import (
    AvLimits,
    AvState,
    HvState,
    IdmParams,
    step_av,
    step_hv,
)

AV_RADIUS = 1.0


class EpisodeFinishedError(RuntimeError):
    """Raised when stepping an episode that already terminated."""


class ScenarioError(ValueError):
    """Raised for infeasible scenario configurations."""


@dataclass(frozen=True)
class ScenarioConfig:
    road_length: float = 800.0
    lane_count: int = 3
    lane_width: float = 3.5
    n_followers: int = 5
    initial_headway: float = 15.0
    obstacle_count_min: int = 6
    obstacle_count_max: int = 12
    obstacle_radius: float = 1.0
    obstacle_spacing: float = 30.0      # min longitudinal gap between obstacles
    spawn_protection: float = 50.0      # obstacle-free zone at the road start
    horizon: int = 1000
    ray_count: int = 24
    sensor_range: float = 50.0
    dt: float = 0.1
    idm: IdmParams = field(default_factory=IdmParams)
    av: AvLimits = field(default_factory=AvLimits)

    def __post_init__(self) -> None:
        if self.road_length <= 0 or self.lane_count < 2:
            raise ScenarioError("need positive road length and >= 2 lanes")
        if self.n_followers < 1 or self.horizon < 1:
            raise ScenarioError("need >= 1 follower and horizon >= 1")
        if self.obstacle_count_min > self.obstacle_count_max:
            raise ScenarioError("bad obstacle count range")

    @property
    def road_width(self) -> float:
        return self.lane_count * self.lane_width

    def lane_center(self, lane: int) -> float:
        return (lane + 0.5) * self.lane_width

    def lane_of(self, y: float) -> int:
        return int(min(self.lane_count - 1, max(0, y // self.lane_width)))

    @property
    def obs_dim(self) -> int:
        return 5 + 1 + self.lane_count + self.ray_count


@dataclass
class WorldState:
    av: AvState
    followers: list[HvState]
    obstacles: np.ndarray        # (M, 3): x, y, radius
    t: int = 0
    seed: int = 0
    done: bool = False

    def copy(self) -> "WorldState":
        return WorldState(av=replace(self.av),
                          followers=[replace(h) for h in self.followers],
                          obstacles=self.obstacles.copy(),
                          t=self.t, seed=self.seed, done=self.done)


@dataclass(frozen=True)
class StepInfo:
    eval_reward: float
    env_cost: int
    success: bool
    crash: bool
    off_road: bool
    done: bool


# evaluation-only reward shaping; never enters the replay buffer
EVAL_REWARD_PROGRESS = 1.0      # per meter of longitudinal progress
EVAL_REWARD_VELOCITY = 0.1      # per step at the speed cap
EVAL_REWARD_SUCCESS = 20.0


def _sample_obstacles(cfg: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    count = int(rng.integers(cfg.obstacle_count_min, cfg.obstacle_count_max + 1))
    if count == 0:
        return np.zeros((0, 3))
    lo = cfg.spawn_protection
    hi = cfg.road_length - 30.0
    usable = hi - lo
    if usable < (count - 1) * cfg.obstacle_spacing:
        raise ScenarioError("obstacles cannot fit on the road at the "
                            "configured spacing")
    # sorted-uniform positions with a guaranteed minimum spacing
    slack = usable - (count - 1) * cfg.obstacle_spacing
    offsets = np.sort(rng.uniform(0.0, slack, size=count))
    xs = lo + offsets + np.arange(count) * cfg.obstacle_spacing
    lanes = rng.integers(0, cfg.lane_count, size=count)
    ys = (lanes + 0.5) * cfg.lane_width + rng.uniform(-0.5, 0.5, size=count)
    radii = np.full(count, cfg.obstacle_radius)
    return np.column_stack([xs, ys, radii])


def reset(cfg: ScenarioConfig, seed: int) -> tuple[WorldState, np.ndarray]:
    """Deterministic episode start for the given seed."""
    rng = np.random.default_rng(seed)
    spawn_lane = cfg.lane_count // 2
    av = AvState(x=0.0, y=cfg.lane_center(spawn_lane), v=0.0)
    followers = [
        HvState(loc=-(i + 1) * cfg.initial_headway, v=0.0,
                d=cfg.initial_headway)
        for i in range(cfg.n_followers)
    ]
    obstacles = _sample_obstacles(cfg, rng)
    world = WorldState(av=av, followers=followers, obstacles=obstacles,
                       seed=seed)
    return world, observe(cfg, world)


def _ray_distances(cfg: ScenarioConfig, world: WorldState) -> np.ndarray:
    """Distances to the nearest circle along a forward arc of rays.

    Followers are ordinary ray-hittable circles, but they trail the lead
    vehicle, so in practice only obstacles are sensed.
    """
    av = world.av
    angles = av.heading + np.linspace(-0.5 * math.pi, 0.5 * math.pi,
                                      cfg.ray_count)
    dirs = np.column_stack([np.cos(angles), np.sin(angles)])   # (K, 2)
    circles = [world.obstacles[:, :3]] if len(world.obstacles) else []
    fol = np.array([[h.loc, av.y, AV_RADIUS] for h in world.followers])
    if len(fol):
        circles.append(fol)
    dists = np.full(cfg.ray_count, cfg.sensor_range)
    if not circles:
        return dists / cfg.sensor_range
    circ = np.vstack(circles)                                   # (M, 3)
    oc = circ[None, :, :2] - np.array([av.x, av.y])[None, None, :]  # (1,M,2)
    proj = (dirs[:, None, :] * oc).sum(axis=2)                 # (K, M)
    perp2 = (oc * oc).sum(axis=2) - proj * proj
    r2 = circ[None, :, 2] ** 2
    hit = (proj > 0) & (perp2 <= r2)
    t_hit = proj - np.sqrt(np.maximum(r2 - perp2, 0.0))
    t_hit = np.where(hit & (t_hit > 0), t_hit, cfg.sensor_range)
    return np.minimum(dists, t_hit.min(axis=1)) / cfg.sensor_range


def observe(cfg: ScenarioConfig, world: WorldState) -> np.ndarray:
    av = world.av
    lane = cfg.lane_of(av.y)
    lateral = (av.y - cfg.lane_center(lane)) / cfg.lane_width
    ego = np.array([
        np.clip(av.v / cfg.av.v_cap, -1.0, 1.0),
        np.clip(av.acc / cfg.av.a_accel_max, -1.0, 1.0),
        np.clip(lateral, -1.0, 1.0),
        np.clip(av.heading / math.pi, -1.0, 1.0),
        np.clip(av.steering / cfg.av.steer_max, -1.0, 1.0),
    ])
    one_hot = np.zeros(cfg.lane_count)
    one_hot[lane] = 1.0
    nav = np.concatenate([
        [np.clip((cfg.road_length - av.x) / cfg.road_length, 0.0, 1.0)],
        one_hot,
    ])
    return np.concatenate([ego, nav, _ray_distances(cfg, world)])


def _collides(cfg: ScenarioConfig, av: AvState, obstacles: np.ndarray,
              followers: list[HvState]) -> bool:
    if len(obstacles):
        d2 = (obstacles[:, 0] - av.x) ** 2 + (obstacles[:, 1] - av.y) ** 2
        if np.any(d2 <= (obstacles[:, 2] + AV_RADIUS) ** 2):
            return True
    # a follower reaching the lead vehicle is a rear-end contact
    return any(h.loc >= av.x for h in followers)


def step(cfg: ScenarioConfig, world: WorldState,
         action: tuple[float, float]) -> tuple[WorldState, np.ndarray, StepInfo]:
    """Advance the whole scene one tick; pure (the input world is unchanged)."""
    if world.done:
        raise EpisodeFinishedError("episode already finished")
    prev_x = world.av.x
    av = step_av(world.av, action, cfg.dt, cfg.av)

    hv_crash = False
    new_followers = []
    lead_loc, lead_v = world.av.x, world.av.v   # time-t leader state
    for hv in world.followers:
        try:
            stepped = step_hv(hv, lead_loc, lead_v, cfg.dt, cfg.idm)
        except ValueError:
            hv_crash = True
            stepped = replace(hv, v=0.0, acc=0.0)
        lead_loc, lead_v = hv.loc, hv.v
        new_followers.append(stepped)

    t = world.t + 1
    success = av.x >= cfg.road_length
    off_road = not (0.0 <= av.y <= cfg.road_width)
    crash = hv_crash or _collides(cfg, av, world.obstacles, new_followers)
    if success:
        crash = off_road = False
    done = success or crash or off_road or t >= cfg.horizon

    reward = (EVAL_REWARD_PROGRESS * (av.x - prev_x)
              + EVAL_REWARD_VELOCITY * (av.v / cfg.av.v_cap) * cfg.dt
              + (EVAL_REWARD_SUCCESS if success else 0.0))
    info = StepInfo(eval_reward=reward, env_cost=1 if crash else 0,
                    success=success, crash=crash, off_road=off_road, done=done)
    new_world = WorldState(av=av, followers=new_followers,
                           obstacles=world.obstacles, t=t, seed=world.seed,
                           done=done)
    return new_world, observe(cfg, new_world), info


def ground_truth_failure(cfg: ScenarioConfig, world: WorldState,
                         action: tuple[float, float]) -> int:
    """One-step lookahead: 1 iff the action leads to a crash/off-road state."""
    if world.done:
        return 0
    _, _, info = step(cfg, world.copy(), action)
    return 1 if (info.crash or info.off_road) else 0
