"""Live-mentor plumbing: the wire protocol between simulator and cockpit,
the human input link with watchdog and hold-last semantics, and a collection
loop that feeds human takeovers through the same switch as the scripted
expert."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from . import env as envmod
from .disturbance import DisturbanceConfig, disturbance_cost, realized_accel
from .funcapprox.nets import PolicyParams, policy_sample_np
from .intervention import action_switch, takeover_cost
from .trainer import ReplayBuffer, Transition

SCHEMA_VERSION = 1
HEARTBEAT_INTERVAL = 1.0    # s, client cadence
WATCHDOG_TIMEOUT = 2.0      # s without any client message pauses the sim
HOLD_LAST_WINDOW = 0.25     # s; the last human action is held across control gaps

Action = tuple[float, float]


class VehicleDto(BaseModel):
    x: float
    y: float
    heading: float
    v: float
    acc: float


class FollowerDto(BaseModel):
    loc: float
    v: float
    acc: float


class ObstacleDto(BaseModel):
    x: float
    y: float
    radius: float


class FlagsDto(BaseModel):
    takeover: bool
    disturbance: bool


class HudDto(BaseModel):
    velocity: float
    total_takeover_cost: float
    total_d_cost: float
    episode: int
    success_rate: float


class FrameMessage(BaseModel):
    schema_version: int = SCHEMA_VERSION
    t: int
    av: VehicleDto
    followers: list[FollowerDto]
    obstacles: list[ObstacleDto]
    flags: FlagsDto
    hud: HudDto


class ControlMessage(BaseModel):
    kind: str = Field(pattern="^(takeover_start|control|takeover_end|heartbeat)$")
    steer: Optional[float] = Field(default=None, ge=-1.0, le=1.0)
    throttle: Optional[float] = Field(default=None, ge=-1.0, le=1.0)
    ts: float = 0.0


class ProtocolError(ValueError):
    """Malformed wire data."""


def encode_frame(world: envmod.WorldState, flags: FlagsDto,
                 hud: HudDto) -> bytes:
    """Length-prefixed JSON frame with a stable field order."""
    frame = FrameMessage(
        t=world.t,
        av=VehicleDto(x=world.av.x, y=world.av.y, heading=world.av.heading,
                      v=world.av.v, acc=world.av.acc),
        followers=[FollowerDto(loc=h.loc, v=h.v, acc=h.acc)
                   for h in world.followers],
        obstacles=[ObstacleDto(x=float(o[0]), y=float(o[1]),
                               radius=float(o[2]))
                   for o in world.obstacles],
        flags=flags, hud=hud)
    return encode_message(frame)


def encode_message(msg: BaseModel) -> bytes:
    body = msg.model_dump_json().encode()
    return len(body).to_bytes(4, "big") + body


def decode_frame(data: bytes) -> FrameMessage:
    return FrameMessage.model_validate(_decode_body(data))


def decode_control(data: bytes) -> ControlMessage:
    return ControlMessage.model_validate(_decode_body(data))


def _decode_body(data: bytes) -> dict:
    if len(data) < 4:
        raise ProtocolError("short frame")
    n = int.from_bytes(data[:4], "big")
    if len(data) != 4 + n:
        raise ProtocolError(f"length prefix {n} != body {len(data) - 4}")
    try:
        return json.loads(data[4:].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(str(exc)) from exc


@dataclass
class HumanLink:
    """State of the remote mentor as seen by the collection loop.

    Any message refreshes the watchdog. While a takeover is latched, the
    last control action is held until the next control message arrives.
    """
    takeover: bool = False
    last_action: Optional[Action] = None
    last_seen: float = float("-inf")
    malformed: int = 0

    def handle(self, msg: ControlMessage, now: float) -> None:
        self.last_seen = now
        if msg.kind == "takeover_start":
            self.takeover = True
        elif msg.kind == "takeover_end":
            self.takeover = False
            self.last_action = None
        elif msg.kind == "control":
            if not self.takeover:
                self.malformed += 1   # control outside a takeover bracket
                return
            if msg.steer is None or msg.throttle is None:
                self.malformed += 1
                return
            self.last_action = (msg.steer, msg.throttle)

    def handle_bytes(self, data: bytes, now: float) -> None:
        try:
            self.handle(decode_control(data), now)
        except (ProtocolError, ValueError):
            self.malformed += 1

    def paused(self, now: float) -> bool:
        return now - self.last_seen > WATCHDOG_TIMEOUT

    def human_action(self) -> Optional[Action]:
        return self.last_action if self.takeover else None


@dataclass
class LiveCollector:
    """Collection loop for a human mentor: identical switch semantics to the
    scripted path; pausing freezes the buffer."""
    scenario: envmod.ScenarioConfig
    policy: PolicyParams
    buffer: ReplayBuffer
    link: HumanLink
    rng: np.random.Generator
    dcfg: DisturbanceConfig = field(default_factory=DisturbanceConfig)
    world: Optional[envmod.WorldState] = None
    obs: Optional[np.ndarray] = None
    prev_indicator: int = 0
    prev_accel: float = 0.0
    seed: int = 0
    total_takeover_cost: float = 0.0
    total_d_cost: float = 0.0
    episode: int = 0
    successes: int = 0
    last_flags: FlagsDto = field(
        default_factory=lambda: FlagsDto(takeover=False, disturbance=False))

    def __post_init__(self) -> None:
        if self.world is None:
            self.world, self.obs = envmod.reset(self.scenario, self.seed)

    def step(self, now: float) -> Optional[Transition]:
        """One simulation step, or None while paused. A takeover without a
        usable human action also pauses (the mentor latched but has sent no
        control yet)."""
        if self.link.paused(now):
            return None
        signal = 1 if self.link.takeover else 0
        a_human = self.link.human_action()
        if signal and a_human is None:
            return None

        a_arr, _ = policy_sample_np(self.policy, self.obs, self.rng)
        a_av: Action = (float(a_arr[0, 0]), float(a_arr[0, 1]))
        applied, record = action_switch(a_av, signal, a_human,
                                        prev_indicator=self.prev_indicator)
        c_ex = takeover_cost(a_av, a_human) if record.takeover_start else 0.0
        c_im = disturbance_cost(self.world.followers, self.world.av, applied,
                                self.prev_accel, self.dcfg)
        self.prev_accel = realized_accel(self.world.av, applied, self.dcfg)
        self.prev_indicator = record.indicator
        self.total_takeover_cost += c_ex
        self.total_d_cost += c_im

        world, next_obs, info = envmod.step(self.scenario, self.world, applied)
        t = Transition(obs=self.obs, a_av=np.array(a_av),
                       a_human=np.array(a_human) if signal else None,
                       a_mix=np.array(applied), indicator=record.indicator,
                       takeover_start=record.takeover_start, c_ex=c_ex,
                       c_im=c_im, next_obs=next_obs, done=info.done)
        self.buffer.add(t)
        self.last_flags = FlagsDto(takeover=bool(record.indicator),
                                   disturbance=c_im > 0)
        if info.done:
            self.episode += 1
            self.successes += 1 if info.success else 0
            self.seed += 1
            self.world, self.obs = envmod.reset(self.scenario, self.seed)
            self.prev_indicator = 0
            self.prev_accel = 0.0
        else:
            self.world, self.obs = world, next_obs
        return t

    def frame(self) -> bytes:
        hud = HudDto(velocity=self.world.av.v,
                     total_takeover_cost=self.total_takeover_cost,
                     total_d_cost=self.total_d_cost,
                     episode=self.episode,
                     success_rate=(self.successes / self.episode
                                   if self.episode else 0.0))
        return encode_frame(self.world, self.last_flags, hud)


def read_frame_log(path: str) -> list[FrameMessage]:
    """JSONL episode log for the replay viewer."""
    frames = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                frames.append(FrameMessage.model_validate_json(line))
            except ValueError as exc:
                raise ProtocolError(f"corrupt log line: {exc}") from exc
    if not frames:
        raise ProtocolError("empty frame log")
    return frames


def first_takeover_index(frames: list[FrameMessage]) -> Optional[int]:
    for i, f in enumerate(frames):
        if f.flags.takeover:
            return i
    return None
