"""Reward-free mentored actor-critic: replay of intervention transitions,
proxy twin critics with a preference term on intervened pairs, explicit and
implicit cost critics, entropy-temperature tuning, and the collection loop."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import env as envmod
from .disturbance import DisturbanceConfig, disturbance_cost, realized_accel
from .expert import ExpertConfig, HoldState, expert_action, takeover_decision
from .funcapprox import autodiff as ad
from .funcapprox.nets import (
    MlpParams,
    OptimizerState,
    PolicyParams,
    adam_step,
    collect_grads,
    forward,
    forward_np,
    init_mlp,
    init_policy,
    policy_sample,
    policy_sample_np,
    polyak,
)
from .intervention import action_switch, takeover_cost

Action = tuple[float, float]


@dataclass(frozen=True)
class Transition:
    """One mentored interaction. Carries intervention data and the two
    intervention costs; by design there is no environment reward and no
    environment cost in this record."""
    obs: np.ndarray
    a_av: np.ndarray
    a_human: Optional[np.ndarray]
    a_mix: np.ndarray
    indicator: int
    takeover_start: int
    c_ex: float                 # nonzero only at takeover onset
    c_im: float                 # nonzero only at a braking onset
    next_obs: np.ndarray
    done: bool

    def __post_init__(self) -> None:
        if bool(self.indicator) != (self.a_human is not None):
            raise ValueError("a_human present iff indicator is set")
        if self.c_ex > 0 and not self.takeover_start:
            raise ValueError("takeover cost outside a takeover onset")


@dataclass
class Batch:
    obs: np.ndarray
    a_av: np.ndarray
    a_human: np.ndarray         # zeros where no human action exists
    a_mix: np.ndarray
    indicator: np.ndarray       # (B, 1)
    c_ex: np.ndarray            # (B, 1)
    c_im: np.ndarray            # (B, 1)
    next_obs: np.ndarray
    done: np.ndarray            # (B, 1)

    def __len__(self) -> int:
        return len(self.obs)


class ReplayBuffer:
    """Uniform ring buffer."""

    def __init__(self, capacity: int = 100_000) -> None:
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._items)

    def add(self, t: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(t)
        else:
            self._items[self._next] = t
        self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        if not self._items:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, len(self._items), size=batch_size)
        items = [self._items[i] for i in idx]
        zeros = np.zeros_like(items[0].a_av)
        return Batch(
            obs=np.stack([t.obs for t in items]),
            a_av=np.stack([t.a_av for t in items]),
            a_human=np.stack([t.a_human if t.a_human is not None else zeros
                              for t in items]),
            a_mix=np.stack([t.a_mix for t in items]),
            indicator=np.array([[t.indicator] for t in items], dtype=float),
            c_ex=np.array([[t.c_ex] for t in items]),
            c_im=np.array([[t.c_im] for t in items]),
            next_obs=np.stack([t.next_obs for t in items]),
            done=np.array([[1.0 if t.done else 0.0] for t in items]),
        )


@dataclass(frozen=True)
class TrainerConfig:
    gamma: float = 0.99
    tau: float = 0.005
    lr: float = 1e-4
    batch_size: int = 1024
    steps_before_learning: int = 100
    steps_per_iteration: int = 100
    cql_temperature: float = 10.0
    target_entropy: float = 2.0
    psi: float = 1.0            # proxy value weight in the policy loss
    beta: float = 1.0           # explicit cost weight
    phi_w: float = 1.0          # implicit cost weight
    alpha_init: float = 10.0
    fixed_alpha: bool = False
    hidden: tuple[int, ...] = (256, 256)
    buffer_capacity: int = 100_000
    twin_critics: bool = True
    literal_half_td: bool = False   # halve inside the squared TD error
    # ablations
    constant_takeover_cost: bool = False
    no_intervention_min: bool = False
    no_implicit: bool = False
    literal_slowdown_sign: bool = False
    literal_braking_edge: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0, 1)")
        if min(self.psi, self.beta, self.phi_w, self.cql_temperature) < 0:
            raise ValueError("loss weights must be non-negative")
        if self.alpha_init <= 0:
            raise ValueError("alpha must stay positive")


@dataclass
class CriticSet:
    q1: MlpParams
    q2: MlpParams
    q1_target: MlpParams
    q2_target: MlpParams
    q_ex: MlpParams
    q_ex_target: MlpParams
    q_im: MlpParams
    q_im_target: MlpParams


def init_critics(obs_dim: int, action_dim: int, hidden: tuple[int, ...],
                 rng: np.random.Generator) -> CriticSet:
    sizes = [obs_dim + action_dim, *hidden, 1]

    def make() -> MlpParams:
        return init_mlp(sizes, rng)

    q1, q2, q_ex, q_im = make(), make(), make(), make()
    return CriticSet(q1=q1, q2=q2, q1_target=q1.copy(), q2_target=q2.copy(),
                     q_ex=q_ex, q_ex_target=q_ex.copy(),
                     q_im=q_im, q_im_target=q_im.copy())


def critic_value_np(critic: MlpParams, obs: np.ndarray,
                    action: np.ndarray) -> np.ndarray:
    return forward_np(critic, np.concatenate([obs, action], axis=1))


def proxy_value_target(batch: Batch, critics: CriticSet, policy: PolicyParams,
                       alpha: float, cfg: TrainerConfig,
                       rng: np.random.Generator) -> np.ndarray:
    """Reward-free bootstrap: y = gamma * E[min targets - alpha log pi]."""
    a_next, logp = policy_sample_np(policy, batch.next_obs, rng)
    q1 = critic_value_np(critics.q1_target, batch.next_obs, a_next)
    if cfg.twin_critics:
        q2 = critic_value_np(critics.q2_target, batch.next_obs, a_next)
        q_next = np.minimum(q1, q2)
    else:
        q_next = q1
    return cfg.gamma * (1.0 - batch.done) * (q_next - alpha * logp)


def proxy_value_loss(batch: Batch, critic: MlpParams, y: np.ndarray,
                     cfg: TrainerConfig) -> ad.Tensor:
    """Squared TD error on the applied action plus the preference term that
    pushes the critic to rank the mentor's action above the agent's on
    intervened samples."""
    obs_mix = ad.Tensor(np.concatenate([batch.obs, batch.a_mix], axis=1))
    q_mix = forward(critic, obs_mix, trainable=True)
    err = ad.Tensor(y) - q_mix
    if cfg.literal_half_td:
        td = ad.mean(ad.square(ad.Tensor(0.5) * err))
    else:
        td = ad.Tensor(0.5) * ad.mean(ad.square(err))

    # reuse the recorded leaves: run both preference passes through the
    # same trainable tensors
    leaves = critic._leaves  # type: ignore[attr-defined]
    q_av = _forward_with_leaves(critic, leaves,
                                np.concatenate([batch.obs, batch.a_av], axis=1))
    q_h = _forward_with_leaves(critic, leaves,
                               np.concatenate([batch.obs, batch.a_human], axis=1))
    pref = ad.mean(ad.Tensor(batch.indicator) * (q_av - q_h))
    loss = td + ad.Tensor(cfg.cql_temperature) * pref
    critic._leaves = leaves  # type: ignore[attr-defined]
    return loss


def _forward_with_leaves(params: MlpParams, leaves: list[ad.Tensor],
                         x: np.ndarray) -> ad.Tensor:
    h = ad.Tensor(x)
    act = {"relu": ad.relu, "tanh": ad.tanh}[params.activation]
    last = len(params.weights) - 1
    for i in range(len(params.weights)):
        h = ad.matmul(h, leaves[2 * i]) + leaves[2 * i + 1]
        if i != last:
            h = act(h)
    return h


def cost_critic_loss(batch: Batch, critic: MlpParams, target_net: MlpParams,
                     kind: str, policy: PolicyParams, cfg: TrainerConfig,
                     rng: np.random.Generator) -> ad.Tensor:
    """Squared TD error toward C + gamma E[Q_target(s', a'~pi)], trained on
    the agent's proposed action."""
    if kind not in ("EX", "IM"):
        raise ValueError("kind must be EX or IM")
    c = batch.c_ex if kind == "EX" else batch.c_im
    a_next, _ = policy_sample_np(policy, batch.next_obs, rng)
    q_next = critic_value_np(target_net, batch.next_obs, a_next)
    y = c + cfg.gamma * (1.0 - batch.done) * q_next
    q = forward(critic, np.concatenate([batch.obs, batch.a_av], axis=1),
                trainable=True)
    return ad.Tensor(0.5) * ad.mean(ad.square(ad.Tensor(y) - q))


def policy_loss(batch: Batch, critics: CriticSet, policy: PolicyParams,
                alpha: float, cfg: TrainerConfig, rng: np.random.Generator,
                noise: np.ndarray | None = None) -> tuple[ad.Tensor, np.ndarray]:
    """Reparameterized objective: value seeking, entropy regularized, cost
    penalized. Returns (loss, log-prob values) so the temperature update can
    reuse the same samples."""
    a_new, logp = policy_sample(policy, batch.obs, rng, trainable=True,
                                noise=noise)
    obs_t = ad.Tensor(batch.obs)
    sa = ad.concat(obs_t, a_new, axis=1)
    q1 = forward(critics.q1, sa)
    q = ad.minimum(q1, forward(critics.q2, sa)) if cfg.twin_critics else q1
    beta = 0.0 if cfg.no_intervention_min else cfg.beta
    phi_w = 0.0 if cfg.no_implicit else cfg.phi_w
    loss = (ad.Tensor(-cfg.psi) * q + ad.Tensor(alpha) * logp
            + ad.Tensor(beta) * forward(critics.q_ex, sa)
            + ad.Tensor(phi_w) * forward(critics.q_im, sa))
    return ad.mean(loss), logp.data.copy()


def alpha_update(log_alpha: np.ndarray, logp: np.ndarray, cfg: TrainerConfig,
                 opt: OptimizerState) -> float:
    """Move the temperature toward the entropy target; returns new alpha."""
    if cfg.fixed_alpha:
        return float(np.exp(log_alpha[0]))
    grad = -float(np.mean(logp + cfg.target_entropy))
    adam_step([log_alpha], [np.array([grad])], opt)
    return float(np.exp(log_alpha[0]))


@dataclass
class IterationMetrics:
    iteration: int
    env_steps: int
    takeover_rate: float
    takeover_cost_sum: float
    d_cost_sum: float
    disturbance_rate: float
    episodes: int
    successes: int
    alpha: float
    gradient_updates: int

    @property
    def train_success_rate(self) -> float:
        return self.successes / self.episodes if self.episodes else 0.0


@dataclass
class TrainerState:
    cfg: TrainerConfig
    scenario: envmod.ScenarioConfig
    expert_cfg: ExpertConfig
    policy: PolicyParams
    critics: CriticSet
    buffer: ReplayBuffer
    rng: np.random.Generator
    log_alpha: np.ndarray
    opt_q1: OptimizerState
    opt_q2: OptimizerState
    opt_q_ex: OptimizerState
    opt_q_im: OptimizerState
    opt_policy: OptimizerState
    opt_alpha: OptimizerState
    world: envmod.WorldState
    obs: np.ndarray
    hold: HoldState
    prev_indicator: int = 0
    prev_accel: float = 0.0
    env_steps: int = 0
    iteration: int = 0
    disturbance_cfg: DisturbanceConfig = field(default_factory=DisturbanceConfig)


def init_trainer(cfg: TrainerConfig, scenario: envmod.ScenarioConfig,
                 expert_cfg: ExpertConfig, seed: int) -> TrainerState:
    rng = np.random.default_rng(seed)
    obs_dim, action_dim = scenario.obs_dim, 2
    policy = init_policy(obs_dim, list(cfg.hidden), action_dim, rng)
    critics = init_critics(obs_dim, action_dim, cfg.hidden, rng)
    world, obs = envmod.reset(scenario, seed)
    dcfg = DisturbanceConfig(dt=scenario.dt, idm=scenario.idm, av=scenario.av,
                             literal_sign=cfg.literal_slowdown_sign,
                             literal_edge=cfg.literal_braking_edge)
    return TrainerState(
        cfg=cfg, scenario=scenario, expert_cfg=expert_cfg, policy=policy,
        critics=critics, buffer=ReplayBuffer(cfg.buffer_capacity), rng=rng,
        log_alpha=np.array([math.log(cfg.alpha_init)]),
        opt_q1=OptimizerState.for_params(critics.q1.flat(), cfg.lr),
        opt_q2=OptimizerState.for_params(critics.q2.flat(), cfg.lr),
        opt_q_ex=OptimizerState.for_params(critics.q_ex.flat(), cfg.lr),
        opt_q_im=OptimizerState.for_params(critics.q_im.flat(), cfg.lr),
        opt_policy=OptimizerState.for_params(policy.flat(), cfg.lr),
        opt_alpha=OptimizerState.for_params([np.array([0.0])], cfg.lr),
        world=world, obs=obs, hold=HoldState(),
        disturbance_cfg=dcfg)


def _update_once(state: TrainerState) -> None:
    cfg, critics = state.cfg, state.critics
    batch = state.buffer.sample(cfg.batch_size, state.rng)
    alpha = float(np.exp(state.log_alpha[0]))

    y = proxy_value_target(batch, critics, state.policy, alpha, cfg, state.rng)
    for critic, opt in ((critics.q1, state.opt_q1),
                        (critics.q2, state.opt_q2) if cfg.twin_critics else (None, None)):
        if critic is None:
            continue
        loss = proxy_value_loss(batch, critic, y, cfg)
        loss.backward()
        adam_step(critic.flat(), collect_grads(critic), opt)

    for critic, target, kind, opt in (
            (critics.q_ex, critics.q_ex_target, "EX", state.opt_q_ex),
            (critics.q_im, critics.q_im_target, "IM", state.opt_q_im)):
        loss = cost_critic_loss(batch, critic, target, kind, state.policy,
                                cfg, state.rng)
        loss.backward()
        adam_step(critic.flat(), collect_grads(critic), opt)

    loss, logp = policy_loss(batch, critics, state.policy, alpha, cfg,
                             state.rng)
    loss.backward()
    adam_step(state.policy.flat(), collect_grads(state.policy),
              state.opt_policy)
    alpha_update(state.log_alpha, logp, cfg, state.opt_alpha)

    polyak(critics.q1_target.flat(), critics.q1.flat(), cfg.tau)
    polyak(critics.q2_target.flat(), critics.q2.flat(), cfg.tau)
    polyak(critics.q_ex_target.flat(), critics.q_ex.flat(), cfg.tau)
    polyak(critics.q_im_target.flat(), critics.q_im.flat(), cfg.tau)


def collect_step(state: TrainerState) -> tuple[Transition, envmod.StepInfo]:
    """One mentored environment step: propose, let the trigger decide, apply
    the switch, charge onset costs, and record the transition."""
    cfg = state.cfg
    a_av_arr, _ = policy_sample_np(state.policy, state.obs, state.rng)
    a_av: Action = (float(a_av_arr[0, 0]), float(a_av_arr[0, 1]))

    signal = takeover_decision(state.scenario, state.world, a_av,
                               state.expert_cfg, state.hold)
    a_human = expert_action(state.scenario, state.world,
                            state.expert_cfg) if signal else None
    applied, record = action_switch(a_av, signal, a_human,
                                    prev_indicator=state.prev_indicator)

    c_ex = 0.0
    if record.takeover_start:
        c_ex = 1.0 if cfg.constant_takeover_cost \
            else takeover_cost(a_av, a_human)
    c_im = disturbance_cost(state.world.followers, state.world.av, applied,
                            state.prev_accel, state.disturbance_cfg)

    state.prev_accel = realized_accel(state.world.av, applied,
                                      state.disturbance_cfg)
    state.prev_indicator = record.indicator

    world, next_obs, info = envmod.step(state.scenario, state.world, applied)
    t = Transition(
        obs=state.obs, a_av=np.array(a_av),
        a_human=np.array(a_human) if a_human is not None else None,
        a_mix=np.array(applied), indicator=record.indicator,
        takeover_start=record.takeover_start, c_ex=c_ex, c_im=c_im,
        next_obs=next_obs, done=info.done)
    state.buffer.add(t)
    state.env_steps += 1

    if info.done:
        state.world, state.obs = envmod.reset(
            state.scenario, state.world.seed + 1)
        state.hold = HoldState()
        state.prev_indicator = 0
        state.prev_accel = 0.0
    else:
        state.world, state.obs = world, next_obs
    return t, info


def train_iteration(state: TrainerState) -> IterationMetrics:
    """Collect steps_per_iteration mentored steps, one gradient pass each
    once past warmup."""
    cfg = state.cfg
    takeovers = 0
    c_ex_sum = c_im_sum = 0.0
    disturbances = episodes = successes = updates = 0
    for _ in range(cfg.steps_per_iteration):
        t, info = collect_step(state)
        takeovers += t.indicator
        c_ex_sum += t.c_ex
        c_im_sum += t.c_im
        disturbances += 1 if t.c_im > 0 else 0
        if info.done:
            episodes += 1
            successes += 1 if info.success else 0
        if state.env_steps > cfg.steps_before_learning and len(state.buffer):
            _update_once(state)
            updates += 1
    state.iteration += 1
    return IterationMetrics(
        iteration=state.iteration, env_steps=state.env_steps,
        takeover_rate=takeovers / cfg.steps_per_iteration,
        takeover_cost_sum=c_ex_sum, d_cost_sum=c_im_sum,
        disturbance_rate=disturbances / cfg.steps_per_iteration,
        episodes=episodes, successes=successes,
        alpha=float(np.exp(state.log_alpha[0])), gradient_updates=updates)
