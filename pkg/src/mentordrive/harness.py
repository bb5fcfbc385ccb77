"""Operational shell: run configuration, the training and evaluation
runners, metrics CSV, checkpoints, and the platoon trace export."""
from __future__ import annotations

import csv
import dataclasses
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from . import env as envmod
from .disturbance import DisturbanceConfig, braking_edge, realized_accel
from .dynamics import AvLimits, IdmParams
from .expert import ExpertConfig
from .funcapprox.nets import (
    PolicyParams,
    config_hash,
    init_policy,
    load_checkpoint,
    policy_mean_action,
    save_checkpoint,
)
from .trainer import TrainerConfig, init_trainer, train_iteration

EVAL_SEED_BASE = 1_000_000      # keeps held-out seeds disjoint from training

METRICS_COLUMNS = ["iter", "env_steps", "takeover_rate", "takeover_cost",
                   "d_cost", "disturbance_rate", "train_success_rate",
                   "eval_success_rate", "eval_return",
                   "eval_safety_violation", "alpha"]


class ConfigError(ValueError):
    """Bad run configuration file."""


@dataclass(frozen=True)
class RunConfig:
    scenario: envmod.ScenarioConfig = field(default_factory=envmod.ScenarioConfig)
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    expert: ExpertConfig = field(default_factory=ExpertConfig)
    disturbance: DisturbanceConfig = field(default_factory=DisturbanceConfig)
    total_env_steps: int = 30_000
    eval_every: int = 50            # iterations between held-out evaluations
    eval_episodes: int = 20
    mode: str = "scripted"

    def __post_init__(self) -> None:
        if self.total_env_steps < 1 or self.eval_every < 1:
            raise ConfigError("step counts must be positive")
        if self.mode not in ("scripted", "live"):
            raise ConfigError(f"unknown mode {self.mode!r}")

    def hash(self) -> str:
        return config_hash(dataclasses.asdict(self))


def _build(cls, data: dict, path: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {path}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad values in {path}: {exc}") from exc


_NESTED = {
    "scenario": (envmod.ScenarioConfig, {"idm": IdmParams, "av": AvLimits}),
    "trainer": (TrainerConfig, {}),
    "expert": (ExpertConfig, {}),
    "disturbance": (DisturbanceConfig, {"idm": IdmParams, "av": AvLimits}),
}


def load_run_config(path: str) -> RunConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    kwargs = {}
    for key, value in raw.items():
        if key in _NESTED:
            cls, subtypes = _NESTED[key]
            sub = dict(value or {})
            for name, subcls in subtypes.items():
                if name in sub:
                    sub[name] = _build(subcls, sub[name], f"{key}.{name}")
            for k in ("hidden",):
                if k in sub and isinstance(sub[k], list):
                    sub[k] = tuple(sub[k])
            kwargs[key] = _build(cls, sub, key)
        elif key in ("total_env_steps", "eval_every", "eval_episodes", "mode"):
            kwargs[key] = value
        else:
            raise ConfigError(f"unknown top-level key {key!r}")
    return RunConfig(**kwargs)


@dataclass(frozen=True)
class EvalReport:
    success_rate: float
    return_mean: float
    return_sd: float
    safety_violation: float     # mean per-episode environment cost
    disturbance_rate: float     # braking-onset events per step
    episodes: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.success_rate <= 1.0:
            raise ValueError("success_rate must be a probability")
        if not 0.0 <= self.disturbance_rate <= 1.0:
            raise ValueError("disturbance_rate must be a probability")


# -- checkpoints --------------------------------------------------------------

def policy_to_arrays(policy: PolicyParams) -> dict[str, np.ndarray]:
    out = {}
    for i, (w, b) in enumerate(zip(policy.trunk.weights, policy.trunk.biases)):
        out[f"trunk_w{i}"] = w
        out[f"trunk_b{i}"] = b
    out["mean_w"] = policy.mean_w
    out["mean_b"] = policy.mean_b
    out["log_std_w"] = policy.log_std_w
    out["log_std_b"] = policy.log_std_b
    return out


def policy_from_arrays(arrays: dict[str, np.ndarray],
                       activation: str) -> PolicyParams:
    n = 0
    while f"trunk_w{n}" in arrays:
        n += 1
    from .funcapprox.nets import MlpParams
    trunk = MlpParams([arrays[f"trunk_w{i}"] for i in range(n)],
                      [arrays[f"trunk_b{i}"] for i in range(n)], activation)
    return PolicyParams(trunk=trunk, mean_w=arrays["mean_w"],
                        mean_b=arrays["mean_b"],
                        log_std_w=arrays["log_std_w"],
                        log_std_b=arrays["log_std_b"])


def save_policy_checkpoint(path: str, policy: PolicyParams,
                           run_config: RunConfig, seed: int,
                           env_steps: int) -> None:
    meta = {
        "config_hash": run_config.hash(),
        "scenario_hash": config_hash(dataclasses.asdict(run_config.scenario)),
        "activation": policy.trunk.activation,
        "seed": seed,
        "env_steps": env_steps,
    }
    save_checkpoint(path, policy_to_arrays(policy), meta)


def load_policy_checkpoint(path: str, scenario: envmod.ScenarioConfig,
                           force: bool = False) -> tuple[PolicyParams, dict]:
    arrays, meta = load_checkpoint(path)
    want = config_hash(dataclasses.asdict(scenario))
    if not force and meta.get("scenario_hash") != want:
        raise ConfigError(
            f"checkpoint scenario hash {meta.get('scenario_hash')} does not "
            f"match {want}; pass force to override")
    return policy_from_arrays(arrays, meta.get("activation", "relu")), meta


# -- evaluation ---------------------------------------------------------------

def run_eval(policy: PolicyParams, scenario: envmod.ScenarioConfig,
             n_episodes: int = 20, seed_base: int = EVAL_SEED_BASE,
             dcfg: Optional[DisturbanceConfig] = None) -> EvalReport:
    """Deterministic policy head, no mentor in the loop."""
    dcfg = dcfg or DisturbanceConfig(dt=scenario.dt, idm=scenario.idm,
                                     av=scenario.av)
    successes = 0
    returns = []
    costs = []
    disturbances = steps = 0
    for ep in range(n_episodes):
        world, obs = envmod.reset(scenario, seed_base + ep)
        ep_return = 0.0
        ep_cost = 0
        prev_accel = 0.0
        while not world.done:
            action_arr = policy_mean_action(policy, obs)[0]
            action = (float(action_arr[0]), float(action_arr[1]))
            acc = realized_accel(world.av, action, dcfg)
            if braking_edge(acc, prev_accel, dcfg):
                disturbances += 1
            prev_accel = acc
            world, obs, info = envmod.step(scenario, world, action)
            ep_return += info.eval_reward
            ep_cost += info.env_cost
            steps += 1
        successes += 1 if info.success else 0
        returns.append(ep_return)
        costs.append(ep_cost)
    returns_arr = np.array(returns)
    return EvalReport(
        success_rate=successes / n_episodes,
        return_mean=float(returns_arr.mean()),
        return_sd=float(returns_arr.std(ddof=1)) if n_episodes > 1 else 0.0,
        safety_violation=float(np.mean(costs)),
        disturbance_rate=disturbances / max(1, steps),
        episodes=n_episodes)


# -- training -----------------------------------------------------------------

def run_train(run_config: RunConfig, seed: int, out_dir: str,
              checkpoint_every: Optional[int] = None) -> dict[str, str]:
    """Train to total_env_steps, logging a metrics row per iteration and a
    held-out evaluation every eval_every iterations. Returns artifact paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    metrics_path = os.path.join(out_dir, "metrics.csv")
    ckpt_path = os.path.join(out_dir, "policy.ckpt")

    state = init_trainer(run_config.trainer, run_config.scenario,
                         run_config.expert, seed)
    n_iterations = math.ceil(run_config.total_env_steps
                             / run_config.trainer.steps_per_iteration)
    with open(metrics_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_COLUMNS + ["config_hash"])
        for i in range(1, n_iterations + 1):
            m = train_iteration(state)
            row = [m.iteration, m.env_steps, f"{m.takeover_rate:.6f}",
                   f"{m.takeover_cost_sum:.6f}", f"{m.d_cost_sum:.6f}",
                   f"{m.disturbance_rate:.6f}",
                   f"{m.train_success_rate:.6f}"]
            if i % run_config.eval_every == 0 or i == n_iterations:
                report = run_eval(state.policy, run_config.scenario,
                                  run_config.eval_episodes)
                row += [f"{report.success_rate:.6f}",
                        f"{report.return_mean:.6f}",
                        f"{report.safety_violation:.6f}"]
            else:
                row += ["", "", ""]
            row += [f"{m.alpha:.6f}", run_config.hash()]
            writer.writerow(row)
    save_policy_checkpoint(ckpt_path, state.policy, run_config, seed,
                           state.env_steps)
    return {"metrics": metrics_path, "checkpoint": ckpt_path}


# -- trace export -------------------------------------------------------------

def export_platoon_trace(policy: Optional[PolicyParams],
                         scenario: envmod.ScenarioConfig, seed: int,
                         out_path: str,
                         max_steps: Optional[int] = None) -> str:
    """One episode as a per-vehicle time series CSV. Without a policy the
    scripted expert drives."""
    from .expert import ExpertConfig as ECfg, expert_action

    world, obs = envmod.reset(scenario, seed)
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "vehicle_id", "loc", "v", "acc"])
        steps = 0
        while not world.done and (max_steps is None or steps < max_steps):
            writer.writerow([world.t, "av", f"{world.av.x:.6f}",
                             f"{world.av.v:.6f}", f"{world.av.acc:.6f}"])
            for i, hv in enumerate(world.followers):
                writer.writerow([world.t, f"hv{i + 1}", f"{hv.loc:.6f}",
                                 f"{hv.v:.6f}", f"{hv.acc:.6f}"])
            if policy is not None:
                a = policy_mean_action(policy, obs)[0]
                action = (float(a[0]), float(a[1]))
            else:
                action = expert_action(scenario, world, ECfg())
            world, obs, _ = envmod.step(scenario, world, action)
            steps += 1
    return out_path
