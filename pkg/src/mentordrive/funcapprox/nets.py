"""Fully connected networks, the squashed-Gaussian policy head, Adam, and
target-network tracking, all on top of the local autodiff tape."""
from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class MlpParams:
    """Dense network: weights[i] is (fan_in, fan_out), biases[i] is (fan_out,)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu"      # hidden activation; output is linear

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def flat(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights],
                         [b.copy() for b in self.biases], self.activation)


def init_mlp(sizes: list[int], rng: np.random.Generator,
             activation: str = "relu") -> MlpParams:
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        scale = np.sqrt(2.0 / fan_in) if activation == "relu" else np.sqrt(1.0 / fan_in)
        weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases, activation)


_ACTS = {"relu": ad.relu, "tanh": ad.tanh}


def forward(params: MlpParams, x: ad.Tensor | np.ndarray,
            trainable: bool = False) -> ad.Tensor:
    """Run the network; with trainable=True, gradients reach the parameters
    via ``collect_grads``."""
    h = x if isinstance(x, ad.Tensor) else ad.Tensor(np.atleast_2d(x))
    if h.data.shape[-1] != params.weights[0].shape[0]:
        raise ValueError(f"input width {h.data.shape[-1]} != "
                         f"{params.weights[0].shape[0]}")
    act = _ACTS[params.activation]
    last = len(params.weights) - 1
    params._leaves = []  # type: ignore[attr-defined]
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        wt = ad.Tensor(w, requires_grad=trainable)
        bt = ad.Tensor(b, requires_grad=trainable)
        params._leaves.extend([wt, bt])  # type: ignore[attr-defined]
        h = ad.matmul(h, wt) + bt
        if i != last:
            h = act(h)
    return h


def forward_np(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Gradient-free fast path (target networks, rollouts, evaluation)."""
    h = np.atleast_2d(x)
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w + b
        if i != last:
            h = np.tanh(h) if params.activation == "tanh" else np.maximum(h, 0.0)
    return h


def collect_grads(params: MlpParams) -> list[np.ndarray]:
    """Gradients of the most recent trainable forward pass, in flat() order."""
    leaves = getattr(params, "_leaves", None)
    if not leaves:
        raise RuntimeError("no trainable forward pass recorded")
    return [np.zeros_like(t.data) if t.grad is None else t.grad for t in leaves]


@dataclass
class PolicyParams:
    """Trunk MLP feeding separate mean and log-std linear heads."""

    trunk: MlpParams
    mean_w: np.ndarray
    mean_b: np.ndarray
    log_std_w: np.ndarray
    log_std_b: np.ndarray

    @property
    def action_dim(self) -> int:
        return self.mean_w.shape[1]

    def flat(self) -> list[np.ndarray]:
        return self.trunk.flat() + [self.mean_w, self.mean_b,
                                    self.log_std_w, self.log_std_b]

    def copy(self) -> "PolicyParams":
        return PolicyParams(self.trunk.copy(), self.mean_w.copy(),
                            self.mean_b.copy(), self.log_std_w.copy(),
                            self.log_std_b.copy())


def init_policy(obs_dim: int, hidden: list[int], action_dim: int,
                rng: np.random.Generator, activation: str = "relu") -> PolicyParams:
    trunk = init_mlp([obs_dim] + list(hidden), rng, activation)
    feat = hidden[-1]
    scale = 1e-2  # small heads: near-zero mean, mid-range log-std at init
    return PolicyParams(
        trunk=trunk,
        mean_w=rng.normal(0.0, scale, size=(feat, action_dim)),
        mean_b=np.zeros(action_dim),
        log_std_w=rng.normal(0.0, scale, size=(feat, action_dim)),
        log_std_b=np.full(action_dim, -0.5),
    )


def _policy_heads(pp: PolicyParams, obs, trainable: bool):
    h = obs if isinstance(obs, ad.Tensor) else ad.Tensor(np.atleast_2d(obs))
    act = _ACTS[pp.trunk.activation]
    pp._leaves = []  # type: ignore[attr-defined]
    for w, b in zip(pp.trunk.weights, pp.trunk.biases):
        wt = ad.Tensor(w, requires_grad=trainable)
        bt = ad.Tensor(b, requires_grad=trainable)
        pp._leaves.extend([wt, bt])  # type: ignore[attr-defined]
        h = act(ad.matmul(h, wt) + bt)
    mw = ad.Tensor(pp.mean_w, requires_grad=trainable)
    mb = ad.Tensor(pp.mean_b, requires_grad=trainable)
    sw = ad.Tensor(pp.log_std_w, requires_grad=trainable)
    sb = ad.Tensor(pp.log_std_b, requires_grad=trainable)
    pp._leaves.extend([mw, mb, sw, sb])  # type: ignore[attr-defined]
    mean = ad.matmul(h, mw) + mb
    log_std = ad.clip(ad.matmul(h, sw) + sb, LOG_STD_MIN, LOG_STD_MAX)
    return mean, log_std


def policy_sample(pp: PolicyParams, obs, rng: np.random.Generator,
                  trainable: bool = False,
                  noise: np.ndarray | None = None) -> tuple[ad.Tensor, ad.Tensor]:
    """Reparameterized tanh-squashed Gaussian sample and its log-density.

    Returns (action, log_prob) tensors with shapes (batch, act_dim) and
    (batch, 1). Pass ``noise`` to pin the standard-normal draw.
    """
    mean, log_std = _policy_heads(pp, obs, trainable)
    std = ad.exp(log_std)
    if noise is None:
        noise = rng.standard_normal(mean.shape)
    eps = ad.Tensor(noise)
    u = mean + std * eps
    action = ad.tanh(u)
    # Gaussian log-density of u plus tanh change-of-variables correction.
    gauss = ad.Tensor(-0.5 * LOG_2PI) - log_std - 0.5 * ad.square(eps)
    correction = ad.log(ad.Tensor(1.0) - ad.square(action) + ad.Tensor(1e-6))
    log_prob = ad.total(gauss - correction, axis=1, keepdims=True)
    return action, log_prob


def policy_mean_action(pp: PolicyParams, obs: np.ndarray) -> np.ndarray:
    """Deterministic head used at evaluation: tanh of the Gaussian mean."""
    h = np.atleast_2d(obs)
    for w, b in zip(pp.trunk.weights, pp.trunk.biases):
        h = h @ w + b
        h = np.tanh(h) if pp.trunk.activation == "tanh" else np.maximum(h, 0.0)
    return np.tanh(h @ pp.mean_w + pp.mean_b)


def policy_sample_np(pp: PolicyParams, obs: np.ndarray,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Gradient-free sampling for rollouts. Returns (action, log_prob)."""
    h = np.atleast_2d(obs)
    for w, b in zip(pp.trunk.weights, pp.trunk.biases):
        h = h @ w + b
        h = np.tanh(h) if pp.trunk.activation == "tanh" else np.maximum(h, 0.0)
    mean = h @ pp.mean_w + pp.mean_b
    log_std = np.clip(h @ pp.log_std_w + pp.log_std_b, LOG_STD_MIN, LOG_STD_MAX)
    std = np.exp(log_std)
    eps = rng.standard_normal(mean.shape)
    u = mean + std * eps
    action = np.tanh(u)
    gauss = -0.5 * LOG_2PI - log_std - 0.5 * eps * eps
    corr = np.log(1.0 - action * action + 1e-6)
    return action, (gauss - corr).sum(axis=1, keepdims=True)


@dataclass
class OptimizerState:
    """Adam accumulators for one flat parameter list."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    skipped_updates: int = 0

    @classmethod
    def for_params(cls, params: list[np.ndarray], lr: float = 1e-4) -> "OptimizerState":
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params], lr=lr)


def adam_step(params: list[np.ndarray], grads: list[np.ndarray],
              opt: OptimizerState) -> None:
    """Standard Adam with bias correction, in place. Non-finite gradients
    skip the update (moments untouched) and bump ``skipped_updates``."""
    if any(not np.all(np.isfinite(g)) for g in grads):
        opt.skipped_updates += 1
        return
    opt.step += 1
    bc1 = 1.0 - opt.beta1 ** opt.step
    bc2 = 1.0 - opt.beta2 ** opt.step
    for p, g, m, v in zip(params, grads, opt.m, opt.v):
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        v *= opt.beta2
        v += (1.0 - opt.beta2) * g * g
        p -= opt.lr * (m / bc1) / (np.sqrt(v / bc2) + opt.eps)


def polyak(target: list[np.ndarray], online: list[np.ndarray], tau: float) -> None:
    """target <- (1 - tau) * target + tau * online, in place."""
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must be in (0, 1]")
    if len(target) != len(online):
        raise ValueError("parameter lists differ in length")
    for t, o in zip(target, online):
        if t.shape != o.shape:
            raise ValueError(f"shape mismatch {t.shape} vs {o.shape}")
        t *= 1.0 - tau
        t += tau * o


# -- checkpoint container ----------------------------------------------------

CHECKPOINT_VERSION = 1


def save_checkpoint(path: str, arrays: dict[str, np.ndarray],
                    meta: dict) -> None:
    """Versioned container: json metadata + named float64 arrays.

    Round-trips bit-exactly (npz stores raw array bytes).
    """
    header = dict(meta)
    header["checkpoint_version"] = CHECKPOINT_VERSION
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    with open(path, "wb") as fh:
        hdr = json.dumps(header, sort_keys=True).encode()
        fh.write(len(hdr).to_bytes(8, "little"))
        fh.write(hdr)
        fh.write(buf.getvalue())


def load_checkpoint(path: str) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        n = int.from_bytes(fh.read(8), "little")
        meta = json.loads(fh.read(n).decode())
        if meta.get("checkpoint_version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version: "
                             f"{meta.get('checkpoint_version')}")
        data = np.load(io.BytesIO(fh.read()))
        arrays = {k: data[k] for k in data.files}
    return arrays, meta


def config_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]
