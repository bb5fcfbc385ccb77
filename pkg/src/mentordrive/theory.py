"""Executable safety guarantee: the training-risk upper bound for mentored
policies, plus a tabular brute-force verifier that builds mixed policies on
small random MDPs and checks the bound against exactly solved failure values.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class TheoryViolationError(AssertionError):
    """The verified inequality failed on a concrete instance."""


class ConstructionError(ValueError):
    """The MDP does not admit the required safe-expert construction."""


@dataclass(frozen=True)
class RiskBoundInputs:
    eps: float          # per-step unsafe-action rate of the mentor
    kappa: float        # per-step missed-takeover rate
    gamma: float        # discount
    k_prime: float      # max over states of the confident-action-set measure

    def __post_init__(self) -> None:
        if not 0.0 <= self.eps < 1.0:
            raise ValueError("eps must be in [0, 1)")
        if not 0.0 <= self.kappa < 1.0:
            raise ValueError("kappa must be in [0, 1)")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0, 1)")
        if self.k_prime < 0:
            raise ValueError("k_prime must be non-negative")


def risk_bound(inp: RiskBoundInputs) -> float:
    """Upper bound on the discounted failure value of the mixed policy."""
    g = inp.gamma
    return (inp.eps + inp.kappa
            + (g * inp.eps ** 2 / (1.0 - g)) * inp.k_prime) / (1.0 - g)


@dataclass(frozen=True)
class TabularMdp:
    transitions: np.ndarray     # (S, A, S), rows sum to 1
    failure: np.ndarray         # (S, A) in {0, 1}
    gamma: float
    d0: np.ndarray              # (S,) initial distribution

    def __post_init__(self) -> None:
        s, a, s2 = self.transitions.shape
        if s != s2 or self.failure.shape != (s, a) or self.d0.shape != (s,):
            raise ValueError("inconsistent shapes")
        if not np.allclose(self.transitions.sum(axis=2), 1.0, atol=1e-12):
            raise ValueError("transition rows must sum to 1")
        if not np.all(np.isin(self.failure, (0, 1))):
            raise ValueError("failure indicator must be 0/1")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0, 1)")

    @property
    def n_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transitions.shape[1]


def random_layered_mdp(seed: int, n_states: int = 30, n_actions: int = 4,
                       gamma: float = 0.9, n_layers: int = 3) -> TabularMdp:
    """Random layered MDP with an absorbing failure state.

    The last state is the failure sink: all its actions are safe and
    self-looping, so the failure indicator is charged exactly once on entry.
    Every other state has exactly one unsafe action (leading to the sink)
    and safe actions that move to the next layer.
    """
    if n_states < n_layers + 1 or n_actions < 2:
        raise ConstructionError("need at least one state per layer plus the "
                                "sink, and two actions")
    rng = np.random.default_rng(seed)
    fail = n_states - 1
    live = np.arange(n_states - 1)
    layers = np.array_split(live, n_layers)

    transitions = np.zeros((n_states, n_actions, n_states))
    failure = np.zeros((n_states, n_actions), dtype=int)
    transitions[fail, :, fail] = 1.0

    for li, layer in enumerate(layers):
        nxt = layers[(li + 1) % n_layers]
        for s in layer:
            unsafe = int(rng.integers(n_actions))
            failure[s, unsafe] = 1
            transitions[s, unsafe, fail] = 1.0
            for a in range(n_actions):
                if a == unsafe:
                    continue
                transitions[s, a, nxt] = rng.dirichlet(np.ones(len(nxt)))

    d0 = np.zeros(n_states)
    d0[layers[0]] = rng.dirichlet(np.ones(len(layers[0])))
    return TabularMdp(transitions=transitions, failure=failure, gamma=gamma,
                      d0=d0)


def random_policy(mdp: TabularMdp, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.dirichlet(np.ones(mdp.n_actions), size=mdp.n_states)


@dataclass(frozen=True)
class MixedPolicyResult:
    policy: np.ndarray          # (S, A) mixed behavior policy
    expert_policy: np.ndarray   # (S, A)
    eps: float                  # realized per-step expert unsafe rate
    kappa: float                # realized miss rate on unsafe proposals
    k_prime: float              # counting measure of the confident set


def build_expert_policy(mdp: TabularMdp, eps_target: float) -> np.ndarray:
    """Expert that plays an unsafe action with per-step probability exactly
    eps_target, uniform over the safe actions otherwise."""
    pi = np.zeros((mdp.n_states, mdp.n_actions))
    for s in range(mdp.n_states):
        safe = np.flatnonzero(mdp.failure[s] == 0)
        unsafe = np.flatnonzero(mdp.failure[s] == 1)
        if len(safe) == 0:
            raise ConstructionError(f"state {s} has no safe action")
        pi[s, safe] = (1.0 - eps_target) / len(safe)
        if len(unsafe):
            pi[s, unsafe] = eps_target / len(unsafe)
        elif eps_target > 0:
            # nothing unsafe to play: expert stays safe, rate is 0 here
            pi[s, safe] = 1.0 / len(safe)
    return pi


def build_mixed_policy(mdp: TabularMdp, agent_policy: np.ndarray,
                       eps_target: float, kappa_target: float) -> MixedPolicyResult:
    """Compose agent and expert through the intervention rule.

    The rule lets safe agent proposals through, misses unsafe proposals
    with probability kappa_target, and otherwise hands control to the
    expert. Realized rates are exact by construction: every live state has
    exactly one unsafe action in the generated MDPs.
    """
    if agent_policy.shape != (mdp.n_states, mdp.n_actions):
        raise ValueError("agent policy shape mismatch")
    if not np.allclose(agent_policy.sum(axis=1), 1.0, atol=1e-9):
        raise ValueError("agent policy rows must sum to 1")
    expert = build_expert_policy(mdp, eps_target)

    unsafe_mask = mdp.failure.astype(float)         # (S, A)
    safe_mask = 1.0 - unsafe_mask
    takeover_mass = (agent_policy * unsafe_mask).sum(axis=1) * (1.0 - kappa_target)
    mixed = (agent_policy * safe_mask
             + agent_policy * unsafe_mask * kappa_target
             + takeover_mass[:, None] * expert)

    # confident set: safe actions always pass; an unsafe proposal passes
    # only when misses are possible at all
    passes = safe_mask + (unsafe_mask if kappa_target > 0 else 0.0)
    k_prime = float(passes.sum(axis=1).max())
    return MixedPolicyResult(policy=mixed, expert_policy=expert,
                             eps=eps_target, kappa=kappa_target,
                             k_prime=k_prime)


def exact_failure_value(mdp: TabularMdp,
                        policy: np.ndarray) -> tuple[np.ndarray, float]:
    """Per-state expected discounted failure indicator, by direct linear
    solve, plus its expectation over the initial distribution."""
    if policy.shape != (mdp.n_states, mdp.n_actions):
        raise ValueError("policy shape mismatch")
    if not np.allclose(policy.sum(axis=1), 1.0, atol=1e-9):
        raise ValueError("policy rows must sum to 1")
    c = (policy * mdp.failure).sum(axis=1)                      # (S,)
    p = np.einsum("sa,sat->st", policy, mdp.transitions)        # (S, S)
    a = np.eye(mdp.n_states) - mdp.gamma * p
    v = np.linalg.solve(a, c)
    residual = float(np.abs(a @ v - c).max())
    if residual >= 1e-10:
        raise ArithmeticError(f"linear solve residual {residual}")
    return v, float(v @ mdp.d0)


@dataclass(frozen=True)
class VerificationEntry:
    seed: int
    eps: float
    kappa: float
    exact: float
    bound: float
    margin: float
    lemma_margin: float     # min over states of eps/(1-gamma) - V_expert


@dataclass(frozen=True)
class VerificationReport:
    entries: list[VerificationEntry] = field(default_factory=list)

    @property
    def violations(self) -> list[VerificationEntry]:
        return [e for e in self.entries
                if e.margin < 0 or e.lemma_margin < -1e-12]

    def render(self) -> str:
        lines = [f"{'seed':>6} {'eps':>6} {'kappa':>6} {'exact':>10} "
                 f"{'bound':>10} {'margin':>10} {'lemma':>10}"]
        for e in self.entries:
            lines.append(f"{e.seed:>6} {e.eps:>6.3f} {e.kappa:>6.3f} "
                         f"{e.exact:>10.6f} {e.bound:>10.6f} "
                         f"{e.margin:>10.6f} {e.lemma_margin:>10.6f}")
        lines.append(f"{len(self.entries)} instances, "
                     f"{len(self.violations)} violations")
        return "\n".join(lines)


def verify_bound(n_mdps: int = 20, seed: int = 0, gamma: float = 0.9,
                 rate_grid: tuple[float, ...] = (0.0, 0.01, 0.05, 0.1),
                 n_states: int = 30, n_actions: int = 4) -> VerificationReport:
    """Check the bound end to end on random MDPs over a grid of expert
    specs. Any violated inequality raises."""
    entries = []
    for i in range(n_mdps):
        mdp = random_layered_mdp(seed + i, n_states=n_states,
                                 n_actions=n_actions, gamma=gamma)
        agent = random_policy(mdp, seed + i + 10_000)
        for eps in rate_grid:
            for kappa in rate_grid:
                mix = build_mixed_policy(mdp, agent, eps, kappa)
                _, exact = exact_failure_value(mdp, mix.policy)
                bound = risk_bound(RiskBoundInputs(
                    eps=mix.eps, kappa=mix.kappa, gamma=gamma,
                    k_prime=mix.k_prime))
                v_exp, _ = exact_failure_value(mdp, mix.expert_policy)
                lemma_margin = float(
                    (eps / (1.0 - gamma)) - v_exp.max())
                entries.append(VerificationEntry(
                    seed=seed + i, eps=eps, kappa=kappa, exact=exact,
                    bound=bound, margin=bound - exact,
                    lemma_margin=lemma_margin))
    report = VerificationReport(entries=entries)
    if report.violations:
        worst = min(report.violations,
                    key=lambda e: min(e.margin, e.lemma_margin))
        raise TheoryViolationError(
            f"bound violated: seed={worst.seed} eps={worst.eps} "
            f"kappa={worst.kappa} exact={worst.exact} bound={worst.bound}")
    return report
