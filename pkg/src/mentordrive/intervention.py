"""Explicit takeover machinery: switch functions, mixed-action composition,
and the cosine takeover cost charged at takeover onset."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

Action = tuple[float, float]


class SwitchContractError(ValueError):
    """Takeover signaled without a human action, or a misconfigured switch."""


@dataclass(frozen=True)
class SwitchConfig:
    mode: str = "action_based"          # or "probability_based"
    eta: float = 0.5                    # confidence level, probability mode

    def __post_init__(self) -> None:
        if self.mode not in ("action_based", "probability_based"):
            raise SwitchContractError(f"unknown switch mode {self.mode!r}")
        if not 0.0 <= self.eta <= 1.0:
            raise SwitchContractError("eta must be in [0, 1]")


@dataclass(frozen=True)
class TakeoverRecord:
    indicator: int                      # 1 while the mentor holds control
    takeover_start: int                 # 1 only on the first step of a run
    a_av: Action
    a_human: Optional[Action] = None

    def __post_init__(self) -> None:
        if self.takeover_start and not self.indicator:
            raise SwitchContractError("takeover_start implies indicator")
        if bool(self.indicator) != (self.a_human is not None):
            raise SwitchContractError("a_human present iff indicator is set")


def action_switch(a_av: Action, takeover_signal: int,
                  a_human: Optional[Action],
                  prev_indicator: int = 0) -> tuple[Action, TakeoverRecord]:
    """Apply the human action while the takeover signal is up."""
    if takeover_signal and a_human is None:
        raise SwitchContractError("takeover signaled without a human action")
    if takeover_signal:
        record = TakeoverRecord(indicator=1,
                                takeover_start=int(not prev_indicator),
                                a_av=a_av, a_human=a_human)
        return a_human, record
    return a_av, TakeoverRecord(indicator=0, takeover_start=0, a_av=a_av)


def probability_switch(a_av: Action, expert_density_at_a_av: float,
                       a_human: Optional[Action], cfg: SwitchConfig,
                       prev_indicator: int = 0) -> tuple[Action, TakeoverRecord]:
    """Keep the agent's action only while the mentor's density at it clears
    the confidence level eta."""
    if expert_density_at_a_av < 0:
        raise SwitchContractError("density must be non-negative")
    confident = expert_density_at_a_av >= cfg.eta
    if confident:
        return a_av, TakeoverRecord(indicator=0, takeover_start=0, a_av=a_av)
    if a_human is None:
        raise SwitchContractError("probability switch rejected the action "
                                  "but no human action is available")
    record = TakeoverRecord(indicator=1, takeover_start=int(not prev_indicator),
                            a_av=a_av, a_human=a_human)
    return a_human, record


def takeover_cost(a_av: Action, a_human: Action) -> float:
    """One minus the cosine similarity of the two actions, in [0, 2].

    Undefined at the origin: if either action has near-zero norm the cost
    is the neutral midpoint 1.
    """
    na = math.hypot(*a_av)
    nh = math.hypot(*a_human)
    if na < 1e-8 or nh < 1e-8:
        return 1.0
    dot = a_av[0] * a_human[0] + a_av[1] * a_human[1]
    return 1.0 - dot / (na * nh)
