"""Ensemble ferry selector: passive hiring policies with a greedy active switch.

Every policy sees every offer. Each acceptance a policy would make is
logged as an overall delay ``d + w``. Only the active policy's decision is
committed. Every ``period`` seconds of stream time the policy with the
lowest average overall delay over the last window becomes active.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .policies import POLICY_KEYS, make_policy

DEFAULT_PERIOD = 1800
WAITING_MODES = ("per_algorithm", "shared")


class StreamOrderError(ValueError):
    """An offer arrived with a timestamp earlier than one already processed."""


@dataclass(frozen=True)
class OverallDelayRecord:
    policy: str
    time: int
    delivery: int
    waiting: int

    @property
    def overall(self) -> int:
        return self.delivery + self.waiting


@dataclass(frozen=True)
class SwitchEvent:
    """One evaluation; ``from_policy == to_policy`` when nothing changed."""

    block: str
    time: int
    from_policy: str
    to_policy: str
    averages: Mapping[str, float | None]

    @property
    def switched(self) -> bool:
        return self.from_policy != self.to_policy


def pick_initial(keys: Sequence[str], seed: int) -> str:
    return keys[random.Random(seed).randrange(len(keys))]


class Ensemble:
    """Per-block ensemble state.

    Args:
        policies: fresh policies keyed by name; key order is the tie-break order.
        period: evaluation period in seconds.
        start: stream start time; evaluation instants are ``start + k * period``
            and the first waiting delay is measured from here.
        active: initial active key; drawn from ``seed`` when omitted.
        waiting_mode: ``per_algorithm`` measures each policy's waiting delay
            from its own last passive acceptance, ``shared`` from the last
            committed acceptance.
    """

    def __init__(
        self,
        policies: Mapping[str, object],
        period: int = DEFAULT_PERIOD,
        start: int = 0,
        active: str | None = None,
        seed: int = 0,
        waiting_mode: str = "per_algorithm",
        block: str = "",
    ):
        if not policies:
            raise ValueError("ensemble needs at least one policy")
        if not period > 0:
            raise ValueError(f"period must be positive, got {period}")
        if waiting_mode not in WAITING_MODES:
            raise ValueError(f"waiting_mode must be one of {WAITING_MODES}, got {waiting_mode!r}")
        self.policies = dict(policies)
        self.keys = tuple(self.policies)
        if active is None:
            active = pick_initial(self.keys, seed)
        elif active not in self.policies:
            raise ValueError(f"unknown active policy {active!r}")
        self.active = active
        self.period = period
        self.start = start
        self.waiting_mode = waiting_mode
        self.block = block
        self.windows: dict[str, list[OverallDelayRecord]] = {k: [] for k in self.keys}
        self.last_accept = {k: start for k in self.keys}
        self.committed_last_accept = start
        self.last_eval = start
        self.last_time = start
        self.events: list[SwitchEvent] = []

    @classmethod
    def for_block(
        cls,
        tau_low: float,
        tau_high: float,
        seed: int = 0,
        period: int = DEFAULT_PERIOD,
        start: int = 0,
        waiting_mode: str = "per_algorithm",
        block: str = "",
        keys: Sequence[str] = POLICY_KEYS,
    ) -> "Ensemble":
        policies = {k: make_policy(k, tau_low, tau_high) for k in keys}
        return cls(policies, period, start, seed=seed, waiting_mode=waiting_mode, block=block)

    def record(self, policy: str, time: int, delivery: int, waiting: int = 0) -> None:
        self.windows[policy].append(OverallDelayRecord(policy, time, delivery, waiting))

    def window_averages(self) -> dict[str, Fraction | None]:
        out = {}
        for k, recs in self.windows.items():
            out[k] = Fraction(sum(r.overall for r in recs), len(recs)) if recs else None
        return out

    def evaluate(self, now: int) -> str:
        """Make the best policy of the current window active, then clear all windows.

        Policies without records in the window are not candidates. An active
        policy tied for best stays; other ties go to key order.
        """
        if now < self.last_eval + self.period:
            raise ValueError(f"evaluation at {now} before {self.last_eval + self.period}")
        avgs = self.window_averages()
        scored = {k: a for k, a in avgs.items() if a is not None}
        before = self.active
        if scored:
            best_value = min(scored.values())
            if scored.get(before) != best_value:
                self.active = next(k for k in self.keys if scored.get(k) == best_value)
        self.events.append(SwitchEvent(
            self.block, now, before, self.active,
            {k: (float(a) if a is not None else None) for k, a in avgs.items()},
        ))
        for recs in self.windows.values():
            recs.clear()
        self.last_eval = now
        return self.active

    def advance(self, now: int) -> None:
        """Fire the evaluation due at or before ``now``; missed boundaries collapse into one."""
        due = self.last_eval + self.period
        if now >= due:
            self.evaluate(self.last_eval + (now - self.last_eval) // self.period * self.period)

    def on_offer(self, time: int, delivery: int) -> bool:
        """Run every policy on one offer; return the active policy's decision."""
        if time < self.last_time:
            raise StreamOrderError(f"offer at {time} after an offer at {self.last_time}")
        self.last_time = time
        self.advance(time)
        committed_ref = self.committed_last_accept
        accepted = False
        for k, policy in self.policies.items():
            if policy.decide(delivery):
                ref = self.last_accept[k] if self.waiting_mode == "per_algorithm" else committed_ref
                self.record(k, time, delivery, time - ref)
                self.last_accept[k] = time
                if k == self.active:
                    accepted = True
        if accepted:
            self.committed_last_accept = time
        return accepted


def replay_window_averages(
    windows: Mapping[str, Sequence[float]], initial: str
) -> tuple[list[str], list[float]]:
    """Replay per-interval window averages through :meth:`Ensemble.evaluate`.

    ``windows[k][i]`` is policy k's average overall delay over interval i.
    Returns the selection after each boundary (starting with ``initial``)
    and the running sum of the active policy's interval averages.
    """
    lengths = {len(v) for v in windows.values()}
    if len(lengths) != 1:
        raise ValueError("all policies need the same number of intervals")
    (n,) = lengths
    ens = Ensemble({k: None for k in windows}, period=1, active=initial)
    selections = [ens.active]
    cumulative: list[float] = []
    total = 0
    for i in range(n):
        total += windows[ens.active][i]
        cumulative.append(total)
        for k, series in windows.items():
            ens.record(k, i, series[i])
        selections.append(ens.evaluate(i + 1))
    return selections, cumulative
