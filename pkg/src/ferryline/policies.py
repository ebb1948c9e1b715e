"""Online hiring policies deciding on one block's stream of delivery delays.

Each policy object holds the state of one block and is fed delays in
arrival order via :meth:`decide`, which returns ``True`` on accept.
"""

from __future__ import annotations

import bisect
from fractions import Fraction


class FixedThreshold:
    """Accept iff ``d <= tau``. Memoryless."""

    kind = "threshold"

    def __init__(self, tau: float):
        self.tau = tau
        self.accepted_count = 0

    def decide(self, d: int) -> bool:
        ok = d <= self.tau
        if ok:
            self.accepted_count += 1
        return ok

    def __repr__(self):
        return f"FixedThreshold(tau={self.tau})"


class AboveMean:
    """Accept the first delay, then only delays strictly below the mean of accepted ones.

    The running mean is kept as an exact integer sum so comparisons never drift.
    """

    kind = "mean"

    def __init__(self):
        self.accepted_count = 0
        self.total = 0

    @property
    def mean(self) -> Fraction | None:
        if not self.accepted_count:
            return None
        return Fraction(self.total, self.accepted_count)

    def decide(self, d: int) -> bool:
        # d < total / count  <=>  d * count < total
        if self.accepted_count and not d * self.accepted_count < self.total:
            return False
        self.accepted_count += 1
        self.total += d
        return True

    def __repr__(self):
        return f"AboveMean(n={self.accepted_count}, mean={self.mean})"


class AboveMedian:
    """Accept the first delay, then only delays strictly below the current median.

    The median is refreshed only when the number of accepted delays becomes
    odd, so it is always the true middle element of the accepted multiset
    at the last odd count.
    """

    kind = "median"

    def __init__(self):
        self.accepted: list[int] = []
        self.median: int | None = None

    @property
    def accepted_count(self) -> int:
        return len(self.accepted)

    def decide(self, d: int) -> bool:
        if self.median is not None and not d < self.median:
            return False
        bisect.insort(self.accepted, d)
        n = len(self.accepted)
        if n % 2 == 1:
            self.median = self.accepted[n // 2]
        return True

    def __repr__(self):
        return f"AboveMedian(n={self.accepted_count}, median={self.median})"


POLICY_KEYS = ("low", "high", "mean", "median")


def make_policy(key: str, tau_low: float | None = None, tau_high: float | None = None):
    """Fresh policy for one of ``low``, ``high``, ``mean``, ``median``."""
    if key == "low":
        if tau_low is None:
            raise ValueError("low threshold policy needs tau_low")
        return FixedThreshold(tau_low)
    if key == "high":
        if tau_high is None:
            raise ValueError("high threshold policy needs tau_high")
        return FixedThreshold(tau_high)
    if key == "mean":
        return AboveMean()
    if key == "median":
        return AboveMedian()
    raise ValueError(f"unknown policy {key!r}; expected one of {POLICY_KEYS}")
