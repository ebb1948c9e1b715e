"""Simulation world: blocks, the SCMC block, ferry offers and traffic classes."""

from __future__ import annotations

import json
import logging
import math
import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from . import geocell
from .traces import TraceRecord, TraceSet, day_windows

logger = logging.getLogger(__name__)


class WorldError(Exception):
    pass


class TrafficClass(str, Enum):
    LIGHT = "light"
    MEDIUM = "medium"
    HIGH = "high"


@dataclass(frozen=True, order=True)
class FerryOffer:
    """A candidate ferry seen in ``block`` at ``time`` that reaches the SCMC ``delivery_delay`` s later."""

    # field order gives the (time, delivery_delay, vehicle_id) stream order
    time: int
    delivery_delay: int
    vehicle_id: str
    block: str

    def __post_init__(self):
        if self.delivery_delay <= 0:
            raise ValueError(f"delivery_delay must be positive, got {self.delivery_delay}")


@dataclass(frozen=True)
class BlockProfile:
    block: str
    offer_count: int
    tau_low: int
    tau_high: int
    traffic_class: TrafficClass

    def to_dict(self) -> dict:
        return {
            "offer_count": self.offer_count,
            "tau_low": self.tau_low,
            "tau_high": self.tau_high,
            "traffic_class": self.traffic_class.value,
        }


@dataclass(frozen=True)
class WorldConfig:
    precision: int = geocell.DEFAULT_PRECISION
    p_low: float = 2.0
    p_high: float = 95.0

    def __post_init__(self):
        for name in ("p_low", "p_high"):
            p = getattr(self, name)
            if not 0 < p <= 100:
                raise ValueError(f"{name} must be in (0, 100], got {p}")


@dataclass(frozen=True)
class World:
    scmc: str
    offers: Mapping[str, tuple[FerryOffer, ...]]
    profiles: Mapping[str, BlockProfile]
    start: int
    end: int
    mean_offers: float
    std_offers: float
    config: WorldConfig = field(default_factory=WorldConfig)

    @property
    def blocks(self) -> list[str]:
        return sorted(self.profiles)

    def to_dict(self) -> dict:
        return {
            "scmc": self.scmc,
            "start": self.start,
            "end": self.end,
            "mean_offer_count": self.mean_offers,
            "std_offer_count": self.std_offers,
            "blocks": {b: self.profiles[b].to_dict() for b in self.blocks},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _cells(records: Iterable[TraceRecord], precision: int) -> list[str]:
    return [geocell.encode(r.latitude, r.longitude, precision) for r in records]


def _by_vehicle(records: Sequence[TraceRecord], cells: Sequence[str]) -> dict[str, list[tuple[int, str]]]:
    paths: dict[str, list[tuple[int, str]]] = defaultdict(list)
    for r, c in zip(records, cells):
        paths[r.vehicle_id].append((r.timestamp, c))
    return paths


def _entries(path: Sequence[tuple[int, str]]) -> Iterable[tuple[int, str]]:
    prev = None
    for t, c in path:
        if c != prev:
            yield t, c
        prev = c


def count_entries(records: Sequence[TraceRecord], precision: int) -> Counter:
    """Number of vehicle entry events per cell.

    An entry is a vehicle's first record, or a record in a different cell
    than that vehicle's previous record.
    """
    counts: Counter = Counter()
    for path in _by_vehicle(records, _cells(records, precision)).values():
        counts.update(c for _, c in _entries(path))
    return counts


def select_scmc(t: TraceSet, precision: int = geocell.DEFAULT_PRECISION) -> str:
    """The most-entered cell; ties go to the lexicographically smallest cell id."""
    if not t.records:
        raise WorldError("cannot select an SCMC from an empty trace")
    counts: Counter = Counter()
    for window in day_windows(t):
        counts.update(count_entries(window, precision))
    best = max(counts.values())
    return min(c for c, n in counts.items() if n == best)


def _window_offers(records: Sequence[TraceRecord], scmc: str, precision: int) -> list[FerryOffer]:
    raw: list[FerryOffer] = []
    for vid, path in _by_vehicle(records, _cells(records, precision)).items():
        # walk backwards so the next SCMC visit is known at every record
        next_scmc = None
        nexts = [None] * len(path)
        for i in range(len(path) - 1, -1, -1):
            nexts[i] = next_scmc
            if path[i][1] == scmc:
                next_scmc = path[i][0]
        prev = None
        for (t, c), arrive in zip(path, nexts):
            if c != prev and c != scmc and arrive is not None:
                raw.append(FerryOffer(t, arrive - t, vid, c))
            prev = c
    return raw


def collapse_simultaneous(offers: Iterable[FerryOffer]) -> list[FerryOffer]:
    """Keep only the minimum-delay offer per ``(block, time)``; ties go to the smallest vehicle id."""
    best: dict[tuple[str, int], FerryOffer] = {}
    for o in offers:
        key = (o.block, o.time)
        cur = best.get(key)
        if cur is None or (o.delivery_delay, o.vehicle_id) < (cur.delivery_delay, cur.vehicle_id):
            best[key] = o
    return sorted(best.values())


def extract_offers(t: TraceSet, scmc: str, precision: int = geocell.DEFAULT_PRECISION) -> dict[str, tuple[FerryOffer, ...]]:
    """Per-block ferry offer streams toward ``scmc``.

    Every entry of a vehicle into a block other than the SCMC becomes an
    offer if that vehicle has a later record inside the SCMC; the delay is
    measured to the earliest such record. Vehicles that never reach the SCMC
    offer nothing. Replicated day copies are processed independently, so no
    trip spans the seam between two copies.
    """
    raw: list[FerryOffer] = []
    for window in day_windows(t):
        raw.extend(_window_offers(window, scmc, precision))
    streams: dict[str, list[FerryOffer]] = defaultdict(list)
    for o in collapse_simultaneous(raw):
        streams[o.block].append(o)
    return {b: tuple(v) for b, v in sorted(streams.items())}


def percentile_nearest_rank(values: Sequence[float], p: float) -> float:
    """Nearest-rank percentile: the ``ceil(p/100 * n)``-th smallest value."""
    if not values:
        raise ValueError("percentile of an empty sequence")
    if not 0 < p <= 100:
        raise ValueError(f"percent must be in (0, 100], got {p}")
    ordered = sorted(values)
    n = len(ordered)
    # p/100*n is computed as p*n/100 to keep exact integers exact (e.g. 95*20/100)
    rank = max(1, math.ceil(p * n / 100))
    return ordered[min(rank, n) - 1]


def classify_blocks(offer_counts: Mapping[str, int]) -> tuple[dict[str, TrafficClass], float, float]:
    """Assign light/medium/high traffic classes from per-block offer counts.

    light: N < mean; medium: mean <= N <= std; high: N > std, where std is
    the population standard deviation. The bands assume std >= mean; when
    std < mean the medium band is empty and a warning is logged.

    Returns ``(classes, mean, std)``.
    """
    if not offer_counts:
        raise ValueError("cannot classify an empty block set")
    counts = list(offer_counts.values())
    mu = statistics.fmean(counts)
    sigma = statistics.pstdev(counts)
    if sigma < mu:
        logger.warning(
            "offer-count std %.3f < mean %.3f: medium traffic band is empty", sigma, mu
        )
    classes = {}
    for block, n in offer_counts.items():
        if n < mu:
            classes[block] = TrafficClass.LIGHT
        elif n <= sigma:
            classes[block] = TrafficClass.MEDIUM
        else:
            classes[block] = TrafficClass.HIGH
    return classes, mu, sigma


def build_world(t: TraceSet, cfg: WorldConfig | None = None) -> World:
    cfg = cfg or WorldConfig()
    if not t.records:
        raise WorldError("empty trace")
    scmc = select_scmc(t, cfg.precision)
    offers = extract_offers(t, scmc, cfg.precision)
    if not offers:
        raise WorldError("no SCMC-reaching candidates")
    counts = {b: len(v) for b, v in offers.items()}
    classes, mu, sigma = classify_blocks(counts)
    profiles = {}
    for b, stream in offers.items():
        delays = [o.delivery_delay for o in stream]
        profiles[b] = BlockProfile(
            block=b,
            offer_count=counts[b],
            tau_low=percentile_nearest_rank(delays, cfg.p_low),
            tau_high=percentile_nearest_rank(delays, cfg.p_high),
            traffic_class=classes[b],
        )
    return World(scmc, offers, profiles, t.start, t.end, mu, sigma, cfg)
