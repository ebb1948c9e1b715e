"""Replay ferry offers through a selector and aggregate delay metrics."""

from __future__ import annotations

import hashlib
import logging
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .ensemble import DEFAULT_PERIOD, WAITING_MODES, Ensemble, StreamOrderError, SwitchEvent
from .policies import POLICY_KEYS, make_policy
from .world import BlockProfile, FerryOffer, TrafficClass, World

logger = logging.getLogger(__name__)

SELECTORS = POLICY_KEYS + ("ensemble",)
SECONDS_PER_HOUR = 3600


class InvariantViolation(AssertionError):
    """A metric identity that must always hold did not."""


@dataclass(frozen=True)
class RunConfig:
    selector: str = "ensemble"
    period: int = DEFAULT_PERIOD
    waiting_mode: str = "per_algorithm"
    p_low: float = 2.0
    p_high: float = 95.0
    days: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.selector not in SELECTORS:
            raise ValueError(f"selector must be one of {SELECTORS}, got {self.selector!r}")
        if not self.period > 0:
            raise ValueError("period must be positive")
        if self.waiting_mode not in WAITING_MODES:
            raise ValueError(f"waiting_mode must be one of {WAITING_MODES}")
        for name in ("p_low", "p_high"):
            if not 0 < getattr(self, name) <= 100:
                raise ValueError(f"{name} must be in (0, 100]")
        if self.days < 1:
            raise ValueError("days must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class HourPoint:
    hour: int
    active: str
    accepted: int
    avg_overall: float


@dataclass(frozen=True)
class BlockMetrics:
    block: str
    traffic_class: TrafficClass
    offer_count: int
    accepted_count: int
    avg_waiting: float | None
    avg_delivery: float | None
    avg_overall: float | None
    hourly: tuple[HourPoint, ...] = ()
    switches: tuple[SwitchEvent, ...] = field(default=(), repr=False)


def block_seed(seed: int, block: str) -> int:
    """Per-block seed, independent of block execution order."""
    h = hashlib.blake2b(f"{seed}:{block}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big")


def _check_sorted(offers: Sequence[FerryOffer]) -> None:
    for a, b in zip(offers, offers[1:]):
        if b.time < a.time:
            raise StreamOrderError(f"offers not sorted by time: {a.time} then {b.time}")


def run_block(
    offers: Sequence[FerryOffer],
    profile: BlockProfile,
    cfg: RunConfig,
    start: int | None = None,
) -> BlockMetrics:
    """Simulate one block.

    The waiting delay of a committed acceptance is the time since the
    previous committed acceptance, or since ``start`` (default: the first
    offer's time) for the first one.
    """
    _check_sorted(offers)
    if start is None:
        start = offers[0].time if offers else 0
    if offers and offers[0].time < start:
        raise StreamOrderError(f"offer at {offers[0].time} precedes stream start {start}")

    ens = None
    if cfg.selector == "ensemble":
        ens = Ensemble.for_block(
            profile.tau_low, profile.tau_high,
            seed=block_seed(cfg.seed, profile.block), period=cfg.period, start=start,
            waiting_mode=cfg.waiting_mode, block=profile.block,
        )
        decide = ens.on_offer
    else:
        policy = make_policy(cfg.selector, profile.tau_low, profile.tau_high)
        decide = lambda _t, d: policy.decide(d)  # noqa: E731

    last = start
    n = sum_w = sum_d = 0
    hours: dict[int, list] = {}
    for o in offers:
        if not decide(o.time, o.delivery_delay):
            continue
        w = o.time - last
        last = o.time
        n += 1
        sum_w += w
        sum_d += o.delivery_delay
        bucket = hours.setdefault((o.time - start) // SECONDS_PER_HOUR, [0, 0, cfg.selector])
        bucket[0] += 1
        bucket[1] += w + o.delivery_delay
        if ens is not None:
            bucket[2] = ens.active

    if n:
        avg_w, avg_d, avg_o = sum_w / n, sum_d / n, (sum_w + sum_d) / n
    else:
        avg_w = avg_d = avg_o = None
    hourly = tuple(HourPoint(h, b[2], b[0], b[1] / b[0]) for h, b in sorted(hours.items()))
    return BlockMetrics(
        block=profile.block,
        traffic_class=profile.traffic_class,
        offer_count=len(offers),
        accepted_count=n,
        avg_waiting=avg_w,
        avg_delivery=avg_d,
        avg_overall=avg_o,
        hourly=hourly,
        switches=tuple(ens.events) if ens is not None else (),
    )


def check_decomposition(m: BlockMetrics) -> None:
    """avg_overall must equal avg_waiting + avg_delivery to within one ulp."""
    if m.accepted_count == 0:
        if not (m.avg_overall is None and m.avg_waiting is None and m.avg_delivery is None):
            raise InvariantViolation(f"{m.block}: averages present without acceptances")
        return
    gap = abs(m.avg_overall - (m.avg_waiting + m.avg_delivery))
    if gap > math.ulp(m.avg_overall):
        raise InvariantViolation(
            f"{m.block}: avg_overall {m.avg_overall!r} != {m.avg_waiting!r} + {m.avg_delivery!r}"
        )


@dataclass(frozen=True)
class ClassSummary:
    traffic_class: TrafficClass
    blocks: int
    active_blocks: int
    avg_accepted: float | None
    avg_waiting: float | None
    avg_delivery: float | None
    avg_overall: float | None


@dataclass(frozen=True)
class Report:
    config: RunConfig
    blocks: dict[str, BlockMetrics]
    classes: dict[TrafficClass, ClassSummary]
    scmc: str
    trace_digest: str | None = None


def _mean_or_none(xs):
    xs = list(xs)
    return statistics.fmean(xs) if xs else None


def summarize_classes(metrics: Sequence[BlockMetrics]) -> dict[TrafficClass, ClassSummary]:
    """Unweighted mean over blocks of each per-block average.

    Blocks with no committed acceptance have no averages and are left out
    of the delay means, though they still count towards ``blocks``.
    """
    out = {}
    for cls in TrafficClass:
        members = [m for m in metrics if m.traffic_class is cls]
        active = [m for m in members if m.accepted_count]
        out[cls] = ClassSummary(
            traffic_class=cls,
            blocks=len(members),
            active_blocks=len(active),
            avg_accepted=_mean_or_none(m.accepted_count for m in members),
            avg_waiting=_mean_or_none(m.avg_waiting for m in active),
            avg_delivery=_mean_or_none(m.avg_delivery for m in active),
            avg_overall=_mean_or_none(m.avg_overall for m in active),
        )
    return out


def run_experiment(world: World, cfg: RunConfig, threads: int = 1, trace_digest: str | None = None) -> Report:
    """Run every profiled block of ``world`` and aggregate per traffic class.

    Blocks share no state, so ``threads > 1`` runs them on a thread pool;
    the report is assembled in block order and does not depend on it.
    """
    blocks = world.blocks

    def job(b: str) -> BlockMetrics:
        m = run_block(world.offers[b], world.profiles[b], cfg, start=world.start)
        check_decomposition(m)
        return m

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, blocks))
    else:
        results = [job(b) for b in blocks]
    by_block = dict(zip(blocks, results))
    return Report(cfg, by_block, summarize_classes(results), world.scmc, trace_digest)
