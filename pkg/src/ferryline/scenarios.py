"""Canned synthetic scenarios.

``piecewise_dominance`` is a one-block, three-regime trace in which a
different fixed policy is best in each regime: the low-threshold policy
first, the running-mean policy second, the high-threshold policy last.

How the regimes pin each winner:

* regime 1 mixes rare 60 s deliveries with frequent 30-60 min ones. The
  60 s values are the bottom of the global delay distribution, so the low
  threshold lands exactly on them; the mean policy also takes a few of the
  slow ones before its running mean drops.
* regime 2 offers 61 s deliveries (just above the low threshold, below
  the mean policy's running mean) plus 20-40 min ones the high threshold
  admits.
* regime 3 is a dense stream of 120 s deliveries, above the running mean
  and at or below the high threshold, so only the high policy hires.

The mean policy hires nothing if its very first acceptance is a 60 s
offer, since its running mean can never go back up. Trace seeds where that
happens lose the intended ordering; ``segment_winners`` detects it.

``class_contrast`` spreads ten blocks over the three traffic classes (eight
light, one medium, one high) so that the best fixed policy is the mean
policy in light blocks, the high threshold in the medium block and the low
threshold in the high block, while the ensemble gains in each by switching
at a regime change.
"""

from __future__ import annotations

from typing import Sequence

from .policies import POLICY_KEYS, make_policy
from .traces import SyntheticSpec
from .world import BlockProfile, FerryOffer

DOMINANCE_SEED = 0
CLASS_CONTRAST_SEED = 0


def _constant(minutes, weight=1.0):
    return {"dist": "constant", "minutes": minutes, "weight": weight}


def _uniform(lo, hi, weight):
    return {"dist": "uniform", "low_min": lo, "high_min": hi, "weight": weight}


def _block(rate, *components):
    return {"rate_per_min": rate, "pass_prob": 1.0,
            "delay": {"dist": "mixture", "components": list(components)}}


def _three_regimes(seed: int, blocks: list[list[dict]], minutes: int = 420) -> SyntheticSpec:
    """``blocks[b][i]`` is block b's regime in segment i."""
    return SyntheticSpec.from_dict({
        "seed": seed,
        "segments": [{"duration_minutes": minutes, "blocks": [b[i] for b in blocks]} for i in range(3)],
    })


def piecewise_dominance(seed: int = DOMINANCE_SEED) -> SyntheticSpec:
    return _three_regimes(seed, [[
        _block(1.0, _constant(1, 0.2), _uniform(30, 60, 0.8)),
        _block(1.3, _constant(61 / 60), _uniform(20, 40, 0.3)),
        _block(5.0, _constant(2)),
    ]])


def class_contrast(seed: int = CLASS_CONTRAST_SEED) -> SyntheticSpec:
    # light: the dominance schedule at 60% of its rates
    light = [
        _block(0.6, _constant(1, 0.2), _uniform(30, 60, 0.8)),
        _block(0.78, _constant(61 / 60), _uniform(20, 40, 0.3)),
        _block(3.0, _constant(2)),
    ]
    # medium: steady 3 min deliveries, then sparse 60 s ones among slow ones
    medium = [
        _block(6.5, _constant(3)),
        _block(6.5, _constant(3)),
        _block(1.7, _constant(1, 0.5), _uniform(30, 60, 1.2)),
    ]
    # high: sparse 60 s deliveries among slow ones, then a dense 90 s stream
    sparse = _block(4.25, _constant(1, 0.8), _uniform(30, 60, 3.45))
    high = [sparse, sparse, _block(100, _constant(1.5))]
    return _three_regimes(seed, [light] * 8 + [medium, high])


def segment_averages(
    offers: Sequence[FerryOffer],
    profile: BlockProfile,
    boundaries: Sequence[int],
    start: int,
) -> dict[str, list[tuple[int, float | None]]]:
    """Per-regime (acceptances, mean overall delay in seconds) of each fixed policy run alone.

    ``boundaries`` holds every regime's start followed by the horizon end,
    as :meth:`SyntheticSpec.boundaries` returns. An acceptance belongs to the
    regime its offer time falls in; its waiting delay still runs from the
    policy's previous acceptance, wherever that was.
    """
    starts = list(boundaries[:-1])
    out = {}
    for key in POLICY_KEYS:
        policy = make_policy(key, profile.tau_low, profile.tau_high)
        sums = [[0, 0] for _ in starts]
        last = start
        for o in offers:
            if not policy.decide(o.delivery_delay):
                continue
            i = max(j for j, b in enumerate(starts) if o.time >= b)
            sums[i][0] += 1
            sums[i][1] += o.time - last + o.delivery_delay
            last = o.time
        out[key] = [(n, total / n if n else None) for n, total in sums]
    return out


def segment_winners(averages: dict[str, list[tuple[int, float | None]]]) -> list[str | None]:
    """The policy with the lowest per-regime average (None when nobody hired)."""
    n = len(next(iter(averages.values())))
    winners = []
    for i in range(n):
        scored = {k: v[i][1] for k, v in averages.items() if v[i][1] is not None}
        winners.append(min(scored, key=scored.get) if scored else None)
    return winners
