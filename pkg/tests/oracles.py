"""Straight-line reference implementations used as test oracles.

These deliberately avoid the package's code paths: no shared helpers,
quadratic scans instead of indexes, recomputation instead of running state.
"""

from __future__ import annotations

from fractions import Fraction

import pygeohash


def geohash(lat: float, lon: float, precision: int) -> str:
    return pygeohash.encode(lat, lon, precision)


def threshold_decisions(stream, tau):
    return [d <= tau for d in stream]


def mean_decisions(stream):
    accepted = []
    out = []
    for d in stream:
        if not accepted:
            ok = True
        else:
            ok = d < Fraction(sum(accepted), len(accepted))
        if ok:
            accepted.append(d)
        out.append(ok)
    return out


def median_decisions(stream):
    accepted = []
    median = None
    out = []
    for d in stream:
        ok = median is None or d < median
        if ok:
            accepted.append(d)
            if len(accepted) % 2 == 1:
                median = sorted(accepted)[len(accepted) // 2]
        out.append(ok)
    return out


def offers_quadratic(records, scmc, cell_of):
    """Ferry offers by brute force: ``{(block, time): (delay, vehicle)}`` after min-delay collapse.

    ``records`` is a list of ``(vehicle, time, lat, lon)``; ``cell_of(lat, lon)`` gives the cell.
    """
    raw = []
    for vid, t, lat, lon in records:
        cell = cell_of(lat, lon)
        if cell == scmc:
            continue
        # previous record of the same vehicle
        earlier = [(t2, cell_of(la2, lo2)) for v2, t2, la2, lo2 in records if v2 == vid and t2 < t]
        if earlier and max(earlier)[1] == cell:
            continue
        later = [t2 for v2, t2, la2, lo2 in records
                 if v2 == vid and t2 > t and cell_of(la2, lo2) == scmc]
        if later:
            raw.append((cell, t, min(later) - t, vid))
    best = {}
    for cell, t, d, vid in raw:
        key = (cell, t)
        if key not in best or (d, vid) < best[key]:
            best[key] = (d, vid)
    return best


def replay_baseline(delays_times, decisions, start):
    """Committed acceptances of a baseline run: list of (time, waiting, delivery)."""
    out = []
    last = start
    for (t, d), ok in zip(delays_times, decisions):
        if ok:
            out.append((t, t - last, d))
            last = t
    return out
