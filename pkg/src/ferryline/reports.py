"""Report serialization: JSON document and CSV tables.

Delays are stored in seconds and written in minutes rounded to two
decimals. Missing averages (no committed acceptance) are ``null`` in JSON
and empty cells in CSV.

CSV schemas (header rows, in order):

* per-block ``report_<selector>_<days>d.csv``: ``block, traffic_class,
  offer_count, accepted_count, avg_waiting_min, avg_delivery_min,
  avg_overall_min``
* hourly ``hourly_<selector>_<days>d.csv``: ``block, hour, active_policy,
  accepted, avg_overall_min``
* switching ``switching_<block>.csv``: ``days, time, hour, from_policy,
  to_policy, switched, avg_low_min, avg_high_min, avg_mean_min,
  avg_median_min``
* comparison ``comparison.csv``: ``days, traffic_class, selector, blocks,
  active_blocks, avg_accepted, avg_waiting_min, avg_delivery_min,
  avg_overall_min, best, best_baseline``. ``best`` flags the lowest
  overall delay among all selectors of that (days, class), ``best_baseline``
  the lowest among the four fixed policies.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Iterable, Mapping, Sequence

from .ensemble import SwitchEvent
from .policies import POLICY_KEYS
from .simulator import SECONDS_PER_HOUR, Report
from .world import TrafficClass

BLOCK_COLUMNS = ("block", "traffic_class", "offer_count", "accepted_count",
                 "avg_waiting_min", "avg_delivery_min", "avg_overall_min")
HOURLY_COLUMNS = ("block", "hour", "active_policy", "accepted", "avg_overall_min")
SWITCH_COLUMNS = ("days", "time", "hour", "from_policy", "to_policy", "switched") + tuple(
    f"avg_{k}_min" for k in POLICY_KEYS)
COMPARISON_COLUMNS = ("days", "traffic_class", "selector", "blocks", "active_blocks",
                      "avg_accepted", "avg_waiting_min", "avg_delivery_min", "avg_overall_min", "best",
                      "best_baseline")


def minutes(seconds: float | None) -> float | None:
    if seconds is None:
        return None
    return round(seconds / 60.0, 2)


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.2f}"
    return str(x)


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def report_to_dict(report: Report, meta: Mapping | None = None) -> dict:
    blocks = {}
    for b, m in report.blocks.items():
        blocks[b] = {
            "traffic_class": m.traffic_class.value,
            "offer_count": m.offer_count,
            "accepted_count": m.accepted_count,
            "avg_waiting_min": minutes(m.avg_waiting),
            "avg_delivery_min": minutes(m.avg_delivery),
            "avg_overall_min": minutes(m.avg_overall),
            "hourly": [
                {"hour": h.hour, "active_policy": h.active, "accepted": h.accepted,
                 "avg_overall_min": minutes(h.avg_overall)}
                for h in m.hourly
            ],
        }
    classes = {}
    for cls, s in report.classes.items():
        classes[cls.value] = {
            "blocks": s.blocks,
            "active_blocks": s.active_blocks,
            "avg_accepted": None if s.avg_accepted is None else round(s.avg_accepted, 2),
            "avg_waiting_min": minutes(s.avg_waiting),
            "avg_delivery_min": minutes(s.avg_delivery),
            "avg_overall_min": minutes(s.avg_overall),
        }
    return {
        "config": report.config.to_dict(),
        "meta": dict(meta or {}),
        "scmc": report.scmc,
        "trace_digest": report.trace_digest,
        "classes": classes,
        "blocks": blocks,
    }


def report_to_json(report: Report, meta: Mapping | None = None) -> str:
    return json.dumps(report_to_dict(report, meta), indent=2, sort_keys=True) + "\n"


def blocks_csv(report: Report) -> str:
    rows = (
        (b, m.traffic_class.value, m.offer_count, m.accepted_count,
         minutes(m.avg_waiting), minutes(m.avg_delivery), minutes(m.avg_overall))
        for b, m in report.blocks.items()
    )
    return _csv(BLOCK_COLUMNS, rows)


def hourly_csv(report: Report) -> str:
    rows = (
        (b, h.hour, h.active, h.accepted, minutes(h.avg_overall))
        for b, m in report.blocks.items()
        for h in m.hourly
    )
    return _csv(HOURLY_COLUMNS, rows)


def switching_csv(events_by_days: Mapping[int, Sequence[SwitchEvent]], start: int) -> str:
    rows = []
    for days, events in events_by_days.items():
        for e in events:
            rows.append((days, e.time, (e.time - start) // SECONDS_PER_HOUR, e.from_policy,
                         e.to_policy, int(e.switched),
                         *(minutes(e.averages.get(k)) for k in POLICY_KEYS)))
    return _csv(SWITCH_COLUMNS, rows)


def _min_overall(entries) -> float | None:
    scored = [s.avg_overall for _, s in entries if s.avg_overall is not None]
    return min(scored) if scored else None


def comparison_csv(reports: Mapping[tuple[str, int], Report]) -> str:
    """One row per (days, class, selector), flagging the per-(days, class) minima."""
    rows = []
    day_spans = sorted({d for _, d in reports})
    for days in day_spans:
        for cls in TrafficClass:
            entries = [(sel, r.classes[cls]) for (sel, d), r in reports.items() if d == days]
            best = _min_overall(entries)
            best_base = _min_overall([(sel, s) for sel, s in entries if sel in POLICY_KEYS])
            for sel, s in entries:
                rows.append((
                    days, cls.value, sel, s.blocks, s.active_blocks,
                    None if s.avg_accepted is None else round(s.avg_accepted, 2),
                    minutes(s.avg_waiting), minutes(s.avg_delivery), minutes(s.avg_overall),
                    int(best is not None and s.avg_overall == best),
                    int(sel in POLICY_KEYS and best_base is not None and s.avg_overall == best_base),
                ))
    return _csv(COMPARISON_COLUMNS, rows)
