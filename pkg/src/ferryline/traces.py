"""GPS trace records: CSV ingestion, day replication and synthetic traces."""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import geocell

logger = logging.getLogger(__name__)

CSV_HEADER = ("vehicle_id", "timestamp", "longitude", "latitude", "speed", "heading")
SECONDS_PER_DAY = 86_400


class TraceError(Exception):
    """Raised for unusable trace input (missing file, bad header, dirty data)."""


class SyntheticSpecError(ValueError):
    """Raised when a synthetic trace description is invalid."""


@dataclass(frozen=True, order=True)
class TraceRecord:
    # field order gives the (timestamp, vehicle_id) sort key
    timestamp: int
    vehicle_id: str
    latitude: float
    longitude: float
    speed: float = 0.0
    heading: float = 0.0

    def __post_init__(self):
        if self.timestamp < 0:
            raise ValueError(f"negative timestamp {self.timestamp}")
        geocell.GeoPoint(self.latitude, self.longitude)
        if not self.speed >= 0:
            raise ValueError(f"speed must be >= 0, got {self.speed}")
        if not 0 <= self.heading < 360:
            raise ValueError(f"heading must be in [0, 360), got {self.heading}")

    @property
    def position(self) -> geocell.GeoPoint:
        return geocell.GeoPoint(self.latitude, self.longitude)


@dataclass(frozen=True)
class LoadStats:
    rows: int = 0
    malformed: int = 0
    duplicates: int = 0
    malformed_rows: tuple[int, ...] = ()


@dataclass(frozen=True)
class TraceSet:
    """Records sorted by ``(timestamp, vehicle_id)``, unique per vehicle and second."""

    records: tuple[TraceRecord, ...]
    day_span: int = 1
    stats: LoadStats = field(default=LoadStats(), compare=False)

    def __post_init__(self):
        if self.day_span < 1:
            raise ValueError("day_span must be >= 1")

    def __len__(self):
        return len(self.records)

    @property
    def start(self) -> int:
        return self.records[0].timestamp

    @property
    def end(self) -> int:
        return self.records[-1].timestamp

    def vehicles(self) -> list[str]:
        return sorted({r.vehicle_id for r in self.records})

    def digest(self) -> str:
        """SHA-256 over the canonical CSV serialization."""
        return hashlib.sha256(to_csv_text(self).encode("utf-8")).hexdigest()


def normalize(records: Iterable[TraceRecord], day_span: int = 1) -> TraceSet:
    """Sort records and collapse duplicate ``(vehicle_id, timestamp)`` pairs.

    The first occurrence in input order wins.
    """
    seen: dict[tuple[str, int], TraceRecord] = {}
    dupes = 0
    for r in records:
        key = (r.vehicle_id, r.timestamp)
        if key in seen:
            dupes += 1
            continue
        seen[key] = r
    ordered = tuple(sorted(seen.values()))
    return TraceSet(ordered, day_span, LoadStats(rows=len(ordered) + dupes, duplicates=dupes))


def _parse_row(row: Sequence[str]) -> TraceRecord:
    if len(row) != len(CSV_HEADER):
        raise ValueError(f"expected {len(CSV_HEADER)} fields, got {len(row)}")
    vid, ts, lon, lat, speed, heading = row
    if not vid:
        raise ValueError("empty vehicle_id")
    lat_f, lon_f, speed_f, heading_f = float(lat), float(lon), float(speed), float(heading)
    if not all(math.isfinite(x) for x in (lat_f, lon_f, speed_f, heading_f)):
        raise ValueError("non-finite numeric field")
    return TraceRecord(int(ts), vid, lat_f, lon_f, speed_f, heading_f)


def load_csv(path: str | os.PathLike, max_malformed_fraction: float = 0.01) -> TraceSet:
    """Load a trace CSV with header ``vehicle_id,timestamp,longitude,latitude,speed,heading``.

    Malformed rows are skipped, counted, logged, and kept in
    ``TraceSet.stats``. If more than ``max_malformed_fraction`` of the data
    rows are malformed, a :class:`TraceError` listing the row numbers is raised.
    """
    if not os.path.isfile(path):
        raise TraceError(f"trace file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceError(f"{path}: empty file") from None
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise TraceError(f"{path}: unexpected header {header!r}, want {','.join(CSV_HEADER)}")
        good: list[TraceRecord] = []
        bad: list[int] = []
        total = 0
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            total += 1
            try:
                good.append(_parse_row(row))
            except ValueError as exc:
                bad.append(lineno)
                logger.debug("%s:%d malformed row: %s", path, lineno, exc)

    if total and len(bad) / total > max_malformed_fraction:
        shown = ", ".join(map(str, bad[:20])) + (" ..." if len(bad) > 20 else "")
        raise TraceError(
            f"{path}: {len(bad)} of {total} rows malformed "
            f"(limit {max_malformed_fraction:.2%}); rows {shown}"
        )
    ts = normalize(good)
    if not ts.records:
        raise TraceError(f"{path}: no valid records")
    if bad:
        logger.warning("%s: skipped %d malformed rows: %s", path, len(bad), bad[:20])
    if ts.stats.duplicates:
        logger.info("%s: collapsed %d duplicate (vehicle, timestamp) rows", path, ts.stats.duplicates)
    stats = LoadStats(rows=total, malformed=len(bad), duplicates=ts.stats.duplicates,
                      malformed_rows=tuple(bad))
    return TraceSet(ts.records, 1, stats)


def _fmt_float(x: float) -> str:
    return repr(float(x))


def to_csv_text(t: TraceSet) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in t.records:
        w.writerow((r.vehicle_id, r.timestamp, _fmt_float(r.longitude), _fmt_float(r.latitude),
                    _fmt_float(r.speed), _fmt_float(r.heading)))
    return buf.getvalue()


def write_csv(t: TraceSet, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(to_csv_text(t))


def replicate_days(t: TraceSet, days: int) -> TraceSet:
    """Repeat a trace ``days`` times back to back.

    Copy k is shifted by ``k * t.day_span`` days, so replicating an
    already replicated trace composes: ``replicate_days(replicate_days(t, a), b)``
    equals ``replicate_days(t, a * b)``. The input must fit strictly inside
    its own period (``end - start < day_span * 86400``) so copies never
    share a second.
    """
    if days < 1:
        raise ValueError(f"days must be >= 1, got {days}")
    period = t.day_span * SECONDS_PER_DAY
    if t.records and t.end - t.start >= period:
        raise ValueError(f"trace spans {t.end - t.start} s, does not fit in {t.day_span} day(s)")
    if days == 1:
        return t
    out = []
    for k in range(days):
        shift = k * period
        out.extend(TraceRecord(r.timestamp + shift, r.vehicle_id, r.latitude, r.longitude,
                               r.speed, r.heading) for r in t.records)
    out.sort()
    return TraceSet(tuple(out), t.day_span * days, t.stats)


def day_windows(t: TraceSet) -> list[tuple[TraceRecord, ...]]:
    """Split a replicated trace into its per-day copies (one window when ``day_span == 1``)."""
    if t.day_span == 1 or not t.records:
        return [t.records]
    windows: list[list[TraceRecord]] = [[] for _ in range(t.day_span)]
    base = t.start
    for r in t.records:
        k = min((r.timestamp - base) // SECONDS_PER_DAY, t.day_span - 1)
        windows[k].append(r)
    return [tuple(w) for w in windows]


# --- synthetic traces -------------------------------------------------------

_DELAY_KINDS = {
    "constant": ("minutes",),
    "uniform": ("low_min", "high_min"),
    "lognormal": ("median_min", "sigma"),
    "pareto": ("scale_min", "shape"),
    "mixture": ("components",),
}


@dataclass(frozen=True)
class DelaySpec:
    """Delivery-delay distribution in minutes; samples are rounded to whole seconds (>= 1).

    ``mixture`` takes ``components``: a list of ``{"weight": w, "dist": ...}``
    entries, each an ordinary delay distribution.
    """

    kind: str
    params: dict

    def __post_init__(self):
        if self.kind not in _DELAY_KINDS:
            raise SyntheticSpecError(f"unknown delay distribution {self.kind!r}")
        missing = [p for p in _DELAY_KINDS[self.kind] if p not in self.params]
        if missing:
            raise SyntheticSpecError(f"{self.kind} delay missing {missing}")
        if self.kind == "mixture":
            comps = self.params["components"]
            if not comps or any(not float(c.get("weight", 0)) > 0 for c in comps):
                raise SyntheticSpecError("mixture needs components with positive weights")
            for c in self._components():
                if c[1].kind == "mixture":
                    raise SyntheticSpecError("nested mixtures are not supported")
            return
        if any(not float(self.params[p]) > 0 for p in _DELAY_KINDS[self.kind]):
            raise SyntheticSpecError(f"{self.kind} delay parameters must be positive: {self.params}")
        if self.kind == "uniform" and self.params["low_min"] > self.params["high_min"]:
            raise SyntheticSpecError("uniform delay needs low_min <= high_min")

    def _components(self) -> list[tuple[float, "DelaySpec"]]:
        out = []
        for c in self.params["components"]:
            c = dict(c)
            w = float(c.pop("weight"))
            out.append((w, DelaySpec.from_dict(c)))
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "DelaySpec":
        d = dict(d)
        try:
            kind = d.pop("dist")
        except KeyError:
            raise SyntheticSpecError("delay needs a 'dist' field") from None
        return cls(kind, d)

    def to_dict(self) -> dict:
        return {"dist": self.kind, **self.params}

    def sample_minutes(self, rng: np.random.Generator, n: int) -> np.ndarray:
        p = self.params
        if self.kind == "constant":
            return np.full(n, float(p["minutes"]))
        if self.kind == "uniform":
            return rng.uniform(p["low_min"], p["high_min"], n)
        if self.kind == "lognormal":
            return float(p["median_min"]) * np.exp(rng.normal(0.0, p["sigma"], n))
        if self.kind == "pareto":
            # classical Pareto with minimum scale_min
            return float(p["scale_min"]) * (1.0 + rng.pareto(p["shape"], n))
        comps = self._components()
        weights = np.array([w for w, _ in comps])
        which = rng.choice(len(comps), size=n, p=weights / weights.sum())
        out = np.empty(n)
        for i, (_, spec) in enumerate(comps):
            mask = which == i
            out[mask] = spec.sample_minutes(rng, int(mask.sum()))
        return out

    def sample_seconds(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.maximum(1, np.rint(self.sample_minutes(rng, n) * 60)).astype(np.int64)


@dataclass(frozen=True)
class BlockRegime:
    rate_per_min: float
    pass_prob: float
    delay: DelaySpec

    def __post_init__(self):
        if not (self.rate_per_min >= 0 and math.isfinite(self.rate_per_min)):
            raise SyntheticSpecError(f"rate_per_min must be >= 0, got {self.rate_per_min}")
        if not 0 <= self.pass_prob <= 1:
            raise SyntheticSpecError(f"pass_prob must be in [0, 1], got {self.pass_prob}")

    @classmethod
    def from_dict(cls, d: dict) -> "BlockRegime":
        return cls(float(d["rate_per_min"]), float(d.get("pass_prob", 1.0)),
                   DelaySpec.from_dict(d["delay"]))

    def to_dict(self) -> dict:
        return {"rate_per_min": self.rate_per_min, "pass_prob": self.pass_prob,
                "delay": self.delay.to_dict()}


@dataclass(frozen=True)
class Segment:
    duration_s: int
    blocks: tuple[BlockRegime, ...]


@dataclass(frozen=True)
class SyntheticSpec:
    """Piecewise-stationary arrival model for synthetic traces.

    Every segment lists one regime per source block, in the same block order.
    Vehicles arrive in each block as a Poisson process; with probability
    ``pass_prob`` an arrival later visits the SCMC cell after a sampled
    delivery delay, otherwise it drives to a sink cell and never does.
    """

    segments: tuple[Segment, ...]
    origin: tuple[float, float] = (31.2304, 121.4737)
    precision: int = geocell.DEFAULT_PRECISION
    start_time: int = 0
    seed: int = 0

    def __post_init__(self):
        if not self.segments:
            raise SyntheticSpecError("at least one segment is required")
        n = len(self.segments[0].blocks)
        if n < 1:
            raise SyntheticSpecError("at least one block is required")
        for i, seg in enumerate(self.segments):
            if seg.duration_s <= 0:
                raise SyntheticSpecError(f"segment {i}: horizon must be positive, got {seg.duration_s} s")
            if len(seg.blocks) != n:
                raise SyntheticSpecError(f"segment {i} has {len(seg.blocks)} blocks, expected {n}")
        geocell.GeoPoint(*self.origin)
        if self.start_time < 0:
            raise SyntheticSpecError("start_time must be >= 0")

    @property
    def n_blocks(self) -> int:
        return len(self.segments[0].blocks)

    @property
    def horizon_s(self) -> int:
        return sum(s.duration_s for s in self.segments)

    def boundaries(self) -> list[int]:
        """Absolute start time of every segment plus the end of the horizon."""
        out = [self.start_time]
        for s in self.segments:
            out.append(out[-1] + s.duration_s)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        """Build from the ``synthetic`` section of a run config.

        Either ``horizon_minutes`` + ``blocks`` (one stationary segment) or a
        ``segments`` list of ``{duration_minutes, blocks}``.
        """
        try:
            if "segments" in d:
                segs = tuple(
                    Segment(_minutes_to_s(s["duration_minutes"]),
                            tuple(BlockRegime.from_dict(b) for b in s["blocks"]))
                    for s in d["segments"]
                )
            else:
                segs = (Segment(_minutes_to_s(d["horizon_minutes"]),
                                tuple(BlockRegime.from_dict(b) for b in d["blocks"])),)
        except KeyError as exc:
            raise SyntheticSpecError(f"synthetic spec missing field {exc}") from None
        return cls(
            segments=segs,
            origin=tuple(d.get("origin", (31.2304, 121.4737))),
            precision=int(d.get("precision", geocell.DEFAULT_PRECISION)),
            start_time=int(d.get("start_time", 0)),
            seed=int(d.get("seed", 0)),
        )

    def to_dict(self) -> dict:
        return {
            "origin": list(self.origin),
            "precision": self.precision,
            "start_time": self.start_time,
            "seed": self.seed,
            "segments": [
                {"duration_minutes": s.duration_s / 60, "blocks": [b.to_dict() for b in s.blocks]}
                for s in self.segments
            ],
        }


def _minutes_to_s(m) -> int:
    s = float(m) * 60
    if not s > 0:
        raise SyntheticSpecError(f"horizon must be positive, got {m} minutes")
    return int(round(s))


@dataclass(frozen=True)
class SynthesisSummary:
    blocks: int
    arrivals: int
    candidates: int
    anchors: int
    segment_boundaries: tuple[int, ...]
    scmc: str
    block_cells: tuple[str, ...]

    @property
    def candidate_fraction(self) -> float:
        return self.candidates / self.arrivals if self.arrivals else 0.0


def synthetic_layout(spec: SyntheticSpec) -> tuple[str, list[str], str]:
    """Cells used by a synthetic trace: ``(scmc, block cells, sink cell)``.

    Source blocks sit two cells apart eastward of the SCMC; the sink lies
    two cells to the west.
    """
    scmc = geocell.encode(*spec.origin, spec.precision)
    lat_lo, lat_hi, lon_lo, lon_hi = geocell.bounding_box(scmc)
    clat, clon = (lat_lo + lat_hi) / 2, (lon_lo + lon_hi) / 2
    step = lon_hi - lon_lo
    blocks = [geocell.encode(clat, _wrap(clon + 2 * (i + 1) * step), spec.precision)
              for i in range(spec.n_blocks)]
    sink = geocell.encode(clat, _wrap(clon - 2 * step), spec.precision)
    if len({scmc, sink, *blocks}) != len(blocks) + 2:
        raise SyntheticSpecError("too many blocks for this origin and precision")
    return scmc, blocks, sink


def _wrap(lon: float) -> float:
    return (lon + 180.0) % 360.0 - 180.0


def synthesize(spec: SyntheticSpec, seed: int | None = None) -> tuple[TraceSet, SynthesisSummary]:
    """Generate a trace realizing ``spec``; deterministic for ``(spec, seed)``.

    Each arrival is a fresh vehicle: one record in its source block at the
    arrival second, then either one record in the SCMC cell ``d`` seconds
    later (a candidate) or one record in the sink cell. Anchor vehicles
    parked in the SCMC make it the most entered cell.
    """
    seed = spec.seed if seed is None else seed
    rng = np.random.default_rng(np.random.SeedSequence(seed & (2**64 - 1)))
    scmc, cells, sink = synthetic_layout(spec)
    centers = {c: geocell.cell_center(c) for c in (scmc, sink, *cells)}

    records: list[TraceRecord] = []
    entries = [0] * len(cells)
    candidates = 0
    vid = 0
    bounds = spec.boundaries()
    for si, seg in enumerate(spec.segments):
        seg_start, seg_end = bounds[si], bounds[si + 1]
        for bi, regime in enumerate(seg.blocks):
            if regime.rate_per_min == 0:
                continue
            n = rng.poisson(regime.rate_per_min * seg.duration_s / 60)
            times = np.sort(rng.integers(seg_start, seg_end, n))
            passes = rng.random(n) < regime.pass_prob
            delays = regime.delay.sample_seconds(rng, n)
            for t, ok, d in zip(times.tolist(), passes.tolist(), delays.tolist()):
                name = f"s{si}b{bi}v{vid:07d}"
                vid += 1
                lat, lon = centers[cells[bi]]
                records.append(TraceRecord(t, name, lat, lon, 8.0, 90.0))
                entries[bi] += 1
                if ok:
                    candidates += 1
                    dest = centers[scmc]
                    records.append(TraceRecord(t + d, name, dest[0], dest[1], 8.0, 270.0))
                else:
                    dest = centers[sink]
                    records.append(TraceRecord(t + 60, name, dest[0], dest[1], 8.0, 270.0))

    # SCMC entries (candidates + anchors) must strictly beat every block and the sink
    busiest = max(max(entries, default=0), vid - candidates)
    n_anchor = max(1, busiest + 1 - candidates)
    for i in range(n_anchor):
        records.append(TraceRecord(spec.start_time, f"anchor{i:05d}", *centers[scmc], 0.0, 0.0))

    trace = normalize(records)
    summary = SynthesisSummary(
        blocks=len(cells),
        arrivals=vid,
        candidates=candidates,
        anchors=n_anchor,
        segment_boundaries=tuple(bounds),
        scmc=scmc,
        block_cells=tuple(cells),
    )
    return trace, summary
