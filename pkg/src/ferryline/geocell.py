"""Geohash cells used as simulation blocks.

A block is the geohash cell that contains a GPS fix. Seven characters give
cells of roughly 153 m x 153 m at the equator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

ALPHABET = "0123456789bcdefghjkmnpqrstuvwxyz"
DEFAULT_PRECISION = 7
MAX_PRECISION = 12

# meters per degree of latitude (and of longitude at the equator)
METERS_PER_DEGREE = 111_320.0

_DECODE = {ch: i for i, ch in enumerate(ALPHABET)}


class CoordinateRangeError(ValueError):
    """A latitude or longitude outside its closed valid range."""

    def __init__(self, field: str, value: float, lo: float, hi: float):
        super().__init__(f"{field}={value!r} outside [{lo}, {hi}]")
        self.field = field
        self.value = value


@dataclass(frozen=True)
class GeoPoint:
    latitude: float
    longitude: float

    def __post_init__(self):
        _check_range("latitude", self.latitude, -90.0, 90.0)
        _check_range("longitude", self.longitude, -180.0, 180.0)


def _check_range(field: str, value: float, lo: float, hi: float) -> None:
    if not (lo <= value <= hi):  # also rejects NaN
        raise CoordinateRangeError(field, value, lo, hi)


def _check_precision(precision: int) -> None:
    if not isinstance(precision, int) or not 1 <= precision <= MAX_PRECISION:
        raise ValueError(f"precision must be an integer in [1, {MAX_PRECISION}], got {precision!r}")


def encode(latitude: float, longitude: float, precision: int = DEFAULT_PRECISION) -> str:
    """Return the geohash of a coordinate.

    Bits alternate starting with longitude; each bit halves the current
    interval and a point on the midpoint goes to the upper half.

    Raises:
        CoordinateRangeError: latitude or longitude out of range.
        ValueError: precision outside [1, 12].
    """
    _check_range("latitude", latitude, -90.0, 90.0)
    _check_range("longitude", longitude, -180.0, 180.0)
    _check_precision(precision)

    lat_lo, lat_hi = -90.0, 90.0
    lon_lo, lon_hi = -180.0, 180.0
    chars = []
    even = True  # longitude bit
    for _ in range(precision):
        idx = 0
        for _ in range(5):
            if even:
                mid = (lon_lo + lon_hi) / 2
                if longitude >= mid:
                    idx = (idx << 1) | 1
                    lon_lo = mid
                else:
                    idx <<= 1
                    lon_hi = mid
            else:
                mid = (lat_lo + lat_hi) / 2
                if latitude >= mid:
                    idx = (idx << 1) | 1
                    lat_lo = mid
                else:
                    idx <<= 1
                    lat_hi = mid
            even = not even
        chars.append(ALPHABET[idx])
    return "".join(chars)


def encode_point(p: GeoPoint, precision: int = DEFAULT_PRECISION) -> str:
    return encode(p.latitude, p.longitude, precision)


def bounding_box(cell: str) -> tuple[float, float, float, float]:
    """Return ``(lat_min, lat_max, lon_min, lon_max)`` of a geohash cell."""
    if not cell or len(cell) > MAX_PRECISION:
        raise ValueError(f"invalid cell id {cell!r}")
    lat_lo, lat_hi = -90.0, 90.0
    lon_lo, lon_hi = -180.0, 180.0
    even = True
    for ch in cell:
        try:
            idx = _DECODE[ch]
        except KeyError:
            raise ValueError(f"invalid geohash character {ch!r} in {cell!r}") from None
        for shift in range(4, -1, -1):
            bit = (idx >> shift) & 1
            if even:
                mid = (lon_lo + lon_hi) / 2
                if bit:
                    lon_lo = mid
                else:
                    lon_hi = mid
            else:
                mid = (lat_lo + lat_hi) / 2
                if bit:
                    lat_lo = mid
                else:
                    lat_hi = mid
            even = not even
    return lat_lo, lat_hi, lon_lo, lon_hi


def cell_center(cell: str) -> tuple[float, float]:
    lat_lo, lat_hi, lon_lo, lon_hi = bounding_box(cell)
    return (lat_lo + lat_hi) / 2, (lon_lo + lon_hi) / 2


def is_cell_id(code: str, precision: int | None = None) -> bool:
    if precision is not None and len(code) != precision:
        return False
    return bool(code) and all(ch in _DECODE for ch in code)


def _bit_split(precision: int) -> tuple[int, int]:
    total = 5 * precision
    lon_bits = (total + 1) // 2
    return total - lon_bits, lon_bits


def cell_extent_meters(precision: int, latitude: float = 0.0) -> tuple[float, float]:
    """Approximate ``(width, height)`` in meters of a cell at a latitude."""
    _check_precision(precision)
    _check_range("latitude", latitude, -90.0, 90.0)
    lat_bits, lon_bits = _bit_split(precision)
    height = 180.0 / 2**lat_bits * METERS_PER_DEGREE
    width = 360.0 / 2**lon_bits * METERS_PER_DEGREE * math.cos(math.radians(latitude))
    return width, height
