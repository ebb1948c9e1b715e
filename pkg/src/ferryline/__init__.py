"""Trace-driven simulator for opportunistic data-ferry selection.

Vehicles crossing a city block are offered as data ferries toward a central
management block. Online hiring policies decide which to accept; an
ensemble runs them all passively and commits the recent best performer.
"""

__version__ = "0.1.0"
