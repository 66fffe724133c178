"""Benchmark protocol variants sharing the simulator's accounting.

PDD follows a single central plan forever; PDD-CR re-runs the central
planner (all nodes exchanging status/plan with the controller over the
expensive link) on exactly the trigger set the distributed protocol
would react to; the non-storing RPL stand-in routes every piece through
the controller.
"""

from __future__ import annotations

from enum import Enum


class BaselineKind(Enum):
    DISTR = "distr"
    PDD = "pdd"
    PDD_CR = "pdd_cr"
    RPL_NS = "rpl_ns"

    @classmethod
    def from_name(cls, name):
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown protocol kind {name!r}") from None


def rpl_ns_route(piece, ctrl_index):
    """Non-storing route: source, controller, consumer.

    Every node reaches the controller in one expensive virtual hop, so
    both legs ride the controller link (the uplink debits the source, the
    downlink debits the consumer, each at controller-link cost).
    """
    return (piece.source, ctrl_index, piece.consumer)


def coalesce_trigger(pending, t):
    """Multiple triggers landing in one interval share a single re-plan."""
    return t if pending is None else min(pending, t)
