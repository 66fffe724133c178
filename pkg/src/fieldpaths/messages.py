"""Control-message algebra of the distributed protocol.

Neighbor messages (alert, join, modify_path, info_request, info, route
request/reply, locally generated plan updates) travel over low-power
links and are delivered at the start of the next interval.  Status and
controller plan exchanges travel over the expensive controller link.
"""

from __future__ import annotations

from dataclasses import dataclass, field

#: Destination marker for the central controller endpoint.
CONTROLLER = "controller"

FWD = "fwd"
BWD = "bwd"


@dataclass(frozen=True)
class Message:
    sender: int
    dest: object  # node id or CONTROLLER

    #: sort rank used to normalize inbox processing order
    rank = 50


@dataclass(frozen=True)
class Status(Message):
    """Node -> controller: energy plus per-neighbor costs and latencies."""

    energy: float = 0.0
    rank = 10


@dataclass(frozen=True)
class PlanUpdate(Message):
    """Routing-state updates pushed by a revived node to one neighbor.

    updates: tuple of (piece_id, op, node, pos) where op is one of
    "clear", "set_next", "set_prev".
    """

    updates: tuple = ()
    rank = 20


@dataclass(frozen=True)
class Alert(Message):
    """The link of ``broken`` toward ``target`` (its successor for the
    piece) stopped working; receiver should bridge itself to ``target``."""

    piece: int = -1
    broken: int = -1
    target: object = None  # None when the broken node had no successor
    target_pos: float = 0.0
    rank = 30


@dataclass(frozen=True)
class Join(Message):
    """Ask the receiver to join the piece's path between two nodes."""

    piece: int = -1
    upstream: int = -1
    downstream: int = -1
    upstream_pos: float = 0.0
    downstream_pos: float = 0.0
    rank = 40


@dataclass(frozen=True)
class ModifyPath(Message):
    """Stale-segment deletion walk (delete=True) or pointer update."""

    piece: int = -1
    terminal: int = -1
    delete: bool = False
    direction: str = FWD
    sender_pos: float = 0.0
    rank = 45


@dataclass(frozen=True)
class InfoRequest(Message):
    """Revived node asking a neighbor for its routing state and lifetime."""

    rank = 35


@dataclass(frozen=True)
class Info(Message):
    """Reply to InfoRequest.

    entries: tuple of (piece_id, prev, next, self_pos) for every piece
    the sender currently serves; the energy level and per-neighbor link
    costs let the receiver evaluate takeover lifetimes locally.
    """

    entries: tuple = ()
    lifetime_intervals: object = None  # None = unbounded
    energy: float = 0.0
    link_costs: tuple = ()  # ((neighbor, eps), ...)
    rank = 38


@dataclass(frozen=True)
class RouteRequest(Message):
    """TTL-bounded flooded discovery; dest is the broadcast marker None."""

    piece: int = -1
    origin: int = -1
    target: int = -1
    ttl: int = 0
    route: tuple = ()  # nodes visited, origin first
    min_lifetime: object = None  # None = unbounded (no relay yet)
    origin_pos: float = 0.0
    target_pos: float = 0.0
    search: int = 0  # origin-local search id
    rank = 42


@dataclass(frozen=True)
class RouteReply(Message):
    """Selected route travelling back from the target to the origin."""

    piece: int = -1
    route: tuple = ()  # full route, origin..target
    hop_index: int = 0  # index of the receiver within route
    origin_pos: float = 0.0
    target_pos: float = 0.0
    search: int = 0
    rank = 44


BROADCAST = None


def sort_key(msg: Message):
    """Deterministic inbox order, independent of enqueue order."""
    return (msg.rank, msg.sender, getattr(msg, "piece", -1), repr(msg))
