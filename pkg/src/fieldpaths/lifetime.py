"""Node lifetime metric and epoch-duration bound.

The lifetime of a node under a given set of active outgoing flows is the
decision metric for every reconfiguration choice in this package: the
central planner, the local bridge selection, the route discovery
selection and the revival takeover all rank alternatives by it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Lifetime:
    """Remaining lifetime in intervals, or the explicit unbounded variant.

    An idle node (no active outgoing link) never drains forwarding energy,
    so its lifetime is unbounded; that case is a distinct variant rather
    than an infinity sentinel so that minimum computations can skip idle
    nodes exactly.
    """

    intervals: float | None = None  # None encodes unbounded

    @classmethod
    def unbounded(cls):
        return cls(None)

    @property
    def is_unbounded(self):
        return self.intervals is None

    def as_float(self):
        """Ordering view: unbounded compares above every finite value."""
        return math.inf if self.intervals is None else self.intervals

    def __lt__(self, other):
        return self.as_float() < other.as_float()

    def __le__(self, other):
        return self.as_float() <= other.as_float()

    def __gt__(self, other):
        return self.as_float() > other.as_float()

    def __ge__(self, other):
        return self.as_float() >= other.as_float()


@dataclass(frozen=True)
class EnergyState:
    """Remaining / initial energy and the configuration-phase reserve."""

    remaining: float
    initial: float
    cfg_reserve: float

    def __post_init__(self):
        if self.remaining < 0 or self.initial < 0 or self.cfg_reserve < 0:
            raise ValueError("energy values must be non-negative")
        if self.remaining > self.initial:
            raise ValueError("remaining energy cannot exceed initial energy")


@dataclass(frozen=True)
class RateVector:
    """Aggregate outgoing pieces per interval, keyed by next-hop node."""

    owner: int
    rates: dict  # v -> aggregate pieces per interval

    def __post_init__(self):
        if any(a < 0 for a in self.rates.values()):
            raise ValueError("aggregate rates must be non-negative")

    def active_entries(self):
        return [(v, a) for v, a in sorted(self.rates.items()) if a > 0]


def aggregate_rate(pieces, activations, u, v):
    """Sum of r_d over pieces d whose (u, v) link is activated.

    ``activations`` maps (piece_id, u, v) -> truthy when the link carries
    the piece.
    """
    return sum(p.rate for p in pieces if activations.get((p.piece_id, u, v)))


def node_lifetime(energy: EnergyState, rates: RateVector, costs, tau=1.0) -> Lifetime:
    """Remaining lifetime of a node in intervals.

    costs: mapping next-hop -> energy per piece for the owning node's
    links; must cover every next-hop with a positive aggregate rate.

    Cases, in order: zero energy -> 0; energy within the configuration
    reserve -> one interval (tau); no active outgoing link -> unbounded;
    otherwise remaining energy divided by the per-interval drain.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    if energy.remaining == 0:
        return Lifetime(0.0)
    if energy.remaining <= energy.cfg_reserve:
        return Lifetime(tau)
    drain = 0.0
    for v, a in rates.active_entries():
        if v not in costs:
            raise ValueError(f"missing link cost for active next-hop {v}")
        if costs[v] <= 0:
            raise ValueError("link costs must be positive")
        drain += costs[v] * a
    if drain == 0:
        return Lifetime.unbounded()
    return Lifetime(energy.remaining / drain)


def max_epoch_duration(lifetimes, has_active_outgoing):
    """Minimum lifetime over nodes with at least one active outgoing link.

    lifetimes: mapping node -> Lifetime; has_active_outgoing: mapping
    node -> bool.  Returns None (the distinguished no-traffic result)
    when no node has an active outgoing link.
    """
    best = None
    for u in sorted(lifetimes):
        if not has_active_outgoing.get(u):
            continue
        lt = lifetimes[u]
        if best is None or lt < best:
            best = lt
    return best


def depletion_intervals(remaining, per_interval_drain):
    """Step-wise depletion oracle: intervals until the energy is gone.

    Subtracts the drain once per interval until the level reaches zero.
    Independent check of the first lifetime case.
    """
    if per_interval_drain <= 0:
        raise ValueError("drain must be positive")
    steps = 0
    level = remaining
    while level > 0:
        level -= per_interval_drain
        steps += 1
    return steps
