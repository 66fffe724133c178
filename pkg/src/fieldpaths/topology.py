"""Static network structure: node positions, range-derived links, paths.

Nodes live on a 2D plane and are connected whenever their Euclidean
distance is within the transmission range.  The central controller is not
a member of the node set; engine code models it as a virtual endpoint
reachable from every node over an expensive link.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

#: Latency result for a path that cannot deliver; compares correctly
#: against any threshold.
UNREACHABLE = math.inf


@dataclass(frozen=True)
class LinkParams:
    """Per-link latency (ms) and per-data-piece energy cost.

    ``energy_cost`` is the current cost (interference events scale it),
    ``base_energy_cost`` the value the scenario started from.
    """

    latency_ms: float
    energy_cost: float
    base_energy_cost: float

    def __post_init__(self):
        if self.latency_ms <= 0:
            raise ValueError("link latency must be positive")
        if self.energy_cost <= 0 or self.base_energy_cost <= 0:
            raise ValueError("link energy cost must be positive")


@dataclass(frozen=True)
class DataPiece:
    """A producer-to-consumer flow: id, source, consumer, rate per interval."""

    piece_id: int
    source: int
    consumer: int
    rate: int
    size_bytes: int = 9

    def __post_init__(self):
        if self.source == self.consumer:
            raise ValueError("source and consumer must differ")
        if self.rate < 1:
            raise ValueError("rate must be at least 1 piece per interval")


class NetworkGraph:
    """Immutable geometric graph over sensor nodes.

    Links are symmetric and derived from positions: (u, v) is a link iff
    the Euclidean distance is within ``tx_range``.  Node ids carry a total
    order used everywhere for deterministic tie-breaking.
    """

    def __init__(self, positions, tx_range, latencies=None, default_latency_ms=10.0,
                 explicit_links=None):
        """positions: mapping node id -> (x, y) in meters.

        latencies: optional mapping (u, v) -> ms, applied symmetrically;
        links without an entry get ``default_latency_ms``.

        explicit_links: optional iterable of (u, v) pairs replacing the
        range rule, for scenarios built from a measured link survey.
        """
        if tx_range <= 0:
            raise ValueError("tx_range must be positive")
        self.tx_range = float(tx_range)
        self.positions = {int(u): (float(x), float(y)) for u, (x, y) in sorted(positions.items())}
        if len(self.positions) < 1:
            raise ValueError("graph needs at least one node")
        self._nodes = tuple(sorted(self.positions))
        lat = {}
        if latencies:
            for (u, v), ms in latencies.items():
                lat[(u, v)] = float(ms)
                lat[(v, u)] = float(ms)
        if explicit_links is not None:
            pairs = sorted({(min(u, v), max(u, v)) for u, v in explicit_links})
            for u, v in pairs:
                if u == v or u not in self.positions or v not in self.positions:
                    raise ValueError(f"bad explicit link ({u}, {v})")
        else:
            pairs = [(u, v) for i, u in enumerate(self._nodes)
                     for v in self._nodes[i + 1:]
                     if self.distance(u, v) <= self.tx_range]
        adj = {u: [] for u in self._nodes}
        self._latency = {}
        for u, v in pairs:
            adj[u].append(v)
            adj[v].append(u)
            ms = lat.get((u, v), default_latency_ms)
            self._latency[(u, v)] = ms
            self._latency[(v, u)] = ms
        self._adj = {u: tuple(sorted(vs)) for u, vs in adj.items()}

    @property
    def nodes(self):
        return self._nodes

    @property
    def edges(self):
        """Undirected edge list, each edge once, (u, v) with u < v."""
        return tuple(sorted((u, v) for (u, v) in self._latency if u < v))

    def __contains__(self, u):
        return u in self.positions

    def distance(self, u, v):
        xu, yu = self.positions[u]
        xv, yv = self.positions[v]
        return math.hypot(xu - xv, yu - yv)

    def has_link(self, u, v):
        return (u, v) in self._latency

    def latency(self, u, v):
        """One-hop latency in ms; raises KeyError for non-links."""
        return self._latency[(u, v)]

    def neighbors(self, u):
        if u not in self._adj:
            raise KeyError(f"unknown node {u}")
        return self._adj[u]

    def serialize(self):
        """Plain-text scenario section: one ``node = id x y`` line per node."""
        lines = [f"node = {u} {x:.6f} {y:.6f}" for u, (x, y) in sorted(self.positions.items())]
        lines.append(f"tx_range = {self.tx_range:.6f}")
        return "\n".join(lines) + "\n"


def build_grid_topology(rows, cols, spacing_x, spacing_y, tx_range, latencies=None,
                        default_latency_ms=10.0):
    """Regular 2D grid, node ids assigned row-major starting at 0."""
    if rows < 1 or cols < 1 or rows * cols < 1:
        raise ValueError("grid dimensions must be positive")
    if spacing_x <= 0 or spacing_y <= 0:
        raise ValueError("grid spacings must be positive")
    positions = {}
    for r in range(rows):
        for c in range(cols):
            positions[r * cols + c] = (c * spacing_x, r * spacing_y)
    return NetworkGraph(positions, tx_range, latencies=latencies,
                        default_latency_ms=default_latency_ms)


def neighborhood(g: NetworkGraph, u):
    """The set N_u of nodes within transmission range of u."""
    return set(g.neighbors(u))


def path_latency(g: NetworkGraph, path):
    """Sum of per-hop latencies; UNREACHABLE for broken/empty paths."""
    if path is None or len(path) < 1:
        return UNREACHABLE
    total = 0.0
    for a, b in zip(path, path[1:]):
        if not g.has_link(a, b):
            return UNREACHABLE
        total += g.latency(a, b)
    return total


def validate_path(g: NetworkGraph, path, source=None, consumer=None):
    """Diagnostic check; returns a list of violation strings (empty = ok)."""
    violations = []
    seen = set()
    for node in path:
        if node not in g:
            violations.append(f"unknown node {node}")
        if node in seen:
            violations.append(f"repeated node {node}")
        seen.add(node)
    for a, b in zip(path, path[1:]):
        if a in g and b in g and not g.has_link(a, b):
            violations.append(f"non-adjacent hop ({a}, {b})")
    if source is not None and (not path or path[0] != source):
        violations.append(f"path does not start at source {source}")
    if consumer is not None and (not path or path[-1] != consumer):
        violations.append(f"path does not end at consumer {consumer}")
    return violations
