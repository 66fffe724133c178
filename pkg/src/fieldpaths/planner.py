"""Centralized path computation.

Stands in for the controller's near-optimal planner: enumerate up to k
latency-feasible candidate paths per piece (k-shortest by latency), then
assign pieces greedily in descending rate order, each to the candidate
that maximizes the post-assignment minimum node lifetime along the path.
The same routine serves the initial configuration and the full central
re-planning of the centrally-reconfiguring baseline.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import networkx as nx

from .lifetime import EnergyState, Lifetime, RateVector, node_lifetime
from .topology import NetworkGraph, validate_path

#: Plan entry for a piece with no latency-feasible path.
INFEASIBLE = None


@dataclass
class Plan:
    """Per-piece path assignment; INFEASIBLE (None) marks undeliverable pieces."""

    paths: dict = field(default_factory=dict)  # piece_id -> tuple of nodes | None

    def activations(self):
        """The 0/1 link-activation view: set of (piece_id, u, v) triples."""
        act = set()
        for pid, path in self.paths.items():
            if path:
                for a, b in zip(path, path[1:]):
                    act.add((pid, a, b))
        return act

    def serialize(self):
        lines = []
        for pid in sorted(self.paths):
            path = self.paths[pid]
            if path:
                lines.append(f"{pid}: " + " ".join(str(n) for n in path))
            else:
                lines.append(f"{pid}: infeasible")
        return "\n".join(lines) + "\n"


class GraphView:
    """Planner view of the network: live nodes, enabled links, current costs.

    latency/eps are mappings (u, v) -> value covering both directions;
    they default to the graph's static latencies (eps has no default, the
    caller owns energy costs).
    """

    def __init__(self, g: NetworkGraph, live_nodes=None, disabled_links=None,
                 latency=None, eps=None):
        self.g = g
        self.live = set(g.nodes if live_nodes is None else live_nodes)
        disabled = set()
        for (u, v) in disabled_links or ():
            disabled.add((u, v))
            disabled.add((v, u))
        self.disabled = disabled
        self._latency = latency
        self._eps = eps

    def latency(self, u, v):
        if self._latency is not None:
            return self._latency[(u, v)]
        return self.g.latency(u, v)

    def eps(self, u, v):
        return self._eps[(u, v)]

    def usable(self, u, v):
        return (u in self.live and v in self.live and self.g.has_link(u, v)
                and (u, v) not in self.disabled)

    def to_networkx(self):
        gx = nx.Graph()
        gx.add_nodes_from(u for u in self.g.nodes if u in self.live)
        for (u, v) in self.g.edges:
            if self.usable(u, v):
                gx.add_edge(u, v, latency=self.latency(u, v))
        return gx


def _path_lat(view, path):
    return sum(view.latency(a, b) for a, b in zip(path, path[1:]))


def _node_lt(view, u, out_rates, energy, cfg_reserve):
    costs = {v: view.eps(u, v) for v in out_rates}
    state = EnergyState(energy, energy, cfg_reserve)
    return node_lifetime(state, RateVector(u, out_rates), costs)


def _min_lifetime_on_path(path, view, energies, loads, rate, cfg_reserve):
    """Minimum lifetime (as a float, inf = unbounded) over path nodes,
    with this piece's rate added.

    loads: dict u -> {v: aggregate rate already assigned}.  The consumer
    has no outgoing hop and is skipped, matching the active-link side
    condition of the epoch bound.  Inlined arithmetic (this is the
    planner's hot loop under frequent re-planning) matching
    ``node_lifetime`` case for case.
    """
    worst = math.inf
    for a, b in zip(path, path[1:]):
        e = energies[a]
        if e == 0:
            lt = 0.0
        elif e <= cfg_reserve:
            lt = 1.0
        else:
            rates = dict(loads.get(a, ()))
            rates[b] = rates.get(b, 0) + rate
            drain = 0.0
            for v, agg in sorted(rates.items()):
                if agg > 0:
                    drain += view.eps(a, v) * agg
            lt = (e / drain) if drain else math.inf
        if lt < worst:
            worst = lt
    return worst


def _candidate_paths(view, source, consumer, l_max, k):
    """Up to k simple paths, shortest latency first, within the budget."""
    gx = view.to_networkx()
    if source not in gx or consumer not in gx:
        return []
    candidates = []
    try:
        for path in nx.shortest_simple_paths(gx, source, consumer, weight="latency"):
            lat = _path_lat(view, path)
            if lat > l_max:
                break
            candidates.append((tuple(path), lat))
            if len(candidates) >= k:
                break
    except nx.NetworkXNoPath:
        return []
    return candidates


def compute_initial_plan(view: GraphView, pieces, energies, l_max, k=10,
                         cfg_reserve=0.0, background_loads=None,
                         candidate_cache=None, cache_token=None) -> Plan:
    """Greedy max-min-lifetime assignment over k-shortest candidates.

    pieces are assigned in descending rate order (ties by ascending piece
    id); each takes the candidate maximizing the post-assignment minimum
    lifetime along the path, ties broken by lower total latency, then by
    node sequence.  Pieces without a feasible candidate are INFEASIBLE.

    candidate_cache/cache_token: optional memo for the (energy-independent)
    candidate enumeration, keyed by the caller's graph-state token.
    """
    plan = Plan()
    loads = {u: dict(row) for u, row in (background_loads or {}).items()}
    order = sorted(pieces, key=lambda p: (-p.rate, p.piece_id))
    for piece in order:
        if piece.source not in view.live or piece.consumer not in view.live:
            plan.paths[piece.piece_id] = INFEASIBLE
            continue
        if candidate_cache is not None:
            key = (piece.piece_id, cache_token)
            candidates = candidate_cache.get(key)
            if candidates is None:
                candidates = _candidate_paths(view, piece.source, piece.consumer,
                                              l_max, k)
                candidate_cache[key] = candidates
        else:
            candidates = _candidate_paths(view, piece.source, piece.consumer, l_max, k)
        if not candidates:
            plan.paths[piece.piece_id] = INFEASIBLE
            continue
        best = None
        best_key = None
        for path, lat in candidates:
            worst = _min_lifetime_on_path(path, view, energies, loads,
                                          piece.rate, cfg_reserve)
            key = (-worst, lat, path)
            if best_key is None or key < best_key:
                best_key = key
                best = path
        plan.paths[piece.piece_id] = best
        for a, b in zip(best, best[1:]):
            row = loads.setdefault(a, {})
            row[b] = row.get(b, 0) + piece.rate
    for pid, path in plan.paths.items():
        if path:
            assert not validate_path(view.g, path)
    return plan


def recompute_plan_central(view: GraphView, pieces, energies, l_max, k=10,
                           cfg_reserve=0.0, candidate_cache=None,
                           cache_token=None) -> Plan:
    """Full central re-plan over the surviving graph and current energies."""
    return compute_initial_plan(view, pieces, energies, l_max, k=k,
                                cfg_reserve=cfg_reserve,
                                candidate_cache=candidate_cache,
                                cache_token=cache_token)


def _assignment_min_lifetime(view, pieces, assignment, energies, cfg_reserve):
    loads = {}
    for piece, path in zip(pieces, assignment):
        for a, b in zip(path, path[1:]):
            row = loads.setdefault(a, {})
            row[b] = row.get(b, 0) + piece.rate
    worst = Lifetime.unbounded()
    for u in sorted(loads):
        lt = _node_lt(view, u, loads[u], energies[u], cfg_reserve)
        if lt < worst:
            worst = lt
    return worst


def brute_force_max_min_lifetime(view: GraphView, pieces, energies, l_max,
                                 cfg_reserve=0.0, max_nodes=8, max_pieces=3) -> Plan:
    """Exhaustive assignment oracle for small instances.

    Enumerates every combination of simple latency-feasible paths and
    returns the one maximizing the minimum node lifetime, with the same
    tie-breaking as the greedy planner (total latency, then lexicographic
    paths).  Refuses instances beyond the size bounds.
    """
    if len(view.live) > max_nodes or len(pieces) > max_pieces:
        raise ValueError("instance too large for exhaustive enumeration")
    gx = view.to_networkx()
    pieces = sorted(pieces, key=lambda p: p.piece_id)
    per_piece = []
    for piece in pieces:
        options = []
        if piece.source in gx and piece.consumer in gx:
            for path in nx.all_simple_paths(gx, piece.source, piece.consumer):
                lat = _path_lat(view, path)
                if lat <= l_max:
                    options.append((tuple(path), lat))
        if not options:
            plan = Plan()
            for p in pieces:
                plan.paths[p.piece_id] = INFEASIBLE
            return plan
        per_piece.append(sorted(options, key=lambda it: (it[1], it[0])))

    best_combo = None
    best_key = None
    for combo in itertools.product(*per_piece):
        assignment = tuple(path for path, _lat in combo)
        worst = _assignment_min_lifetime(view, pieces, assignment, energies, cfg_reserve)
        total_lat = sum(lat for _p, lat in combo)
        key = (-worst.as_float(), total_lat, assignment)
        if best_key is None or key < best_key:
            best_key = key
            best_combo = assignment
    plan = Plan()
    for piece, path in zip(pieces, best_combo):
        plan.paths[piece.piece_id] = path
    return plan


def plan_min_lifetime(plan: Plan, view: GraphView, pieces, energies, cfg_reserve=0.0):
    """Minimum node lifetime induced by a plan (for oracle comparisons)."""
    rate_of = {p.piece_id: p.rate for p in pieces}
    loads = {}
    for pid, path in plan.paths.items():
        if path:
            for a, b in zip(path, path[1:]):
                row = loads.setdefault(a, {})
                row[b] = row.get(b, 0) + rate_of[pid]
    worst = Lifetime.unbounded()
    for u in sorted(loads):
        lt = _node_lt(view, u, loads[u], energies[u], cfg_reserve)
        if lt < worst:
            worst = lt
    return worst
