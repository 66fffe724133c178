"""Discrete-time simulation engine.

Interval structure: scenario events are injected first, then control
messages queued in the previous interval are delivered and agents react,
then the data plane forwards every active piece along its materialized
path (the hot loop, delegated to the forwarding kernel), and finally
failures observed while forwarding are turned into next-interval
observations.  Data crosses its whole path within the interval it is
generated; control messages take one interval per hop.

Quiescent stretches (no messages in flight, no timers, no scheduled
events) are run inside a single kernel call.
"""

from __future__ import annotations

import heapq
from collections import defaultdict
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from . import kernel
from .agents import (AbnormalLinkObservation, LinkDeadObservation, NodeAgent,
                     ReviveObservation, detect_abnormal_link)
from .baselines import BaselineKind, coalesce_trigger, rpl_ns_route
from .lifetime import Lifetime
from .messages import CONTROLLER, sort_key
from .planner import GraphView, compute_initial_plan, recompute_plan_central
from .topology import DataPiece, NetworkGraph, build_grid_topology

FWD_SPLIT, LOCAL_SPLIT, CTRL_SPLIT = 0, 1, 2


# ----------------------------------------------------------------------
# scenario events

@dataclass(frozen=True)
class NodeFailure:
    t: int
    node: int


@dataclass(frozen=True)
class NodeRevival:
    t: int
    node: int
    fraction: float = 1.0


@dataclass(frozen=True)
class InterferenceSpike:
    t: int
    u: int | None  # None: pick a currently active link at injection time
    v: int | None
    multiplier: float = 3.0
    duration: int | None = None  # None = permanent


@dataclass(frozen=True)
class ConsumerActivation:
    t: int
    pieces: tuple = ()  # DataPiece instances activated at t


@dataclass(frozen=True)
class _SpikeReversion:
    t: int
    u: int
    v: int
    multiplier: float


def sample_link_latencies(edges, lo, hi, rng, overrides=None):
    """Draw each link's one-hop latency once at scenario start."""
    if lo <= 0 or hi < lo:
        raise ValueError("latency bounds must be positive and ordered")
    overrides = overrides or {}
    out = {}
    for (u, v) in sorted(edges):
        if (u, v) in overrides or (v, u) in overrides:
            out[(u, v)] = float(overrides.get((u, v), overrides.get((v, u))))
        elif lo == hi:
            out[(u, v)] = float(lo)
        else:
            out[(u, v)] = float(rng.uniform(lo, hi))
    return out


# ----------------------------------------------------------------------
# per-run metrics

@dataclass
class MetricsLog:
    protocol: str
    seed: int
    horizon: int
    n_nodes: int
    fwd_spend: np.ndarray
    local_cfg_spend: np.ndarray
    ctrl_cfg_spend: np.ndarray
    generated: np.ndarray
    delivered: np.ndarray
    lost: np.ndarray
    max_latency: np.ndarray        # -1 when nothing was delivered
    violation: np.ndarray
    remaining_total: np.ndarray
    injected: np.ndarray
    control_messages: np.ndarray
    lost_control_messages: np.ndarray
    reconfigurations: np.ndarray
    node_spend: np.ndarray         # (horizon, n_nodes, 3) split energy
    initial_total: float
    piece_delivered: np.ndarray
    piece_lost: np.ndarray
    disconnect_count: int = 0
    drop_log: dict = field(default_factory=dict)

    def spent_total(self):
        return self.fwd_spend + self.local_cfg_spend + self.ctrl_cfg_spend

    def cumulative_energy(self):
        return np.cumsum(self.spent_total())

    def cumulative_lost(self):
        return np.cumsum(self.lost)

    def first_loss_interval(self):
        idx = np.nonzero(self.lost > 0)[0]
        return int(idx[0]) if idx.size else None

    def first_violation_interval(self):
        idx = np.nonzero(self.violation > 0)[0]
        return int(idx[0]) if idx.size else None

    def total_reconfigurations(self):
        return int(self.reconfigurations.sum())

    def verify_conservation(self, integer_units):
        """Energy and piece conservation at every interval."""
        spent = np.cumsum(self.spent_total())
        injected = np.cumsum(self.injected)
        expect = self.initial_total - spent + injected
        if integer_units:
            if not np.array_equal(expect, self.remaining_total):
                bad = np.nonzero(expect != self.remaining_total)[0][0]
                raise AssertionError(
                    f"energy ledger broken at interval {bad}: "
                    f"{expect[bad]} != {self.remaining_total[bad]}")
        else:
            scale = max(abs(self.initial_total), 1.0)
            err = np.max(np.abs(expect - self.remaining_total)) / scale
            if err > 1e-9:
                raise AssertionError(f"energy ledger drift {err}")
        if not np.array_equal(self.generated, self.delivered + self.lost):
            bad = np.nonzero(self.generated != self.delivered + self.lost)[0][0]
            raise AssertionError(f"piece ledger broken at interval {bad}")


# ----------------------------------------------------------------------
# agent context

class AgentContext:
    """Local-knowledge facade handed to agents each interval."""

    def __init__(self, sim, t):
        self.sim = sim
        self.t = t
        self.ttl = sim.cfg.ttl
        self.aodv_timeout = sim.cfg.aodv_timeout
        self.cfg_reserve = sim.cfg.cfg_reserve
        self.latency_slack = sim.cfg.repair_latency_slack

    def send(self, msg):
        self.sim._send(msg, self.t)

    def broadcast(self, msg):
        self.sim._broadcast(msg, self.t)

    def online(self, v):
        return bool(self.sim.online[v])

    def link_enabled(self, u, v):
        return bool(self.sim.enabled[u, v])

    def latency(self, u, v):
        return float(self.sim.lat_m[u, v])

    def eps(self, u, v):
        return float(self.sim.eps_m[u, v])

    def neighbors_of(self, v):
        return self.sim.graph.neighbors(v)

    def energy_of(self, u):
        return float(self.sim.energy[u])

    def rate_of(self, pid):
        return self.sim.rate_of[pid]

    def two_hop_latency(self, u, via, target):
        if via is None:
            return float(self.sim.lat_m[u, target])
        return float(self.sim.lat_m[u, via] + self.sim.lat_m[via, target])

    def lifetime_of(self, u):
        return self.sim._lifetime(u)

    def lifetime_with_extra(self, u, extra):
        return self.sim._lifetime(u, extra)

    def mark_dirty(self, pid):
        self.sim.dirty = True

    def count_disconnect(self, pid):
        self.sim.metrics.disconnect_count += 1

    def count_reconfiguration(self):
        self.sim.metrics.reconfigurations[self.t] += 1

    def disable_link(self, u, v):
        self.sim._disable_edge(u, v)

    def shuffle_revive(self, order):
        self.sim.rng_revive.shuffle(order)

    def log_drop(self, reason, msg=None):
        log = self.sim.metrics.drop_log
        log[reason] = log.get(reason, 0) + 1


class _Broadcast:
    __slots__ = ("msg",)

    def __init__(self, msg):
        self.msg = msg


# ----------------------------------------------------------------------
# the simulation

class Simulation:
    def __init__(self, cfg, seed, kind: BaselineKind, check_invariants=False,
                 agent_order=None):
        self.cfg = cfg
        self.seed = seed
        self.kind = kind
        self.check_invariants = check_invariants
        self._agent_order = agent_order

        ss = np.random.SeedSequence(seed)
        streams = ss.spawn(5)
        self.rng_latency = np.random.default_rng(streams[0])
        self.rng_data = np.random.default_rng(streams[1])
        self.rng_energy = np.random.default_rng(streams[2])
        self.rng_event = np.random.default_rng(streams[3])
        self.rng_revive = np.random.default_rng(streams[4])

        self.graph = self._build_graph()
        self.n = len(self.graph.nodes)
        if self.graph.nodes != tuple(range(self.n)):
            raise ValueError("node ids must be 0..n-1")
        self.ctrl = self.n

        self.online = np.ones(self.n + 1, dtype=np.uint8)
        for u in cfg.initially_offline:
            self.online[u] = 0
        self.live0 = [u for u in range(self.n) if self.online[u]]

        self._build_matrices()
        self._build_pieces()
        self._build_energy()
        self.disabled_edges = set()
        self._compute_initial_plan()
        self._build_events()

        H = cfg.horizon
        self.H = H
        zeros = lambda dt: np.zeros(H, dtype=dt)
        self.metrics = MetricsLog(
            protocol=kind.value, seed=seed, horizon=H, n_nodes=self.n,
            fwd_spend=zeros(np.float64), local_cfg_spend=zeros(np.float64),
            ctrl_cfg_spend=zeros(np.float64), generated=zeros(np.int64),
            delivered=zeros(np.int64), lost=zeros(np.int64),
            max_latency=np.full(H, -1.0), violation=zeros(np.uint8),
            remaining_total=zeros(np.float64), injected=zeros(np.float64),
            control_messages=zeros(np.int64), lost_control_messages=zeros(np.int64),
            reconfigurations=zeros(np.int64),
            node_spend=np.zeros((H, self.n, 3), dtype=np.float64),
            initial_total=float(self.energy[:self.n].sum()),
            piece_delivered=np.zeros(len(self.pieces), dtype=np.int64),
            piece_lost=np.zeros(len(self.pieces), dtype=np.int64),
        )
        self.remaining = self.metrics.initial_total

        self.msg_queue = defaultdict(list)       # deliver_t -> entries
        self.obs_queue = defaultdict(lambda: defaultdict(list))
        self.snapshots = {}                      # dead node -> {pid: (next, next_pos)}
        self.pddcr_status_t = None
        self.pddcr_compute_t = None
        self.pddcr_swap_t = None
        self.pddcr_next = None
        self.dirty = True
        self._candidate_cache = {}
        self.exp_fail = np.full(len(self.pieces), -99, dtype=np.int32)
        self._mat_paths = {}

        self._install_initial_plan()

    # ------------------------------------------------------------------
    # construction helpers

    def _build_graph(self):
        cfg = self.cfg
        if cfg.explicit_nodes:
            positions = {nid: (x, y) for nid, x, y in cfg.explicit_nodes}
            struct = NetworkGraph(positions, cfg.tx_range,
                                  explicit_links=cfg.explicit_links)
        else:
            struct = build_grid_topology(cfg.grid_rows, cfg.grid_cols,
                                         cfg.spacing_x, cfg.spacing_y, cfg.tx_range)
        lats = sample_link_latencies(struct.edges, cfg.latency_lo, cfg.latency_hi,
                                     self.rng_latency, cfg.latency_overrides)
        if cfg.explicit_nodes:
            return NetworkGraph(struct.positions, cfg.tx_range,
                                explicit_links=cfg.explicit_links, latencies=lats)
        return NetworkGraph(struct.positions, cfg.tx_range, latencies=lats)

    def _build_matrices(self):
        cfg = self.cfg
        n1 = self.n + 1
        self.eps_uv = float(cfg.cost_per_byte * cfg.piece_size_bytes)
        self.eps_cc = float(cfg.controller_cost_ratio * self.eps_uv)
        if cfg.controller_cost_ratio <= 1:
            raise ValueError("controller cost ratio must exceed 1")
        self.lat_m = np.zeros((n1, n1), dtype=np.float64)
        self.eps_m = np.zeros((n1, n1), dtype=np.float64)
        self.enabled = np.zeros((n1, n1), dtype=np.uint8)
        for (u, v) in self.graph.edges:
            ms = self.graph.latency(u, v)
            for a, b in ((u, v), (v, u)):
                self.lat_m[a, b] = ms
                self.eps_m[a, b] = self.eps_uv
                self.enabled[a, b] = 1
        for u in range(self.n):
            for a, b in ((u, self.ctrl), (self.ctrl, u)):
                self.lat_m[a, b] = cfg.controller_latency_ms
                self.eps_m[a, b] = self.eps_cc
                self.enabled[a, b] = 1

    def _build_pieces(self):
        cfg = self.cfg
        if cfg.explicit_pieces:
            self.pieces = [DataPiece(pid, s, c, r, cfg.piece_size_bytes)
                           for pid, s, c, r in cfg.explicit_pieces]
        else:
            self.pieces = self._generate_pieces()
        ids = [p.piece_id for p in self.pieces]
        if ids != list(range(len(ids))):
            raise ValueError("piece ids must be 0..k-1")
        pairs = {(p.source, p.consumer) for p in self.pieces}
        if len(pairs) != len(self.pieces):
            raise ValueError("duplicate (source, consumer) pair")
        self.rate_of = {p.piece_id: p.rate for p in self.pieces}
        self.active = np.array(
            [1 if p.piece_id not in cfg.late_piece_ids else 0 for p in self.pieces],
            dtype=np.uint8)

    def _generate_pieces(self):
        cfg = self.cfg
        live = self.live0
        count = max(1, round(cfg.consumer_fraction * len(live)))
        count = min(count, len(live) - 1)
        consumers = sorted(self.rng_data.choice(live, size=count, replace=False).tolist())
        gx = nx.Graph()
        gx.add_nodes_from(live)
        for (u, v) in self.graph.edges:
            if self.online[u] and self.online[v]:
                gx.add_edge(u, v, latency=self.graph.latency(u, v))
        pieces = []
        budget = cfg.feasibility_margin * cfg.l_max_ms
        for i, c in enumerate(consumers):
            lengths = nx.single_source_dijkstra_path_length(gx, c, weight="latency")
            # sources are drawn uniformly; infeasible draws are retried so
            # every piece starts with a workable latency margin
            source = None
            for _ in range(50):
                s = int(self.rng_data.choice(live))
                if s != c and lengths.get(s, np.inf) <= budget:
                    source = s
                    break
            if source is None:
                feasible = [s for s in live
                            if s != c and lengths.get(s, np.inf) <= budget]
                if not feasible:
                    raise ValueError(f"no feasible source for consumer {c}")
                source = feasible[0]
            rate = int(self.rng_data.integers(cfg.rate_lo, cfg.rate_hi + 1))
            pieces.append(DataPiece(i, source, c, rate, cfg.piece_size_bytes))
        return pieces

    def _build_energy(self):
        cfg = self.cfg
        self.energy = np.zeros(self.n + 1, dtype=np.float64)
        if cfg.integer_units:
            vals = self.rng_energy.integers(int(cfg.energy_lo), int(cfg.energy_hi) + 1,
                                            size=self.n)
            self.energy[:self.n] = vals.astype(np.float64)
        else:
            self.energy[:self.n] = self.rng_energy.uniform(cfg.energy_lo, cfg.energy_hi,
                                                           size=self.n)
        self.energy0 = self.energy.copy()
        self.reserve = np.full(self.n, float(cfg.cfg_reserve), dtype=np.float64)

    def _build_events(self):
        cfg = self.cfg
        events = list(cfg.explicit_events)
        if cfg.gen_failures:
            count, first_lo, first_hi, gap_lo, gap_hi = cfg.gen_failures
            endpoints = ({p.source for p in self.pieces}
                         | {p.consumer for p in self.pieces})
            pool = [u for u in self.live0 if u not in endpoints]
            count = min(count, len(pool))
            on_path = sorted({u for path in self.initial_plan.paths.values()
                              if path for u in path} - endpoints)
            victims = []
            if on_path and count > 0:
                first = int(self.rng_event.choice(on_path))
                victims.append(first)
                pool = [u for u in pool if u != first]
            while len(victims) < count and pool:
                # prefer victims at least two hops from earlier ones:
                # failures are spatially dispersed, keeping every break
                # locally repairable
                def hops_to_victims(u):
                    best = 99
                    for w in victims:
                        if self.graph.has_link(u, w):
                            best = min(best, 1)
                        elif any(self.graph.has_link(u, x) and self.graph.has_link(x, w)
                                 for x in self.graph.neighbors(u)):
                            best = min(best, 2)
                    return best
                spread = [u for u in pool if hops_to_victims(u) > 2]
                if not spread:
                    spread = [u for u in pool if hops_to_victims(u) > 1]
                pick = int(self.rng_event.choice(spread if spread else pool))
                victims.append(pick)
                pool.remove(pick)
            t = int(self.rng_event.integers(first_lo, first_hi + 1))
            failures = []
            for victim in victims:
                if t >= cfg.horizon:
                    break
                failures.append((t, int(victim)))
                t += int(self.rng_event.integers(gap_lo, gap_hi + 1))
            events.extend(NodeFailure(ft, v) for ft, v in failures)
            if cfg.gen_revive:
                # delays drawn after all failure draws, so the failure
                # schedule matches the revival-free campaign exactly
                d_lo, d_hi, frac = cfg.gen_revive
                for ft, v in failures:
                    rt = ft + int(self.rng_event.integers(d_lo, d_hi + 1))
                    if rt < cfg.horizon:
                        events.append(NodeRevival(rt, v, frac))
        if cfg.gen_interference:
            fraction, mult, duration = cfg.gen_interference
            count = round(fraction * cfg.horizon)
            if count > 0:
                times = self.rng_event.choice(np.arange(1, cfg.horizon), size=count,
                                              replace=False)
                for t in sorted(times.tolist()):
                    events.append(InterferenceSpike(int(t), None, None, mult, duration))
        self.events_by_t = defaultdict(list)
        self._event_heap = []
        for ev in events:
            if 0 <= ev.t < cfg.horizon:
                self._schedule_event(ev)

    def _schedule_event(self, ev):
        self.events_by_t[ev.t].append(ev)
        heapq.heappush(self._event_heap, ev.t)

    def _next_event_time(self, t):
        while self._event_heap:
            head = self._event_heap[0]
            if head <= t or head not in self.events_by_t:
                heapq.heappop(self._event_heap)
                continue
            return head
        return None

    def _eps_dict(self):
        d = {}
        for (u, v) in self.graph.edges:
            if (u, v) not in self.disabled_edges:
                d[(u, v)] = float(self.eps_m[u, v])
                d[(v, u)] = float(self.eps_m[v, u])
        return d

    def _lat_dict(self):
        d = {}
        for (u, v) in self.graph.edges:
            d[(u, v)] = float(self.lat_m[u, v])
            d[(v, u)] = float(self.lat_m[v, u])
        return d

    def _planner_view(self):
        live = [u for u in range(self.n) if self.online[u]]
        return GraphView(self.graph, live_nodes=live,
                         disabled_links=self.disabled_edges,
                         latency=self._lat_dict(), eps=self._eps_dict())

    def _energy_map(self):
        return {u: float(self.energy[u]) for u in range(self.n)}

    def _compute_initial_plan(self):
        cfg = self.cfg
        initial = [p for p in self.pieces if self.active[p.piece_id]]
        self.initial_plan = compute_initial_plan(
            self._planner_view(), initial, self._energy_map(), cfg.l_max_ms,
            k=cfg.k_paths, cfg_reserve=cfg.cfg_reserve)

    def _install_initial_plan(self):
        initial = [p for p in self.pieces if self.active[p.piece_id]]
        plan = self.initial_plan
        if self.kind is BaselineKind.DISTR:
            self.agents = {u: NodeAgent(u, self.graph.neighbors(u))
                           for u in range(self.n)}
            for pid, path in plan.paths.items():
                if path:
                    for u in path:
                        self.agents[u].install_path_state(pid, path)
        elif self.kind in (BaselineKind.PDD, BaselineKind.PDD_CR):
            self.table = {p.piece_id: (plan.paths.get(p.piece_id) or (p.source,))
                          for p in initial}
        else:
            self.table = {p.piece_id: rpl_ns_route(p, self.ctrl) for p in initial}
        for u in range(self.n):
            if self.online[u]:
                self._debit(u, 2 * self.eps_cc, CTRL_SPLIT, 0)
                self.metrics.control_messages[0] += 2

    # ------------------------------------------------------------------
    # energy accounting

    def _debit(self, u, amount, split, t):
        actual = min(float(self.energy[u]), float(amount))
        self.energy[u] -= actual
        self.remaining -= actual
        if split == FWD_SPLIT:
            self.metrics.fwd_spend[t] += actual
        elif split == LOCAL_SPLIT:
            self.metrics.local_cfg_spend[t] += actual
        else:
            self.metrics.ctrl_cfg_spend[t] += actual
        self.metrics.node_spend[t, u, split] += actual
        return actual

    def _lifetime(self, u, extra=None):
        if self.energy[u] <= 0:
            return Lifetime(0.0)
        if self.energy[u] <= self.reserve[u]:
            return Lifetime(1.0)
        rates = {}
        if self.kind is BaselineKind.DISTR:
            rates = self.agents[u].active_out_rates(lambda pid: self.rate_of[pid])
        else:
            for pid, path in self.table.items():
                if self.active[pid]:
                    for a, b in zip(path, path[1:]):
                        if a == u:
                            rates[b] = rates.get(b, 0) + self.rate_of[pid]
        if extra:
            for v, r in extra.items():
                rates[v] = rates.get(v, 0) + r
        drain = sum(self.eps_m[u, v] * a for v, a in sorted(rates.items()) if a > 0)
        if drain <= 0:
            return Lifetime.unbounded()
        return Lifetime(float(self.energy[u]) / drain)

    # ------------------------------------------------------------------
    # messaging

    def _send(self, msg, t):
        if msg.dest == CONTROLLER:
            self._debit(msg.sender, self.eps_cc, CTRL_SPLIT, t)
        else:
            self._debit(msg.sender, float(self.eps_m[msg.sender, msg.dest]),
                        LOCAL_SPLIT, t)
        self.metrics.control_messages[t] += 1
        self.msg_queue[t + 1].append(msg)

    def _broadcast(self, msg, t):
        costs = [float(self.eps_m[msg.sender, v])
                 for v in self.graph.neighbors(msg.sender)
                 if self.online[v] and self.enabled[msg.sender, v]]
        self._debit(msg.sender, max(costs) if costs else 0.0, LOCAL_SPLIT, t)
        self.metrics.control_messages[t] += 1
        self.msg_queue[t + 1].append(_Broadcast(msg))

    def _deliverable(self, sender, dest):
        if not self.online[dest]:
            return False
        if dest == self.ctrl or sender == self.ctrl:
            return True
        return bool(self.enabled[sender, dest])

    def _disable_edge(self, u, v):
        self.enabled[u, v] = 0
        self.enabled[v, u] = 0
        self.disabled_edges.add((u, v))
        self.disabled_edges.add((v, u))

    # ------------------------------------------------------------------
    # event phase

    def _event_phase(self, t):
        evs = self.events_by_t.pop(t, None)
        if not evs:
            return
        evs.sort(key=lambda e: (e.__class__.__name__, repr(e)))
        spiked = []
        for ev in evs:
            if isinstance(ev, NodeFailure):
                self._fail_node(t, ev.node)
            elif isinstance(ev, NodeRevival):
                self._revive_node(t, ev.node, ev.fraction)
            elif isinstance(ev, InterferenceSpike):
                s = self._apply_spike(t, ev)
                if s:
                    spiked.append(s)
            elif isinstance(ev, _SpikeReversion):
                self._revert_spike(ev)
            elif isinstance(ev, ConsumerActivation):
                self._activate_pieces(t, ev.pieces)
        for (u, v, old, new, permanent) in spiked:
            if not detect_abnormal_link(new, old):
                continue
            for owner, other in ((u, v), (v, u)):
                if self.online[owner] and self._hop_in_use(owner, other):
                    if self.kind is BaselineKind.DISTR:
                        self.obs_queue[t + 1][owner].append(
                            AbnormalLinkObservation(other, still_abnormal=permanent))
                    elif self.kind is BaselineKind.PDD_CR:
                        self._register_pddcr_trigger(t + 1)

    def _register_pddcr_trigger(self, t):
        """Start a status/compute/swap round unless a pending compute will
        already fold this trigger's state into its plan."""
        if self.pddcr_compute_t is not None and self.pddcr_compute_t >= t:
            return
        if self.pddcr_status_t is not None and self.pddcr_status_t >= t:
            return
        if self.pddcr_status_t is None and self.pddcr_compute_t is None:
            self.pddcr_status_t = t
        else:
            self.pddcr_status_t = coalesce_trigger(self.pddcr_status_t, t)

    def _hop_in_use(self, a, b):
        for path in self._mat_paths.values():
            for x, y in zip(path, path[1:]):
                if x == a and y == b:
                    return True
        return False

    def _fail_node(self, t, u):
        """Scripted hard failure: no farewell messages; upstream nodes
        notice through failed forwarding one interval later."""
        if not self.online[u]:
            raise ValueError(f"cannot fail offline node {u}")
        if self.kind is BaselineKind.DISTR:
            agent = self.agents[u]
            self.snapshots[u] = {pid: (st.next, st.next_pos)
                                 for pid, st in agent.pieces.items()}
            agent.clear_all_state()
            self.dirty = True
        self.online[u] = 0

    def _revive_node(self, t, u, fraction):
        if self.online[u]:
            raise ValueError(f"cannot revive online node {u}")
        if not 0 < fraction <= 1:
            raise ValueError("revival fraction must be in (0, 1]")
        restored = fraction * self.energy0[u]
        delta = restored - float(self.energy[u])
        self.energy[u] = restored
        self.remaining += delta
        self.metrics.injected[t] += delta
        self.online[u] = 1
        self.snapshots.pop(u, None)
        if self.kind is BaselineKind.DISTR:
            self.obs_queue[t][u].append(ReviveObservation())
        elif self.kind is BaselineKind.PDD_CR:
            self._register_pddcr_trigger(t + 1)
        elif self.kind is BaselineKind.RPL_NS:
            self._debit(u, 2 * self.eps_cc, CTRL_SPLIT, t)
            self.metrics.control_messages[t] += 2

    def _apply_spike(self, t, ev):
        u, v = ev.u, ev.v
        if u is None:
            hops = sorted({tuple(sorted((a, b)))
                           for path in self._mat_paths.values()
                           for a, b in zip(path, path[1:])
                           if a != self.ctrl and b != self.ctrl
                           and self.online[a] and self.online[b]
                           and self.enabled[a, b]})
            if not hops:
                return None
            u, v = hops[int(self.rng_event.integers(len(hops)))]
        if not self.graph.has_link(u, v):
            raise ValueError(f"interference on unknown link ({u}, {v})")
        old = float(self.eps_m[u, v])
        self.eps_m[u, v] *= ev.multiplier
        self.eps_m[v, u] *= ev.multiplier
        new = float(self.eps_m[u, v])
        if ev.duration is not None:
            rt = t + ev.duration
            if rt < self.H:
                self._schedule_event(_SpikeReversion(rt, u, v, ev.multiplier))
        return (u, v, old, new, ev.duration is None)

    def _revert_spike(self, ev):
        self.eps_m[ev.u, ev.v] /= ev.multiplier
        self.eps_m[ev.v, ev.u] /= ev.multiplier
        for a, b in ((ev.u, ev.v), (ev.v, ev.u)):
            if (a, b) in self.disabled_edges:
                self.disabled_edges.discard((a, b))
                self.enabled[a, b] = 1

    def _activate_pieces(self, t, new_pieces):
        ids = []
        for p in new_pieces:
            self.active[p.piece_id] = 1
            ids.append(p.piece_id)
        background = {}
        for pid, path in self._mat_paths.items():
            for a, b in zip(path, path[1:]):
                if a != self.ctrl and b != self.ctrl:
                    background.setdefault(a, {})
                    background[a][b] = background[a].get(b, 0) + self.rate_of[pid]
        plan = compute_initial_plan(self._planner_view(), list(new_pieces),
                                    self._energy_map(), self.cfg.l_max_ms,
                                    k=self.cfg.k_paths, cfg_reserve=self.cfg.cfg_reserve,
                                    background_loads=background)
        for p in new_pieces:
            path = plan.paths.get(p.piece_id) or (p.source,)
            if self.kind is BaselineKind.DISTR:
                if len(path) > 1:
                    for u in path:
                        self.agents[u].install_path_state(p.piece_id, path)
            elif self.kind is BaselineKind.RPL_NS:
                self.table[p.piece_id] = rpl_ns_route(p, self.ctrl)
            else:
                self.table[p.piece_id] = path
        for u in range(self.n):
            if self.online[u]:
                self._debit(u, 2 * self.eps_cc, CTRL_SPLIT, t)
                self.metrics.control_messages[t] += 2
        self.dirty = True

    # ------------------------------------------------------------------
    # control phase

    def _control_phase(self, t):
        if self.kind is BaselineKind.PDD_CR and self.pddcr_swap_t == t:
            self.table = self.pddcr_next
            self.pddcr_next = None
            self.pddcr_swap_t = None
            for u in range(self.n):
                if self.online[u]:
                    self._debit(u, self.eps_cc, CTRL_SPLIT, t)
                    self.metrics.control_messages[t] += 1
            self.dirty = True

        inboxes = defaultdict(list)
        for entry in self.msg_queue.pop(t, ()):
            if isinstance(entry, _Broadcast):
                msg = entry.msg
                for v in self.graph.neighbors(msg.sender):
                    if self._deliverable(msg.sender, v):
                        inboxes[v].append(msg)
                    else:
                        self.metrics.lost_control_messages[t] += 1
            else:
                if self._deliverable(entry.sender, entry.dest):
                    inboxes[entry.dest].append(entry)
                else:
                    self.metrics.lost_control_messages[t] += 1
        observations = self.obs_queue.pop(t, {})

        if self.kind is BaselineKind.DISTR:
            ctx = AgentContext(self, t)
            due = set(inboxes) | set(observations)
            for u, agent in self.agents.items():
                if agent.pending or agent.collections or agent.revive_state:
                    if self._agent_deadline(agent) <= t:
                        due.add(u)
            order = self._agent_order if self._agent_order else sorted(due)
            for u in order:
                if u not in due or not self.online[u]:
                    continue
                agent = self.agents[u]
                inbox = sorted(inboxes.get(u, ()), key=sort_key)
                obs = sorted(observations.get(u, ()), key=repr)
                agent.tick(inbox, obs, ctx)
            for u in sorted(due):
                if self.online[u] and self.energy[u] <= self.reserve[u]:
                    self._handle_dying(u, t)

        if self.kind is BaselineKind.PDD_CR:
            if self.pddcr_status_t == t:
                # every online node reports (E_u, eps, l) over the expensive link
                self.pddcr_status_t = None
                for u in range(self.n):
                    if self.online[u]:
                        self._debit(u, self.eps_cc, CTRL_SPLIT, t)
                        self.metrics.control_messages[t] += 1
                self.pddcr_compute_t = t + 1
            if self.pddcr_compute_t == t:
                self.pddcr_compute_t = None
                token = (frozenset(u for u in range(self.n) if self.online[u]),
                         frozenset(self.disabled_edges))
                plan = recompute_plan_central(
                    self._planner_view(),
                    [p for p in self.pieces if self.active[p.piece_id]],
                    self._energy_map(), self.cfg.l_max_ms, k=self.cfg.k_paths,
                    cfg_reserve=self.cfg.cfg_reserve,
                    candidate_cache=self._candidate_cache, cache_token=token)
                self.pddcr_next = {p.piece_id: (plan.paths.get(p.piece_id) or (p.source,))
                                   for p in self.pieces if self.active[p.piece_id]}
                self.pddcr_swap_t = t + 1
                self.metrics.reconfigurations[t] += 1

    def _agent_deadline(self, agent):
        dl = np.inf
        for s in agent.pending.values():
            dl = min(dl, s.deadline)
        for c in agent.collections.values():
            dl = min(dl, c.deadline)
        if agent.revive_state is not None:
            dl = min(dl, agent.revive_state.deadline)
        return dl

    def _handle_dying(self, u, t):
        """A node about to run out: farewell alerts, then offline."""
        if not self.online[u]:
            return
        if self.kind is BaselineKind.DISTR:
            agent = self.agents[u]
            self.snapshots[u] = {pid: (st.next, st.next_pos)
                                 for pid, st in agent.pieces.items()}
            ctx = AgentContext(self, t)
            agent.farewell(ctx)
            self.dirty = True
        elif self.kind is BaselineKind.PDD_CR:
            self._register_pddcr_trigger(t + 1)
        self.online[u] = 0

    # ------------------------------------------------------------------
    # materialization

    def _materialize(self):
        paths = {}
        for p in self.pieces:
            pid = p.piece_id
            if not self.active[pid]:
                paths[pid] = (p.source,)
                continue
            if self.kind is BaselineKind.DISTR:
                paths[pid] = self._chase(pid, p)
            else:
                paths[pid] = self.table.get(pid, (p.source,))
        flat = []
        off = [0]
        changed = []
        for p in self.pieces:
            pid = p.piece_id
            path = paths[pid]
            if self._mat_paths.get(pid) != path:
                changed.append(pid)
            flat.extend(path)
            off.append(len(flat))
        self._mat_paths = paths
        self.path_flat = np.array(flat, dtype=np.int32)
        self.path_off = np.array(off, dtype=np.int32)
        for pid in changed:
            self.exp_fail[pid] = -99
        self.dirty = False

    def _chase(self, pid, piece):
        path = [piece.source]
        seen = {piece.source}
        node = piece.source
        while True:
            st = self.agents[node].pieces.get(pid)
            if st is None or st.next is None:
                break
            nxt = st.next
            if nxt in seen:
                break  # transient routing loop: data dies at the revisit
            path.append(nxt)
            seen.add(nxt)
            node = nxt
            if node == piece.consumer:
                break
        return tuple(path)

    # ------------------------------------------------------------------
    # main loop

    def run(self):
        rate_arr = np.array([p.rate for p in self.pieces], dtype=np.int32)
        consumer_arr = np.array([p.consumer for p in self.pieces], dtype=np.int32)
        piece_lat = np.full(len(self.pieces), np.nan, dtype=np.float64)
        fail_now = np.zeros(len(self.pieces), dtype=np.int32)
        dying = np.zeros(self.n, dtype=np.uint8)
        fwd_node_flat = np.zeros(self.H * self.n, dtype=np.float64)

        t = 0
        while t < self.H:
            self._event_phase(t)
            self._control_phase(t)
            if self.dirty:
                self._materialize()
            n_max = self._stretch_cap(t)
            dying[:] = 0
            n_ran, reason, rem = kernel.run_stretch(
                n_max, t, self.n, self.ctrl,
                self.path_flat, self.path_off, rate_arr, self.active,
                consumer_arr, self.exp_fail, self.lat_m.ravel(), self.eps_m.ravel(),
                self.enabled.ravel(), self.online, self.energy, self.reserve,
                self.cfg.l_max_ms, self.remaining,
                self.metrics.fwd_spend, self.metrics.generated,
                self.metrics.delivered, self.metrics.lost,
                self.metrics.max_latency, self.metrics.violation,
                self.metrics.remaining_total, fwd_node_flat,
                self.metrics.piece_delivered, self.metrics.piece_lost,
                piece_lat, fail_now, dying)
            self.remaining = rem
            t_last = t + n_ran - 1
            self._post_phase(t_last, fail_now, dying)
            self.metrics.remaining_total[t_last] = self.remaining
            if self.check_invariants:
                self._check_quiescent_invariants(t_last)
            t += n_ran

        self.metrics.node_spend[:, :, FWD_SPLIT] += fwd_node_flat.reshape(self.H, self.n)
        self.piece_latency = piece_lat
        return self.metrics

    def _stretch_cap(self, t):
        n = self.H - t
        nxt = self._next_event_time(t)
        if nxt is not None:
            n = min(n, nxt - t)
        if self.msg_queue:
            n = min(n, min(self.msg_queue) - t)
        if self.obs_queue:
            n = min(n, min(self.obs_queue) - t)
        if self.kind is BaselineKind.DISTR:
            for agent in self.agents.values():
                if agent.pending or agent.collections or agent.revive_state:
                    dl = self._agent_deadline(agent)
                    if np.isfinite(dl):
                        n = min(n, int(dl) - t)
        elif self.kind is BaselineKind.PDD_CR:
            for stage_t in (self.pddcr_status_t, self.pddcr_compute_t,
                            self.pddcr_swap_t):
                if stage_t is not None:
                    n = min(n, stage_t - t)
        return max(1, n)

    def _post_phase(self, t_last, fail_now, dying):
        for u in np.nonzero(dying)[0]:
            if self.online[u]:
                self._handle_dying(int(u), t_last)
        for p in self.pieces:
            pid = p.piece_id
            new = int(fail_now[pid])
            if new == self.exp_fail[pid]:
                continue
            self.exp_fail[pid] = new
            if new < 0:
                continue
            lo = self.path_off[pid]
            hi = self.path_off[pid + 1]
            plen = hi - lo
            failing = int(self.path_flat[lo + new])
            dead = int(self.path_flat[lo + new + 1]) if new + 1 < plen else None
            if self.kind is BaselineKind.DISTR and dead is not None \
                    and self.online[failing]:
                target, tpos = None, 0.0
                if dead in self.snapshots:
                    target, tpos = self.snapshots[dead].get(pid, (None, 0.0))
                elif self.online[dead]:
                    st = self.agents[dead].pieces.get(pid)
                    if st is not None:
                        target, tpos = st.next, st.next_pos
                self.obs_queue[t_last + 1][failing].append(
                    LinkDeadObservation(pid, dead, target, tpos))
            elif self.kind is BaselineKind.PDD_CR:
                self._register_pddcr_trigger(t_last + 1)

    # ------------------------------------------------------------------
    # invariants (test support)

    def quiescent(self):
        ready = not self.msg_queue and not self.obs_queue
        if self.kind is BaselineKind.DISTR and ready:
            for agent in self.agents.values():
                if agent.pending or agent.collections or agent.revive_state:
                    return False
        return ready

    def _check_quiescent_invariants(self, t):
        if not self.quiescent():
            return
        for p in self.pieces:
            if not self.active[p.piece_id]:
                continue
            path = (self._chase(p.piece_id, p)
                    if self.kind is BaselineKind.DISTR
                    else self.table.get(p.piece_id, (p.source,)))
            if len(set(path)) != len(path):
                raise AssertionError(
                    f"loop in piece {p.piece_id} path {path} at t={t}")
            if self.kind is BaselineKind.DISTR and path[-1] == p.consumer:
                for a, b in zip(path, path[1:]):
                    st_b = self.agents[b].pieces.get(p.piece_id)
                    if b != p.consumer and (st_b is None or st_b.prev != a):
                        raise AssertionError(
                            f"pointer incoherence on piece {p.piece_id} "
                            f"hop ({a},{b}) at t={t}")


def run_scenario(cfg, seed, kind=None, check_invariants=False):
    """Build and run one simulation; returns its MetricsLog."""
    if kind is None:
        kind = BaselineKind.from_name(cfg.kinds[0])
    sim = Simulation(cfg, seed, kind, check_invariants=check_invariants)
    return sim.run()
