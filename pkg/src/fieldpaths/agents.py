"""Per-node protocol agents: local path repair without the controller.

Each agent holds only local state: its energy, the previous/next pointer
pair per data piece, and one-time neighborhood knowledge (positions and
neighbor sets of its neighbors, link latencies in its two-hop vicinity).
Repairs bridge around a failed node with a single neighbor when possible
and fall back to a TTL-bounded route discovery otherwise.

Path-position ordinals: the join logic must distinguish whether a node
already on the path sits before or after the joint.  Node ids cannot
encode that, so every node tracks a per-piece position ordinal, seeded
with the planned path index and interpolated at joins; messages that
rewire pointers carry the sender's ordinal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .lifetime import Lifetime
from .messages import (BWD, FWD, Alert, Info, InfoRequest, Join, ModifyPath,
                       PlanUpdate, RouteReply, RouteRequest)


def detect_abnormal_link(eps_now, eps_prev):
    """Trigger rule for a link whose energy cost jumped: relative increase
    above one half, measured against the current cost."""
    if eps_now <= 0:
        raise ValueError("current link cost must be positive")
    return (eps_now - eps_prev) / eps_now > 0.5


@dataclass
class PieceState:
    """Routing state of one data piece at one node; presence of this
    record is the node's membership test for the piece's path."""

    prev: int | None
    next: int | None
    prev_pos: float
    self_pos: float
    next_pos: float


@dataclass(frozen=True)
class LinkDeadObservation:
    """Engine-synthesized detection: transmission to ``dead`` failed.

    Carries the same (piece, node, successor) information an explicit
    farewell alert would have carried, per the dead node's last state.
    """

    piece: int
    dead: int
    target: int | None
    target_pos: float


@dataclass(frozen=True)
class AbnormalLinkObservation:
    """Own-link detection: the cost of (self, v) crossed the trigger."""

    v: int
    still_abnormal: bool  # False for transient spikes already reverted


@dataclass(frozen=True)
class ReviveObservation:
    """Scheduled when the node returns online."""


@dataclass
class _Search:
    search: int
    target: int
    target_pos: float
    deadline: int


@dataclass
class _Collection:
    deadline: int
    routes: list = field(default_factory=list)  # (route tuple, min Lifetime)


@dataclass
class _ReviveState:
    deadline: int
    infos: dict = field(default_factory=dict)


def _interp(origin_pos, target_pos, i, last):
    return origin_pos + (target_pos - origin_pos) * (i / last)


class NodeAgent:
    """State machine for one sensor node running the distributed protocol."""

    def __init__(self, node, neighbors):
        self.node = node
        self.neighbors = tuple(sorted(neighbors))
        self.pieces = {}          # piece_id -> PieceState
        self.pending = {}         # piece_id -> _Search (origin side)
        self.collections = {}     # (origin, search) -> _Collection (target side)
        self.revive_state = None
        self.last_bridge = {}     # piece_id -> (target, target_pos)
        self.last_selected_route = None  # set when acting as discovery target
        self._search_counter = 0

    # ------------------------------------------------------------------
    # plan installation

    def install_path_state(self, piece_id, path):
        """Adopt the planned path: pointers and position ordinals."""
        idx = path.index(self.node)
        prv = path[idx - 1] if idx > 0 else None
        nxt = path[idx + 1] if idx < len(path) - 1 else None
        self.pieces[piece_id] = PieceState(
            prev=prv, next=nxt,
            prev_pos=float(idx - 1), self_pos=float(idx), next_pos=float(idx + 1))

    def clear_all_state(self):
        self.pieces.clear()
        self.pending.clear()
        self.collections.clear()
        self.revive_state = None
        self.last_bridge.clear()

    def active_out_rates(self, rate_of):
        """Aggregate outgoing pieces per interval, keyed by next hop."""
        rates = {}
        for pid, st in self.pieces.items():
            if st.next is not None:
                rates[st.next] = rates.get(st.next, 0) + rate_of(pid)
        return rates

    # ------------------------------------------------------------------
    # main tick

    def tick(self, inbox, observations, ctx):
        for msg in inbox:
            self._dispatch(msg, ctx)
        for obs in observations:
            if isinstance(obs, ReviveObservation):
                self._begin_revive(ctx)
            elif isinstance(obs, AbnormalLinkObservation):
                self._on_abnormal_link(obs, ctx)
            elif isinstance(obs, LinkDeadObservation):
                self._on_link_dead(obs, ctx)
        self._run_timers(ctx)

    def _dispatch(self, msg, ctx):
        if isinstance(msg, Alert):
            self._on_alert(msg, ctx)
        elif isinstance(msg, Join):
            self._join_path(msg.piece, msg.upstream, msg.downstream,
                            msg.upstream_pos, msg.downstream_pos, ctx)
        elif isinstance(msg, ModifyPath):
            self._modify_path(msg, ctx)
        elif isinstance(msg, InfoRequest):
            self._send_info(msg.sender, ctx)
        elif isinstance(msg, Info):
            if self.revive_state is not None:
                self.revive_state.infos[msg.sender] = msg
        elif isinstance(msg, RouteRequest):
            self._on_route_request(msg, ctx)
        elif isinstance(msg, RouteReply):
            self._on_route_reply(msg, ctx)
        elif isinstance(msg, PlanUpdate):
            self._apply_plan_update(msg, ctx)
        else:
            ctx.log_drop("unhandled", msg)

    # ------------------------------------------------------------------
    # failure handling and local path configuration

    def _on_alert(self, msg: Alert, ctx):
        st = self.pieces.get(msg.piece)
        if st is None or st.next != msg.broken:
            ctx.log_drop("stale-alert", msg)
            return
        self._local_path_config(msg.piece, msg.broken, msg.target, msg.target_pos, ctx)

    def _on_link_dead(self, obs: LinkDeadObservation, ctx):
        st = self.pieces.get(obs.piece)
        if st is None or st.next != obs.dead:
            return
        target, target_pos = obs.target, obs.target_pos
        if target is None:
            # the dead node never adopted state; retry the recorded bridge
            recorded = self.last_bridge.get(obs.piece)
            if recorded and recorded[0] != obs.dead:
                target, target_pos = recorded
        self._local_path_config(obs.piece, obs.dead, target, target_pos, ctx)

    def _on_abnormal_link(self, obs: AbnormalLinkObservation, ctx):
        """Deactivate the overpriced link and excise myself from affected
        paths (upstream bridges past me); as a source, bridge myself."""
        affected = sorted(pid for pid, st in self.pieces.items() if st.next == obs.v)
        if not affected:
            return
        if obs.still_abnormal:
            ctx.disable_link(self.node, obs.v)
        for pid in affected:
            st = self.pieces[pid]
            if st.prev is not None:
                ctx.send(Alert(sender=self.node, dest=st.prev, piece=pid,
                               broken=self.node, target=st.next,
                               target_pos=st.next_pos))
                del self.pieces[pid]
                ctx.mark_dirty(pid)
            else:
                # I am the source: repair my own link, nobody replaces me
                self._local_path_config(pid, None, st.next, st.next_pos, ctx)

    def _local_path_config(self, piece, replaced, target, target_pos, ctx):
        """Restore a working path from me to ``target``, replacing
        ``replaced``: one-hop bridge if a neighbor reaches the target at
        no worse latency than the old segment, else bounded discovery."""
        st = self.pieces[piece]
        st.next = None
        ctx.mark_dirty(piece)
        if target is None or target == self.node:
            ctx.count_disconnect(piece)
            return
        self.last_bridge[piece] = (target, target_pos)
        old_lat = ctx.two_hop_latency(self.node, replaced, target)
        budget = (1.0 + ctx.latency_slack) * old_lat
        best = None
        best_key = None
        for cand in self.neighbors:
            if cand in (target, replaced) or not ctx.online(cand):
                continue
            if target not in ctx.neighbors_of(cand):
                continue
            if not ctx.link_enabled(self.node, cand) or not ctx.link_enabled(cand, target):
                continue
            lat = ctx.latency(self.node, cand) + ctx.latency(cand, target)
            if lat > budget:
                continue
            lt = ctx.lifetime_with_extra(cand, {target: ctx.rate_of(piece)})
            key = (-lt.as_float(), lat, cand)
            if best_key is None or key < best_key:
                best_key = key
                best = cand
        if best is not None:
            mid = (st.self_pos + target_pos) / 2.0
            ctx.send(Join(sender=self.node, dest=best, piece=piece,
                          upstream=self.node, downstream=target,
                          upstream_pos=st.self_pos, downstream_pos=target_pos))
            st.next = best
            st.next_pos = mid
            ctx.mark_dirty(piece)
            ctx.count_reconfiguration()
        else:
            self._local_aodv_plus(piece, target, target_pos, ctx)

    def _local_aodv_plus(self, piece, target, target_pos, ctx):
        """TTL-bounded flooded discovery selecting the max-min-lifetime route."""
        st = self.pieces[piece]
        self._search_counter += 1
        window = ctx.aodv_timeout if ctx.aodv_timeout is not None else ctx.ttl
        deadline = ctx.t + 2 * (ctx.ttl + 1) + window + 1
        self.pending[piece] = _Search(self._search_counter, target, target_pos, deadline)
        ctx.broadcast(RouteRequest(sender=self.node, dest=None, piece=piece,
                                   origin=self.node, target=target, ttl=ctx.ttl,
                                   route=(self.node,), min_lifetime=None,
                                   origin_pos=st.self_pos, target_pos=target_pos,
                                   search=self._search_counter))
        ctx.count_reconfiguration()

    def _on_route_request(self, msg: RouteRequest, ctx):
        if self.node == msg.target:
            key = (msg.origin, msg.search)
            coll = self.collections.get(key)
            if coll is None:
                # remaining admissible routes are at most ttl+1 hops, and
                # the first arrival is a shortest one, so the collection
                # window can close after the length gap elapses
                first_len = len(msg.route)
                wait = ctx.aodv_timeout
                if wait is None:
                    wait = max(0, ctx.ttl + 1 - first_len)
                coll = _Collection(deadline=ctx.t + wait)
                self.collections[key] = coll
            lt = Lifetime.unbounded() if msg.min_lifetime is None else Lifetime(msg.min_lifetime)
            coll.routes.append((msg.route, lt, msg.piece, msg.origin_pos, msg.target_pos))
            return
        if self.node in msg.route or msg.ttl <= 0:
            return
        st = self.pieces.get(msg.piece)
        if st is not None and (st.prev is None or st.next is None):
            return  # path endpoints do not relay their own piece's flood
        mine = ctx.lifetime_of(self.node)
        prior = Lifetime.unbounded() if msg.min_lifetime is None else Lifetime(msg.min_lifetime)
        new_min = mine if mine < prior else prior
        ctx.broadcast(RouteRequest(
            sender=self.node, dest=None, piece=msg.piece, origin=msg.origin,
            target=msg.target, ttl=msg.ttl - 1, route=msg.route + (self.node,),
            min_lifetime=None if new_min.is_unbounded else new_min.intervals,
            origin_pos=msg.origin_pos, target_pos=msg.target_pos, search=msg.search))

    def _select_route(self, coll: _Collection):
        """Max-min lifetime, then fewer hops, then lexicographic route."""
        best = None
        best_key = None
        for route, min_lt, _piece, _op, _tp in coll.routes:
            key = (-min_lt.as_float(), len(route), route)
            if best_key is None or key < best_key:
                best_key = key
                best = (route, min_lt)
        return best

    def _finish_collection(self, key, coll, ctx):
        origin, search = key
        route, _lt = self._select_route(coll)
        self.last_selected_route = route
        _r0, _lt0, piece, origin_pos, target_pos = coll.routes[0]
        full = route + (self.node,)
        st = self.pieces.get(piece)
        if st is not None:
            last = len(full) - 1
            st.prev = full[-2]
            st.prev_pos = _interp(origin_pos, target_pos, last - 1, last)
            ctx.mark_dirty(piece)
        ctx.send(RouteReply(sender=self.node, dest=full[-2], piece=piece,
                            route=full, hop_index=len(full) - 2,
                            origin_pos=origin_pos, target_pos=target_pos,
                            search=search))

    def _on_route_reply(self, msg: RouteReply, ctx):
        route = msg.route
        i = msg.hop_index
        if route[i] != self.node:
            ctx.log_drop("misrouted-reply", msg)
            return
        last = len(route) - 1
        if i == 0:
            search = self.pending.get(msg.piece)
            if search is None or search.search != msg.search:
                ctx.log_drop("stale-reply", msg)
                return
            del self.pending[msg.piece]
            st = self.pieces.get(msg.piece)
            if st is not None:
                st.next = route[1]
                st.next_pos = _interp(msg.origin_pos, msg.target_pos, 1, last)
                ctx.mark_dirty(msg.piece)
            return
        # mid-route relay: splice in with the join-case machinery
        pos_i = _interp(msg.origin_pos, msg.target_pos, i, last)
        self._splice_relay(msg.piece, route, i, pos_i, msg.origin_pos,
                           msg.target_pos, ctx)
        ctx.send(RouteReply(sender=self.node, dest=route[i - 1], piece=msg.piece,
                            route=route, hop_index=i - 1,
                            origin_pos=msg.origin_pos, target_pos=msg.target_pos,
                            search=msg.search))

    def _splice_relay(self, piece, route, i, pos_i, origin_pos, target_pos, ctx):
        last = len(route) - 1
        new_prev = route[i - 1]
        new_next = route[i + 1]
        prev_pos = _interp(origin_pos, target_pos, i - 1, last)
        next_pos = _interp(origin_pos, target_pos, i + 1, last)
        st = self.pieces.get(piece)
        if st is None:
            self.pieces[piece] = PieceState(prev=new_prev, next=new_next,
                                            prev_pos=prev_pos, self_pos=pos_i,
                                            next_pos=next_pos)
        elif st.self_pos > origin_pos:
            # already downstream: keep my tail, excise the stale segment
            # between the route target and me
            st.prev = new_prev
            st.prev_pos = prev_pos
            st.self_pos = pos_i
            ctx.send(ModifyPath(sender=self.node, dest=route[last], piece=piece,
                                terminal=self.node, delete=True, direction=FWD))
        else:
            # already upstream of the origin: adopt the route's tail and
            # excise my stale chain down to the origin
            st.next = new_next
            st.next_pos = next_pos
            ctx.send(ModifyPath(sender=self.node, dest=route[0], piece=piece,
                                terminal=self.node, delete=True, direction=BWD))
        ctx.mark_dirty(piece)

    # ------------------------------------------------------------------
    # joining and modifying paths

    def _join_path(self, piece, upstream, downstream, pos_w, pos_v, ctx,
                   inherit_pos=None, suppress_notify=False):
        """Three join cases: fresh relay, rejoin downstream (forward loop),
        rejoin upstream (backward loop)."""
        st = self.pieces.get(piece)
        if st is None:
            pos = (pos_w + pos_v) / 2.0 if inherit_pos is None else inherit_pos
            self.pieces[piece] = PieceState(prev=upstream, next=downstream,
                                            prev_pos=pos_w, self_pos=pos,
                                            next_pos=pos_v)
            if not suppress_notify:
                ctx.send(ModifyPath(sender=self.node, dest=downstream, piece=piece,
                                    terminal=self.node, delete=False, direction=FWD,
                                    sender_pos=pos))
        elif st.self_pos > pos_w:
            st.prev = upstream
            st.prev_pos = pos_w
            st.self_pos = (pos_w + pos_v) / 2.0
            ctx.send(ModifyPath(sender=self.node, dest=downstream, piece=piece,
                                terminal=self.node, delete=True, direction=FWD))
        else:
            st.next = downstream
            st.next_pos = pos_v
            if not suppress_notify:
                ctx.send(ModifyPath(sender=self.node, dest=downstream, piece=piece,
                                    terminal=self.node, delete=False, direction=FWD,
                                    sender_pos=st.self_pos))
            ctx.send(ModifyPath(sender=self.node, dest=upstream, piece=piece,
                                terminal=self.node, delete=True, direction=BWD))
        ctx.mark_dirty(piece)

    def _modify_path(self, msg: ModifyPath, ctx):
        st = self.pieces.get(msg.piece)
        if st is None:
            ctx.log_drop("modify-unknown-piece", msg)
            return
        if msg.delete:
            if self.node == msg.terminal:
                return  # walk absorbed
            follow = st.next if msg.direction == FWD else st.prev
            if follow is not None:
                ctx.send(ModifyPath(sender=self.node, dest=follow, piece=msg.piece,
                                    terminal=msg.terminal, delete=True,
                                    direction=msg.direction))
            del self.pieces[msg.piece]
            ctx.mark_dirty(msg.piece)
        else:
            if msg.direction == FWD:
                st.prev = msg.terminal
                st.prev_pos = msg.sender_pos
            else:
                st.next = msg.terminal
                st.next_pos = msg.sender_pos
                ctx.mark_dirty(msg.piece)

    # ------------------------------------------------------------------
    # revival

    def _begin_revive(self, ctx):
        self.clear_all_state()
        for w in self.neighbors:
            ctx.send(InfoRequest(sender=self.node, dest=w))
        self.revive_state = _ReviveState(deadline=ctx.t + 2)

    def _send_info(self, requester, ctx):
        entries = tuple(
            (pid, st.prev, st.next, st.prev_pos, st.self_pos, st.next_pos)
            for pid, st in sorted(self.pieces.items()))
        mine = ctx.lifetime_of(self.node)
        ctx.send(Info(sender=self.node, dest=requester, entries=entries,
                      lifetime_intervals=None if mine.is_unbounded else mine.intervals,
                      energy=ctx.energy_of(self.node),
                      link_costs=tuple((v, ctx.eps(self.node, v))
                                       for v in self.neighbors)))

    def _finish_revive(self, ctx):
        """Serially (in seeded random order) take over the pieces of any
        neighbor with a shorter lifetime, when I can reach both of its
        path neighbors; then push the updated schedules out."""
        infos = self.revive_state.infos
        self.revive_state = None
        order = list(self.neighbors)
        ctx.shuffle_revive(order)
        my_energy = ctx.energy_of(self.node)
        my_loads = self.active_out_rates(ctx.rate_of)
        est = {}
        for w, info in infos.items():
            est[w] = {
                "energy": info.energy,
                "costs": dict(info.link_costs),
                "loads": {},
                "entries": {e[0]: e for e in info.entries},
            }
            for pid, _prev, nxt, _pp, _sp, _np in info.entries:
                if nxt is not None:
                    est[w]["loads"][nxt] = est[w]["loads"].get(nxt, 0) + ctx.rate_of(pid)
        updates = {}  # dest -> list of (piece, op, node, pos)

        def lifetime_from(energy, loads, costs):
            drain = sum(costs.get(v, 0) * a for v, a in loads.items() if a > 0)
            if energy <= 0:
                return Lifetime(0.0)
            if energy <= ctx.cfg_reserve:
                return Lifetime(1.0)
            if drain <= 0:
                return Lifetime.unbounded()
            return Lifetime(energy / drain)

        my_costs = {v: ctx.eps(self.node, v) for v in self.neighbors}
        for w in order:
            if w not in est:
                continue  # neighbor offline, no info arrived within the window
            t_u = lifetime_from(my_energy, my_loads, my_costs)
            t_w = lifetime_from(est[w]["energy"], est[w]["loads"], est[w]["costs"])
            if not (t_u > t_w):
                continue
            for pid in sorted(est[w]["entries"]):
                _pid, prev_w, next_w, prev_pos, self_pos, next_pos = est[w]["entries"][pid]
                if prev_w is None or next_w is None:
                    continue
                if prev_w not in self.neighbors or next_w not in self.neighbors:
                    continue
                if not ctx.online(prev_w) or not ctx.online(next_w):
                    continue
                if not ctx.link_enabled(prev_w, self.node) or \
                   not ctx.link_enabled(self.node, next_w):
                    continue
                self._join_path(pid, prev_w, next_w, prev_pos, next_pos, ctx,
                                inherit_pos=self_pos, suppress_notify=True)
                updates.setdefault(w, []).append((pid, "clear", None, 0.0))
                updates.setdefault(prev_w, []).append(
                    (pid, "set_next", self.node, self_pos))
                updates.setdefault(next_w, []).append(
                    (pid, "set_prev", self.node, self_pos))
                rate = ctx.rate_of(pid)
                my_loads[next_w] = my_loads.get(next_w, 0) + rate
                est[w]["loads"][next_w] = est[w]["loads"].get(next_w, 0) - rate
                del est[w]["entries"][pid]
                if prev_w in est:
                    pl = est[prev_w]["loads"]
                    pl[w] = pl.get(w, 0) - rate
                    pl[self.node] = pl.get(self.node, 0) + rate
                    if prev_w in self.neighbors and pid in est[prev_w]["entries"]:
                        e = est[prev_w]["entries"][pid]
                        est[prev_w]["entries"][pid] = (
                            e[0], e[1], self.node, e[3], e[4], self_pos)
                t_u = lifetime_from(my_energy, my_loads, my_costs)
                ctx.count_reconfiguration()
        for dest in sorted(updates):
            ctx.send(PlanUpdate(sender=self.node, dest=dest,
                                updates=tuple(updates[dest])))

    def _apply_plan_update(self, msg: PlanUpdate, ctx):
        for piece, op, node, pos in msg.updates:
            st = self.pieces.get(piece)
            if op == "clear":
                if st is not None:
                    del self.pieces[piece]
                    ctx.mark_dirty(piece)
            elif st is None:
                ctx.log_drop("plan-update-unknown-piece", msg)
            elif op == "set_next":
                st.next = node
                st.next_pos = pos
                ctx.mark_dirty(piece)
            elif op == "set_prev":
                st.prev = node
                st.prev_pos = pos

    # ------------------------------------------------------------------
    # timers and farewell

    def _run_timers(self, ctx):
        for key in sorted(self.collections):
            coll = self.collections[key]
            if coll.deadline <= ctx.t:
                self._finish_collection(key, coll, ctx)
                del self.collections[key]
        for pid in sorted(self.pending):
            if self.pending[pid].deadline <= ctx.t:
                del self.pending[pid]
                if pid in self.pieces:
                    ctx.count_disconnect(pid)
        if self.revive_state is not None and self.revive_state.deadline <= ctx.t:
            self._finish_revive(ctx)

    def farewell(self, ctx):
        """Final alerts to every upstream neighbor before disconnecting."""
        for pid in sorted(self.pieces):
            st = self.pieces[pid]
            if st.prev is not None:
                ctx.send(Alert(sender=self.node, dest=st.prev, piece=pid,
                               broken=self.node, target=st.next,
                               target_pos=st.next_pos))
        self.clear_all_state()
