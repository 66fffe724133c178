"""Central planner vs exhaustive oracle."""

import numpy as np
import pytest

from fieldpaths.planner import (GraphView, brute_force_max_min_lifetime,
                                compute_initial_plan, plan_min_lifetime,
                                recompute_plan_central)
from fieldpaths.topology import DataPiece, NetworkGraph, build_grid_topology, validate_path


def make_view(g, live=None, disabled=None):
    lat = {}
    eps = {}
    for (u, v) in g.edges:
        lat[(u, v)] = lat[(v, u)] = g.latency(u, v)
        eps[(u, v)] = eps[(v, u)] = 9.0
    return GraphView(g, live_nodes=live, disabled_links=disabled,
                     latency=lat, eps=eps)


def line5():
    # 0-1-2-3-4 line plus a parallel relay 5 between 1 and 3
    g = NetworkGraph({0: (0, 0), 1: (1, 0), 2: (2, 0), 3: (3, 0), 4: (4, 0),
                      5: (2, 0.5)}, 1.2,
                     latencies={(0, 1): 10, (1, 2): 10, (2, 3): 10, (3, 4): 10,
                                (1, 5): 10, (5, 3): 10})
    return g


class TestComputeInitialPlan:
    def test_avoids_low_energy_node(self):
        g = line5()
        view = make_view(g)
        energies = {u: 100000.0 for u in g.nodes}
        energies[2] = 500.0  # node on the direct route is nearly drained
        pieces = [DataPiece(0, 0, 4, 2)]
        plan = compute_initial_plan(view, pieces, energies, l_max=100.0)
        assert plan.paths[0] == (0, 1, 5, 3, 4)
        oracle = brute_force_max_min_lifetime(view, pieces, energies, 100.0)
        assert oracle.paths[0] == plan.paths[0]

    def test_latency_infeasible_piece_flagged(self):
        g = line5()
        view = make_view(g)
        energies = {u: 1000.0 for u in g.nodes}
        pieces = [DataPiece(0, 0, 4, 1)]
        plan = compute_initial_plan(view, pieces, energies, l_max=25.0)
        assert plan.paths[0] is None

    def test_empty_piece_set(self):
        plan = compute_initial_plan(make_view(line5()), [], {}, 100.0)
        assert plan.paths == {}

    def test_planned_paths_pass_validation(self):
        g = build_grid_topology(3, 6, 2.5, 2.8, 3.76)
        view = make_view(g)
        rng = np.random.default_rng(5)
        energies = {u: float(rng.integers(10_000, 100_000)) for u in g.nodes}
        pieces = [DataPiece(0, 0, 17, 4), DataPiece(1, 5, 12, 2),
                  DataPiece(2, 3, 14, 8)]
        plan = compute_initial_plan(view, pieces, energies, 120.0)
        for piece in pieces:
            path = plan.paths[piece.piece_id]
            assert validate_path(g, path, piece.source, piece.consumer) == []

    def test_determinism(self):
        g = build_grid_topology(2, 4, 2.5, 2.5, 3.0)
        view = make_view(g)
        energies = {u: 50_000.0 for u in g.nodes}
        pieces = [DataPiece(0, 0, 7, 3), DataPiece(1, 4, 3, 3)]
        a = compute_initial_plan(view, pieces, energies, 100.0)
        b = compute_initial_plan(view, pieces, energies, 100.0)
        assert a.paths == b.paths


class TestRecomputeCentral:
    def test_reroutes_around_dead_relay(self):
        g = line5()
        energies = {u: 100000.0 for u in g.nodes}
        pieces = [DataPiece(0, 0, 4, 2)]
        full = recompute_plan_central(make_view(g), pieces, energies, 100.0)
        assert full.paths[0] in ((0, 1, 2, 3, 4), (0, 1, 5, 3, 4))
        view = make_view(g, live={0, 1, 3, 4, 5})
        replan = recompute_plan_central(view, pieces, energies, 100.0)
        assert replan.paths[0] == (0, 1, 5, 3, 4)
        oracle = brute_force_max_min_lifetime(view, pieces, energies, 100.0)
        assert oracle.paths[0] == replan.paths[0]

    def test_no_change_means_identical_plan(self):
        g = line5()
        view = make_view(g)
        energies = {u: 4000.0 for u in g.nodes}
        pieces = [DataPiece(0, 0, 4, 2)]
        assert recompute_plan_central(view, pieces, energies, 100.0).paths == \
            recompute_plan_central(view, pieces, energies, 100.0).paths

    def test_unreachable_consumer_flagged(self):
        g = line5()
        view = make_view(g, live={0, 1, 4})  # 4 cut off
        pieces = [DataPiece(0, 0, 4, 2)]
        plan = recompute_plan_central(view, pieces, {u: 100.0 for u in g.nodes}, 100.0)
        assert plan.paths[0] is None


class TestBruteForce:
    def test_line_unique_path(self):
        g = NetworkGraph({i: (i, 0) for i in range(5)}, 1.2)
        view = make_view(g)
        pieces = [DataPiece(0, 0, 4, 1)]
        plan = brute_force_max_min_lifetime(view, pieces,
                                            {u: 100.0 for u in g.nodes}, 100.0)
        assert plan.paths[0] == (0, 1, 2, 3, 4)

    def test_refuses_large_instance(self):
        g = build_grid_topology(3, 6, 2.5, 2.8, 3.76)
        with pytest.raises(ValueError):
            brute_force_max_min_lifetime(make_view(g), [], {}, 100.0)

    def test_infeasible_budget(self):
        g = line5()
        pieces = [DataPiece(0, 0, 4, 1)]
        plan = brute_force_max_min_lifetime(make_view(g), pieces,
                                            {u: 100.0 for u in g.nodes}, 5.0)
        assert plan.paths[0] is None


def test_greedy_within_20_percent_of_oracle():
    """Randomized 2x3-grid instances: greedy min-lifetime >= 0.8 x oracle."""
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(40):
        g = build_grid_topology(2, 3, 2.5, 2.8, 3.0)
        view = make_view(g)
        energies = {u: float(rng.integers(2_000, 50_000)) for u in g.nodes}
        nodes = list(g.nodes)
        pieces = []
        for pid in range(2):
            s, c = rng.choice(nodes, size=2, replace=False)
            pieces.append(DataPiece(pid, int(s), int(c), int(rng.integers(1, 9))))
        if len({(p.source, p.consumer) for p in pieces}) < 2:
            continue
        oracle = brute_force_max_min_lifetime(view, pieces, energies, 100.0)
        if any(p is None for p in oracle.paths.values()):
            continue
        greedy = compute_initial_plan(view, pieces, energies, 100.0)
        o = plan_min_lifetime(oracle, view, pieces, energies).as_float()
        gr = plan_min_lifetime(greedy, view, pieces, energies).as_float()
        checked += 1
        assert gr >= 0.8 * o, f"greedy {gr} below 0.8x oracle {o}"
    assert checked >= 25
