"""Topology construction, neighborhoods, path arithmetic."""

import math

import pytest
from hypothesis import given, strategies as st

from fieldpaths.topology import (UNREACHABLE, NetworkGraph, build_grid_topology,
                                 neighborhood, path_latency, validate_path)


def brute_force_edge_count(positions, tx_range):
    """Independent oracle: pairwise-distance enumeration."""
    nodes = sorted(positions)
    count = 0
    for i, u in enumerate(nodes):
        for v in nodes[i + 1:]:
            dx = positions[u][0] - positions[v][0]
            dy = positions[u][1] - positions[v][1]
            if math.hypot(dx, dy) <= tx_range:
                count += 1
    return count


class TestGrid:
    def test_reference_grid_nominal_range(self):
        # at the nominal 3 m range the 2.5 x 2.8 grid has no diagonals
        g = build_grid_topology(3, 6, 2.5, 2.8, 3.0)
        assert len(g.nodes) == 18
        assert len(g.edges) == brute_force_edge_count(g.positions, 3.0) == 27

    def test_reference_grid_reconciled_range(self):
        # published |E| = 47 requires the cell diagonals (3.754 m); the
        # reconciled 3.76 m range yields exactly the published count
        g = build_grid_topology(3, 6, 2.5, 2.8, 3.76)
        assert len(g.nodes) == 18
        assert len(g.edges) == brute_force_edge_count(g.positions, 3.76) == 47

    def test_single_node(self):
        g = build_grid_topology(1, 1, 1, 1, 3.0)
        assert len(g.nodes) == 1
        assert len(g.edges) == 0

    def test_2x2_excludes_diagonal(self):
        g = build_grid_topology(2, 2, 2.5, 2.5, 3.0)
        assert len(g.nodes) == 4
        # diagonal at ~3.54 m stays out
        assert len(g.edges) == 4
        assert not g.has_link(0, 3)

    def test_rejects_bad_dimensions(self):
        with pytest.raises(ValueError):
            build_grid_topology(0, 5, 1, 1, 3)
        with pytest.raises(ValueError):
            build_grid_topology(2, 2, -1, 1, 3)

    def test_row_major_ids(self):
        g = build_grid_topology(2, 3, 1.0, 1.0, 1.5)
        assert g.positions[0] == (0.0, 0.0)
        assert g.positions[2] == (2.0, 0.0)
        assert g.positions[3] == (0.0, 1.0)


class TestNeighborhood:
    def test_corner_node(self):
        g = build_grid_topology(3, 6, 2.5, 2.8, 3.0)
        assert neighborhood(g, 0) == {1, 6}

    def test_interior_node(self):
        g = build_grid_topology(3, 6, 2.5, 2.8, 3.0)
        assert neighborhood(g, 8) == {2, 7, 9, 14}

    def test_isolated_node(self):
        g = build_grid_topology(1, 2, 5.0, 5.0, 3.0)
        assert neighborhood(g, 0) == set()

    def test_unknown_node(self):
        g = build_grid_topology(2, 2, 1, 1, 2)
        with pytest.raises(KeyError):
            neighborhood(g, 99)


class TestPathLatency:
    def g(self):
        return NetworkGraph({0: (0, 0), 1: (1, 0), 2: (2, 0)}, 1.5,
                            latencies={(0, 1): 10.0, (1, 2): 15.0})

    def test_two_hop_sum(self):
        assert path_latency(self.g(), [0, 1, 2]) == 25.0

    def test_single_hop(self):
        assert path_latency(self.g(), [1, 2]) == 15.0

    def test_disconnected_is_unreachable(self):
        g = self.g()
        assert path_latency(g, [0, 2]) == UNREACHABLE
        assert path_latency(g, []) == UNREACHABLE
        assert path_latency(g, [0, 2]) > 100.0  # usable in threshold checks

    def test_additivity(self):
        g = self.g()
        assert path_latency(g, [0, 1, 2]) == \
            path_latency(g, [0, 1]) + path_latency(g, [1, 2])


class TestValidatePath:
    def g(self):
        return NetworkGraph({0: (0, 0), 1: (1, 0), 2: (2, 0)}, 1.5)

    def test_ok(self):
        assert validate_path(self.g(), [0, 1, 2]) == []

    def test_repeated_node(self):
        out = validate_path(self.g(), [0, 1, 0])
        assert any("repeated" in v for v in out)

    def test_non_adjacent(self):
        out = validate_path(self.g(), [0, 2])
        assert any("non-adjacent" in v for v in out)

    def test_endpoint_mismatch(self):
        out = validate_path(self.g(), [0, 1], source=0, consumer=2)
        assert any("consumer" in v for v in out)


@given(rows=st.integers(1, 4), cols=st.integers(1, 5),
       sx=st.floats(0.5, 4.0), sy=st.floats(0.5, 4.0),
       rng=st.floats(0.5, 6.0))
def test_edge_symmetry_and_coherence(rows, cols, sx, sy, rng):
    g = build_grid_topology(rows, cols, sx, sy, rng)
    for u in g.nodes:
        for v in g.neighbors(u):
            assert g.has_link(v, u)
            assert u in g.neighbors(v)
    for (u, v) in g.edges:
        assert v in neighborhood(g, u) and u in neighborhood(g, v)


def test_grid_determinism():
    a = build_grid_topology(3, 6, 2.5, 2.8, 3.76)
    b = build_grid_topology(3, 6, 2.5, 2.8, 3.76)
    assert a.serialize() == b.serialize()
    assert a.edges == b.edges


def test_explicit_links_override_range_rule():
    g = NetworkGraph({0: (0, 0), 1: (10, 0), 2: (20, 0)}, 1.0,
                     explicit_links=[(0, 1), (1, 2)])
    assert g.has_link(0, 1) and g.has_link(2, 1)
    assert not g.has_link(0, 2)
    with pytest.raises(ValueError):
        NetworkGraph({0: (0, 0)}, 1.0, explicit_links=[(0, 5)])
