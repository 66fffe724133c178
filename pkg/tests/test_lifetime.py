"""Lifetime metric: closed form vs step-wise depletion, epoch bound."""

import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fieldpaths.lifetime import (EnergyState, Lifetime, RateVector,
                                 aggregate_rate, depletion_intervals,
                                 max_epoch_duration, node_lifetime)
from fieldpaths.topology import DataPiece


def lt(remaining, reserve, rates, costs, tau=1.0):
    return node_lifetime(EnergyState(remaining, max(remaining, 1.0), reserve),
                         RateVector(0, rates), costs, tau)


class TestNodeLifetime:
    def test_hand_evaluated_first_case(self):
        # 10 J, one active link at 0.001 J/piece, 2 pieces per interval
        assert lt(10.0, 0.1, {1: 2}, {1: 0.001}).intervals == 5000.0

    def test_zero_energy(self):
        assert lt(0.0, 0.1, {1: 2}, {1: 0.001}).intervals == 0.0

    def test_reserve_grants_one_interval(self):
        assert lt(0.05, 0.1, {1: 2}, {1: 0.001}).intervals == 1.0

    def test_idle_node_unbounded(self):
        out = lt(10.0, 0.1, {}, {})
        assert out.is_unbounded
        assert out.intervals is None  # explicit variant, not a float sentinel

    def test_tau_scales_second_case(self):
        assert lt(0.05, 0.1, {}, {}, tau=3.0).intervals == 3.0

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            EnergyState(-1.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            RateVector(0, {1: -2})
        with pytest.raises(ValueError):
            lt(5.0, 0.1, {1: 2}, {1: -0.5})

    def test_missing_cost_rejected(self):
        with pytest.raises(ValueError):
            lt(5.0, 0.1, {1: 2}, {})


class TestAggregateRate:
    def test_two_active(self):
        pieces = [DataPiece(0, 0, 9, 3), DataPiece(1, 0, 8, 5)]
        acts = {(0, 0, 1): True, (1, 0, 1): True}
        assert aggregate_rate(pieces, acts, 0, 1) == 8

    def test_none_active(self):
        pieces = [DataPiece(0, 0, 9, 3)]
        assert aggregate_rate(pieces, {}, 0, 1) == 0

    def test_arithmetic_series(self):
        pieces = [DataPiece(i, 0, 9, i + 1) for i in range(8)]
        acts = {(i, 0, 1): True for i in range(8)}
        assert aggregate_rate(pieces, acts, 0, 1) == 36


class TestMaxEpochDuration:
    def test_min_over_active(self):
        lts = {0: Lifetime(5000.0), 1: Lifetime(300.0), 2: Lifetime.unbounded()}
        active = {0: True, 1: True, 2: False}
        assert max_epoch_duration(lts, active).intervals == 300.0

    def test_single_active(self):
        assert max_epoch_duration({3: Lifetime(42.0)}, {3: True}).intervals == 42.0

    def test_no_traffic(self):
        assert max_epoch_duration({0: Lifetime.unbounded()}, {0: False}) is None


@given(e=st.floats(1.0, 1e6), eps=st.floats(1e-6, 10.0),
       a=st.integers(1, 50), bump=st.integers(1, 10))
def test_monotonicity_in_rate(e, eps, a, bump):
    base = lt(e, 0.0, {1: a}, {1: eps})
    more = lt(e, 0.0, {1: a + bump}, {1: eps})
    assert more < base


@given(e=st.floats(1.0, 1e6), eps=st.floats(1e-3, 10.0), a=st.integers(1, 50))
def test_scale_invariance(e, eps, a):
    one = lt(e, 0.5, {1: a}, {1: eps})
    two = lt(2 * e, 0.5, {1: a}, {1: 2 * eps})
    assert one.intervals == pytest.approx(two.intervals, rel=1e-12)


@given(st.dictionaries(st.integers(0, 6), st.floats(1.0, 1e5), min_size=1),
       st.sets(st.integers(0, 6)))
def test_epoch_bound_is_min_of_actives(values, active_set):
    lts = {u: Lifetime(v) for u, v in values.items()}
    active = {u: u in active_set for u in lts}
    out = max_epoch_duration(lts, active)
    actives = [lts[u] for u in lts if active[u]]
    if not actives:
        assert out is None
    else:
        assert out == min(actives, key=lambda x: x.as_float())
        assert all(out <= l for l in actives)


def test_depletion_oracle_thousand_instances():
    """Closed form vs step-wise subtraction within one interval, < 5 s."""
    rng = np.random.default_rng(42)
    start = time.time()
    for _ in range(1000):
        e = float(rng.uniform(1.0, 5000.0))
        eps = float(rng.uniform(0.01, 2.0))
        a = int(rng.integers(1, 20))
        drain = eps * a
        if e / drain > 1e6:
            continue
        closed = lt(e, 0.0, {1: a}, {1: eps}).intervals
        stepped = depletion_intervals(e, drain)
        assert abs(closed - stepped) <= 1.0
    assert time.time() - start < 5.0
