"""State containers: sparse counts, jump vectors, rate tables, trajectories."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metapop import JumpVector, RateEntry, RateTable, SparseCounts, Trajectory
from metapop.state import as_density, unit_density


class TestSparseCounts:
    def test_zero_entries_dropped_and_total(self):
        x = SparseCounts({0: 3, 2: 0, 5: 4})
        assert x.entries == {0: 3, 5: 4}
        assert x.total == 7
        assert x.width == 6

    def test_negative_index_rejected(self):
        with pytest.raises(ValueError, match="negative type index"):
            SparseCounts({-1: 2})

    def test_negative_count_rejected(self):
        with pytest.raises(ValueError, match="negative count"):
            SparseCounts({1: -2})

    def test_single(self):
        x = SparseCounts.single(3, 10)
        assert x.entries == {3: 10}
        assert x.total == 10

    def test_dense_round_trip(self):
        dense = np.array([2, 0, 5, 1])
        x = SparseCounts.from_dense(dense)
        assert np.array_equal(x.to_dense(4), dense)

    def test_to_dense_width_too_small(self):
        with pytest.raises(ValueError, match="width 2 too small"):
            SparseCounts({3: 1}).to_dense(2)

    def test_to_density(self):
        x = SparseCounts({1: 5})
        assert np.allclose(x.to_density(10.0, 3), [0.0, 0.5, 0.0])

    def test_apply_jump(self):
        x = SparseCounts({1: 3, 2: 1})
        y = x.apply_jump(JumpVector.from_dict({0: 1, 1: -1}))
        assert y.entries == {0: 1, 1: 2, 2: 1}
        assert y.total == x.total

    def test_apply_jump_below_zero_rejected(self):
        x = SparseCounts({1: 1})
        with pytest.raises(ValueError, match="negative count"):
            x.apply_jump(JumpVector.from_dict({1: -2, 0: 1, 2: 1}))

    def test_equality_and_copy(self):
        x = SparseCounts({1: 2})
        y = x.copy()
        assert x == y and x is not y
        assert x != SparseCounts({1: 3})

    @given(st.dictionaries(st.integers(0, 30), st.integers(0, 100), max_size=8))
    @settings(max_examples=50, deadline=None)
    def test_dense_round_trip_property(self, entries):
        x = SparseCounts(entries)
        assert SparseCounts.from_dense(x.to_dense()) == x
        assert x.total == int(x.to_dense().sum())


class TestJumpVector:
    def test_sorted_unique_required(self):
        with pytest.raises(ValueError, match="sorted"):
            JumpVector(((2, 1), (1, -1)))

    def test_zero_delta_rejected(self):
        with pytest.raises(ValueError, match="zero delta"):
            JumpVector(((1, 0),))

    def test_delta_below_minus_two_rejected(self):
        with pytest.raises(ValueError, match="below -2"):
            JumpVector(((1, -3),))

    def test_minus_two_allowed(self):
        J = JumpVector.from_dict({0: 1, 1: -2, 2: 1})
        assert J.mass == 4 and J.net == 0

    def test_from_dict_drops_zeros(self):
        J = JumpVector.from_dict({0: 1, 1: -1, 5: 0})
        assert J.entries == ((0, 1), (1, -1))

    def test_null(self):
        assert JumpVector.from_dict({}).is_null
        assert not JumpVector.from_dict({0: 1}).is_null

    def test_canonical_key_order_independent(self):
        a = JumpVector.from_dict({2: 1, 0: -1})
        b = JumpVector.from_dict({0: -1, 2: 1})
        assert a.canonical_key() == b.canonical_key()
        assert a.canonical_key() != JumpVector.from_dict({0: -1, 3: 1}).canonical_key()

    def test_to_dense(self):
        J = JumpVector.from_dict({0: 1, 2: -1})
        assert np.array_equal(J.to_dense(4), [1, 0, -1, 0])


class TestRateTable:
    def entry(self, rate=1.0, family="down", source=1):
        return RateEntry(JumpVector.from_dict({source - 1: 1, source: -1}),
                         rate, family, source)

    def test_total_and_len(self):
        t = RateTable([self.entry(1.5), self.entry(0.5, source=2)])
        assert len(t) == 2
        assert t.total_rate == pytest.approx(2.0)

    def test_positive_rate_required(self):
        with pytest.raises(ValueError, match="positive rate"):
            RateTable([self.entry(0.0)])

    def test_duplicate_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            RateTable([self.entry(1.0), self.entry(2.0)])

    def test_find(self):
        t = RateTable([self.entry(1.0), self.entry(2.0, source=2)])
        assert t.find("down", 2).rate == 2.0
        assert t.find("down", 9) is None

    def test_drift(self):
        t = RateTable([self.entry(2.0)])  # jump e0 - e1 at rate 2
        assert np.allclose(t.drift(3), [2.0, -2.0, 0.0])


class TestTrajectory:
    def test_alignment_required(self):
        with pytest.raises(ValueError, match="align"):
            Trajectory(np.zeros(2), np.zeros((3, 1), dtype=np.int64), 1, "grid", 0)

    def test_unknown_mode(self):
        with pytest.raises(ValueError, match="unknown recording mode"):
            Trajectory(np.zeros(1), np.zeros((1, 1), dtype=np.int64), 1, "x", 0)

    def test_t_end_defaults_to_last_time(self):
        tr = Trajectory(np.array([0.0, 0.7]),
                        np.zeros((2, 1), dtype=np.int64), 1, "jumps", 1)
        assert tr.t_end == 0.7

    def test_densities(self):
        tr = Trajectory(np.array([0.0]), np.array([[4, 6]]), 10, "grid", 0)
        assert np.allclose(tr.densities(), [[0.4, 0.6]])
        assert tr.final_counts() == SparseCounts({0: 4, 1: 6})


class TestDensityCoercion:
    def test_dict_and_width(self):
        assert np.allclose(as_density({2: 0.5}, width=5), [0, 0, 0.5, 0, 0])

    def test_array_padded(self):
        assert as_density(np.array([1.0]), width=3).size == 3

    def test_two_dimensional_rejected(self):
        with pytest.raises(ValueError, match="one-dimensional"):
            as_density(np.zeros((2, 2)))

    def test_sparse_counts_rejected(self):
        with pytest.raises(TypeError, match="scale"):
            as_density(SparseCounts({0: 1}))

    def test_unit_density(self):
        assert np.allclose(unit_density(2), [0, 0, 1])
        assert np.allclose(unit_density(0, width=3), [1, 0, 0])
