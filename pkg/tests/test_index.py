from __future__ import annotations

import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinsqueeze.errors import CapacityError, DomainError
from spinsqueeze.index import (
    MultiIndex,
    canonical_tuples,
    flat_index,
    flat_index_array,
    index_tables,
    multi_index,
    shift_index,
    shift_index_array,
    state_count,
)


def reference_loops(N):
    out = []
    for n_dd in range(N + 1):
        for n_du in range(N - n_dd + 1):
            for n_ud in range(N - n_dd - n_du + 1):
                out.append((N - n_dd - n_du - n_ud, n_ud, n_du, n_dd))
    return out


@pytest.mark.parametrize("N, expected", [(1, 4), (2, 10), (100, 176851)])
def test_state_count_examples(N, expected):
    assert state_count(N) == expected


def test_state_count_matches_enumeration():
    for N in range(1, 31):
        assert state_count(N) == len(reference_loops(N)) == comb(N + 3, 3)


def test_state_count_rejects_bad_sizes():
    with pytest.raises(DomainError):
        state_count(0)
    with pytest.raises(CapacityError):
        state_count(10 ** 7)


def test_small_examples():
    assert flat_index((1, 0, 0, 0), 1) == 0
    assert flat_index((0, 0, 0, 1), 1) == 3
    assert flat_index((0, 2, 0, 0), 2) == 2
    assert multi_index(2, 1) == MultiIndex(0, 0, 1, 0)
    assert multi_index(0, 1) == MultiIndex(1, 0, 0, 0)


def test_enumeration_order_matches_loops():
    for N in range(1, 11):
        assert [tuple(m) for m in canonical_tuples(N)] == reference_loops(N)
        assert [flat_index(m, N) for m in reference_loops(N)] == list(range(state_count(N)))


def test_bijection_exhaustive():
    for N in range(1, 31):
        for i, m in enumerate(reference_loops(N)):
            assert flat_index(m, N) == i
            assert multi_index(i, N) == m


def test_invalid_inputs():
    with pytest.raises(DomainError):
        flat_index((1, 1, 0, 0), 1)
    with pytest.raises(DomainError):
        flat_index((2, -1, 0, 0), 1)
    with pytest.raises(DomainError):
        multi_index(4, 1)
    with pytest.raises(DomainError):
        multi_index(-1, 1)


def test_shift_examples():
    i = flat_index((1, 0, 0, 1), 2)
    assert shift_index(i, (-1, 0, 0, 1), 2) == flat_index((0, 0, 0, 2), 2)
    assert shift_index(i, (0, 0, 0, 0), 2) == i
    assert shift_index(flat_index((0, 0, 0, 1), 1), (1, 0, 0, -1), 1) == flat_index((1, 0, 0, 0), 1)
    assert shift_index(flat_index((0, 0, 0, 1), 1), (0, 0, 0, 1), 1) is None


def test_shift_exhaustive_against_decode_encode():
    deltas = [d for d in itertools.product(range(-2, 3), repeat=4)]
    for N in range(1, 11):
        t = index_tables(N)
        for delta in deltas:
            vec = shift_index_array(t, delta)
            for i, m in enumerate(reference_loops(N)):
                shifted = tuple(a + b for a, b in zip(m, delta))
                valid = all(x >= 0 for x in shifted) and sum(shifted) == N
                expected = flat_index(shifted, N) if valid else None
                assert shift_index(i, delta, N) == expected
                assert vec[i] == (-1 if expected is None else expected)


def test_tables_consistent():
    for N in (1, 2, 7, 40):
        t = index_tables(N)
        tuples = np.array(reference_loops(N))
        np.testing.assert_array_equal(np.column_stack([t.n_uu, t.n_ud, t.n_du, t.n_dd]), tuples)
        np.testing.assert_array_equal(t.diag, [flat_index((l, 0, 0, N - l), N) for l in range(N + 1)])
        np.testing.assert_array_equal(t.partner, flat_index_array(t.n_du, t.n_ud, t.n_dd, N))
        np.testing.assert_array_equal(t.partner[t.partner], np.arange(t.size))
        ls, idx = t.sector_du1
        assert [tuple(multi_index(i, N)) for i in idx] == [(l - 1, 0, 1, N - l) for l in ls]


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 400), st.data())
def test_roundtrip_property(N, data):
    i = data.draw(st.integers(0, state_count(N) - 1))
    m = multi_index(i, N)
    assert m.atoms == N and min(m) >= 0
    assert flat_index(m, N) == i


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 200), st.data())
def test_shift_property(N, data):
    i = data.draw(st.integers(0, state_count(N) - 1))
    a, b = data.draw(st.sampled_from(list(itertools.permutations(range(4), 2))))
    delta = [0, 0, 0, 0]
    delta[a] += 1
    delta[b] -= 1
    m = multi_index(i, N).shifted(delta)
    got = shift_index(i, delta, N)
    if min(m) < 0:
        assert got is None
    else:
        assert multi_index(got, N) == m
