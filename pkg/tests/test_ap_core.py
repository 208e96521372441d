"""
Tests for the progression primitives and the dyadic block partition.

Fast routines are cross-checked against the brute-force oracles in
oracles.py on small random sets.
"""
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ap_core import (
    BoundedSet,
    block,
    block_bounds,
    block_count,
    block_index,
    completes_3ap,
    contains_ap,
    find_ap_in,
    is_3ap_free,
    least_progression,
    longest_ap,
)
from oracles import brute_contains_ap, brute_has_3ap, brute_longest_ap

SMALL = 1 << 16

small_sets = st.lists(st.integers(min_value=0, max_value=SMALL - 1), max_size=40)


# ------------------------------ BoundedSet ------------------------------

def test_bounded_set_sorts_and_dedupes():
    S = BoundedSet([5, 1, 5, 3], 8)
    assert S.to_list() == [1, 3, 5]
    assert S.first == 1 and S.last == 5
    assert 3 in S and 4 not in S


def test_bounded_set_rejects_out_of_range():
    with pytest.raises(ValueError):
        BoundedSet([8], 8)
    with pytest.raises(ValueError):
        BoundedSet([-1], 8)


def test_interval_and_full():
    assert BoundedSet.interval(3, 7, 64).to_list() == [3, 4, 5, 6]
    assert len(BoundedSet.full(64)) == 64
    assert not BoundedSet.interval(10, 5, 64)


def test_set_operations():
    evens = BoundedSet(range(0, 16, 2), 16)
    threes = BoundedSet(range(0, 16, 3), 16)
    assert evens.intersection(threes).to_list() == [0, 6, 12]
    assert evens.union([1]).to_list()[:3] == [0, 1, 2]
    assert evens.difference(threes).to_list() == [2, 4, 8, 10, 14]
    assert evens.complement().to_list() == list(range(1, 16, 2))
    assert BoundedSet([0, 6], 16).issubset(evens)


def test_slicing_helpers():
    S = BoundedSet([1, 2, 4, 9, 17, 33], 64)
    assert S.slice(2, 17) == (2, 4, 9)
    assert S.count_in(0, 10) == 4
    assert S.above(9) == (17, 33)
    assert S.in_block(4) == (17,)


# ------------------------------ Blocks ------------------------------

def test_block_examples():
    assert block_bounds(0) == (0, 2)
    assert block_bounds(1) == (2, 4)
    assert block_bounds(5) == (32, 64)
    assert block(3).lo == 8 and block(3).hi == 16
    assert [block_index(m) for m in (0, 1, 2, 3, 4, 1023, 1024)] == [0, 0, 1, 1, 2, 9, 10]
    assert block_count(64) == 6
    assert block_count(1 << 20) == 20


def test_block_index_rejects_negative():
    with pytest.raises(ValueError):
        block_index(-1)


@pytest.mark.property_based
@given(st.integers(min_value=0, max_value=(1 << 30) - 1))
@settings(max_examples=500)
def test_blocks_partition_the_naturals(m):
    """Every natural sits in exactly the block its index names."""
    n = block_index(m)
    lo, hi = block_bounds(n)
    assert lo <= m < hi
    if n > 0:
        assert not (block_bounds(n - 1)[0] <= m < block_bounds(n - 1)[1])


# ------------------------------ Progressions ------------------------------

def test_least_progression_examples():
    xs = [1, 2, 3, 5, 7, 9]
    ap = least_progression(xs, set(xs), 3)
    assert (ap.start, ap.step, ap.length) == (1, 1, 3)
    ap = least_progression(xs, set(xs), 4)
    assert (ap.start, ap.step) == (1, 2)
    assert least_progression(xs, set(xs), 6) is None
    assert least_progression([], set(), 2) is None
    assert least_progression([4, 9], {4, 9}, 1).start == 4


def test_least_progression_rejects_zero_length():
    with pytest.raises(ValueError):
        least_progression([1], {1}, 0)


def test_contains_and_find_above():
    S = BoundedSet([0, 1, 2, 10, 20, 30, 40], 64)
    assert contains_ap(S, 3).terms == [0, 1, 2]
    ap = find_ap_in(S, 3, 2)
    assert ap.terms == [10, 20, 30]
    assert find_ap_in(S, 5, 2) is None


def test_longest_ap_examples():
    assert longest_ap(BoundedSet([], 64)) == (0, None)
    assert longest_ap(BoundedSet([7], 64))[0] == 1
    length, ap = longest_ap(BoundedSet([1, 2, 4, 8, 16, 32], 64))
    assert length == 2 and (ap.start, ap.step) == (1, 1)
    length, ap = longest_ap(BoundedSet(range(0, 1024, 7), 1024))
    assert length == 147 and ap.step == 7


def test_is_3ap_free_examples():
    assert is_3ap_free([0, 1, 3, 4, 9, 10, 12, 13])
    assert not is_3ap_free([1, 5, 9])
    assert is_3ap_free([])
    assert is_3ap_free(2 ** i for i in range(12))


@pytest.mark.property_based
@given(small_sets)
@settings(max_examples=500, deadline=None)
def test_longest_ap_matches_oracle(xs):
    """The pair DP agrees with the cubic scan on length and least witness."""
    length, ap = longest_ap(BoundedSet(xs, SMALL))
    expected, key = brute_longest_ap(xs)
    assert length == expected
    if expected:
        assert (ap.start, ap.step) == key


@pytest.mark.property_based
@given(small_sets)
@settings(max_examples=300, deadline=None)
def test_3ap_check_matches_oracle(xs):
    assert is_3ap_free(xs) == (not brute_has_3ap(xs))


@pytest.mark.property_based
@given(st.lists(st.integers(min_value=0, max_value=200), max_size=12), st.integers(min_value=0, max_value=200))
@settings(max_examples=300, deadline=None)
def test_completes_3ap_matches_oracle(xs, v):
    values = set()
    for x in sorted(set(xs)):
        if not brute_has_3ap(sorted(values | {x})):
            values.add(x)
    if v not in values:
        assert completes_3ap(v, values) == brute_has_3ap(sorted(values | {v}))


@pytest.mark.property_based
@given(small_sets, st.integers(min_value=1, max_value=6))
@settings(max_examples=300, deadline=None)
def test_contains_ap_matches_oracle_and_is_monotone(xs, k):
    S = BoundedSet(xs, SMALL)
    found = contains_ap(S, k)
    assert (found is not None) == brute_contains_ap(xs, k)
    if found is not None:
        assert all(t in S for t in found.terms)
        if k > 1:
            assert contains_ap(S, k - 1) is not None


# ------------------------------ Growth facts ------------------------------

def test_progressions_cannot_jump_past_double():
    """a < b < c with c > 2b never forms a 3-term progression (checked below 256)."""
    for b in range(256):
        for c in range(2 * b + 1, 256):
            for a in range(b):
                assert c - b != b - a


def _selector(picks):
    # at most one element per block, below 2^12
    chosen = []
    for n, offset in picks:
        lo, hi = block_bounds(n)
        chosen.append(lo + offset % (hi - lo))
    return sorted(set(chosen))


@pytest.mark.property_based
@given(st.lists(st.tuples(st.integers(min_value=0, max_value=11), st.integers(min_value=0)),
                unique_by=lambda t: t[0], max_size=12))
@settings(max_examples=500, deadline=None)
def test_alternate_halves_of_a_selector_are_3ap_free(picks):
    """Listing a selector increasingly, its even- and odd-indexed halves carry no 3-AP."""
    xs = _selector(picks)
    assert not brute_has_3ap(xs[0::2])
    assert not brute_has_3ap(xs[1::2])
    assert is_3ap_free(xs[0::2]) and is_3ap_free(xs[1::2])
