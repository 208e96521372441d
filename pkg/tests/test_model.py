import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ap_core import BoundedSet
from errors import CentrednessError, UsageError
from model import (
    FilterBase,
    GroundFunction,
    PartitionSpec,
    image,
    is_selector,
    parse_function_spec,
    parse_set_spec,
    preimage,
    selector_violation,
    validate_finite_to_one,
)

N = 1 << 10


# ------------------------------ Ground functions ------------------------------

def test_named_functions():
    assert GroundFunction("identity", N)(37) == 37
    assert GroundFunction("block_collapse", N)(37) == 5
    assert GroundFunction("halving", N)(37) == 18
    assert GroundFunction("block_collapse", N).name == "block-collapse"


def test_image_and_preimage_examples():
    f = GroundFunction("block_collapse", 64)
    assert image(f, [0, 1, 5, 6, 40]).to_list() == [0, 2, 5]
    assert preimage(f, [1, 5]).to_list() == [2, 3] + list(range(32, 64))
    h = GroundFunction("halving", 64)
    assert preimage(h, [3, 31, 40]).to_list() == [6, 7, 62, 63]


def test_table_function(tmp_path):
    path = tmp_path / "f.json"
    path.write_text(json.dumps([i % 3 for i in range(64)]))
    f = parse_function_spec(f"table:{path}", 64)
    assert f(7) == 1
    assert f.codomain_bound == 3
    assert f.fiber(0).to_list() == list(range(0, 64, 3))
    with pytest.raises(UsageError):
        GroundFunction("table", 64, [0] * 10)


def test_finite_to_one_report():
    assert validate_finite_to_one(GroundFunction("halving", N), 2).passed
    report = validate_finite_to_one(GroundFunction("block_collapse", N), 64)
    assert report.max_fiber == 512
    assert not report.passed


@pytest.mark.property_based
@given(
    st.sampled_from(["identity", "block_collapse", "halving"]),
    st.lists(st.integers(min_value=0, max_value=N - 1), max_size=30),
    st.lists(st.integers(min_value=0, max_value=N - 1), max_size=30),
)
@settings(max_examples=200, deadline=None)
def test_image_preimage_adjunction(kind, A, B):
    """f[A] ⊆ B exactly when A ⊆ f⁻¹[B]."""
    f = GroundFunction(kind, N)
    B = [b for b in B if b < f.codomain_bound]
    inside = set(f.image(A)) <= set(B)
    assert inside == set(A).issubset(set(f.preimage(B)))


# ------------------------------ Partitions and selectors ------------------------------

def test_selector_examples():
    dyadic = PartitionSpec.dyadic(N)
    assert is_selector([0, 2, 4, 8, 16], dyadic)
    assert selector_violation([0, 2, 3], dyadic) == (1, [2, 3])
    cells = PartitionSpec.intervals([0, 10, 20], N)
    assert is_selector([3, 15, 500], cells)
    assert not is_selector([3, 5], cells)


def test_interval_partition_validation():
    with pytest.raises(UsageError):
        PartitionSpec.intervals([1, 10], N)
    with pytest.raises(UsageError):
        PartitionSpec.intervals([0, 10, 10], N)


@pytest.mark.property_based
@given(
    st.sampled_from(["identity", "block_collapse", "halving"]),
    st.lists(st.integers(min_value=0, max_value=N - 1), max_size=20),
)
@settings(max_examples=200, deadline=None)
def test_pullback_selector_matches_block_counts(kind, A):
    """A selects the pullback partition iff no two members share a block after f."""
    f = GroundFunction(kind, N)
    A = sorted(set(A))
    blocks = [PartitionSpec.dyadic(N).cell_of(f(a)) for a in A]
    assert is_selector(A, PartitionSpec.pullback(f)) == (len(blocks) == len(set(blocks)))


# ------------------------------ Filter bases ------------------------------

def test_meet_and_centredness():
    evens = parse_set_spec("evens", 24)
    threes = parse_set_spec("multiples:3", 24)
    base = FilterBase([evens, threes], 24)
    assert base.meet((0, 1)).to_list() == [0, 6, 12, 18]
    assert base.check_centred(2)

    broken = FilterBase([evens, parse_set_spec("odds", 24)], 24)
    with pytest.raises(CentrednessError):
        broken.meet((0, 1))
    assert not broken.check_centred(2)
    assert broken.check_centred(1)


shared = st.lists(st.integers(min_value=0, max_value=63), max_size=30).map(lambda xs: BoundedSet(xs + [7], 64))


@pytest.mark.property_based
@given(shared, shared, shared)
@settings(max_examples=300, deadline=None)
def test_meet_is_a_semilattice(A, B, C):
    """Generators 3 and 4 are A ∩ B and B ∩ C, so both groupings are reachable."""
    base = FilterBase([A, B, C, A.intersection(B), B.intersection(C)], 64)
    assert base.meet((0, 1)) == base.meet((1, 0))
    assert base.meet((0, 0)) == base.meet((0,)) == A
    assert base.meet((3, 2)) == base.meet((0, 4)) == base.meet((0, 1, 2))
    assert 7 in base.meet((0, 1, 2))


def test_members_dedupe_meets():
    full = BoundedSet.full(64)
    evens = parse_set_spec("evens", 64)
    base = FilterBase([full, evens], 64)
    members = base.members(2)
    assert [indices for indices, _ in members] == [(0,), (1,)]


def test_frechet_and_extension():
    base = FilterBase.frechet(64, (0, 10))
    assert base.labels == ("cofinite:0", "cofinite:10")
    grown = base.extended(BoundedSet([11, 12], 64), "G1")
    assert len(grown) == 3 and grown.labels[-1] == "G1"
    with pytest.raises(UsageError):
        base.meet(())
    with pytest.raises(UsageError):
        FilterBase([], 64)


# ------------------------------ Named specs ------------------------------

def test_parse_set_spec_variants():
    assert parse_set_spec("powers2", 64).to_list() == [1, 2, 4, 8, 16, 32]
    assert parse_set_spec("multiples:7", 30).to_list() == [0, 7, 14, 21, 28]
    assert parse_set_spec("cofinite:60", 64).to_list() == [60, 61, 62, 63]
    assert parse_set_spec("cofinite_tail 62", 64).to_list() == [62, 63]
    assert parse_set_spec("interval:3:6", 64).to_list() == [3, 4, 5]
    assert parse_set_spec("singleton:9", 64).to_list() == [9]
    assert parse_set_spec("list:5,1,3", 64).to_list() == [1, 3, 5]
    assert parse_set_spec([2, 4], 64).to_list() == [2, 4]
    assert not parse_set_spec("empty", 64)
    assert parse_set_spec("ap-rich:step:3", 64).to_list() == [2, 4, 7, 8, 11, 14, 16, 19, 22, 25, 32, 35, 38, 41, 44]


def test_parse_set_spec_rejects_garbage():
    for bad in ("multiples:0", "interval:3", "nonsense", "list:1,x", ""):
        with pytest.raises(UsageError):
            parse_set_spec(bad, 64)
    with pytest.raises(UsageError):
        parse_set_spec([64], 64)


def test_parse_function_spec_variants():
    assert parse_function_spec(None, 64).kind == "identity"
    assert parse_function_spec("block-collapse", 64).kind == "block_collapse"
    assert parse_function_spec({"kind": "table", "values": [0] * 64}, 64)(5) == 0
    with pytest.raises(UsageError):
        parse_function_spec("table", 64)
