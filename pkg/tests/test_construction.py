import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ap_core import BoundedSet, block_bounds, is_3ap_free
from construction import (
    decide_sets,
    qpoint_witness_split,
    rapid_domination_probe,
    run_rapid_no_w,
    run_w_not_q,
    spade_check,
    spade_dichotomy,
)
from errors import SelectorViolation, StageError, UsageError
from ideals import WeightFunction
from model import FilterBase, GroundFunction, parse_set_spec

M = 1 << 14


# ------------------------------ Block mass ------------------------------

def test_spade_check_rows():
    report = spade_check(parse_set_spec("powers2", 1024), [1, 2])
    assert report.rows[0].block == 0
    assert report.rows[1].block is None
    assert not report.passed
    assert spade_check(BoundedSet.full(1024), range(1, 9)).passed


# ------------------------------ Dichotomy ------------------------------

def test_dichotomy_examples():
    base = FilterBase.frechet(M)
    result = spade_dichotomy(base, BoundedSet(range(16), M), 8)
    assert result.branch == "with-complement"
    assert result.k0 == 17 and result.k0_rule == "total"
    assert spade_dichotomy(base, parse_set_spec("evens", M), 8).branch == "with-A"
    assert spade_dichotomy(base, BoundedSet([], M), 8).branch == "with-complement"


def test_dichotomy_requires_block_mass_on_the_base():
    evens = parse_set_spec("evens", M)
    with pytest.raises(UsageError, match="block-mass"):
        spade_dichotomy(FilterBase([parse_set_spec("powers2", M)], M), evens, 8)
    with pytest.raises(UsageError, match="empty pairwise meet"):
        spade_dichotomy(FilterBase([evens, parse_set_spec("odds", M)], M), evens, 8)
    # each generator carries eight points per block; their meet is 36..39
    base = FilterBase([BoundedSet.interval(0, 40, M), BoundedSet.interval(36, M, M)], M, ["head", "tail"])
    with pytest.raises(UsageError, match="head\\+tail k=5"):
        spade_dichotomy(base, evens, 8)


def test_decide_sets_extends_the_base():
    base = FilterBase.frechet(M)
    sets = [("evens", parse_set_spec("evens", M)), ("small", BoundedSet(range(16), M))]
    grown, results = decide_sets(base, sets, 4)
    assert grown.labels == ("cofinite:0", "evens", "~small")
    assert [r.branch for r in results] == ["with-A", "with-complement"]
    assert grown.check_centred(3)


def _count(S, n):
    return S.count_in(*block_bounds(n))


@pytest.mark.property_based
@given(
    st.lists(st.sampled_from(["full", "evens", "multiples:3", "cofinite:1000"]), min_size=1, max_size=3, unique=True),
    st.lists(st.integers(min_value=0, max_value=M - 1), max_size=200),
    st.sampled_from([None, "evens", "multiples:3", "cofinite:5000"]),
)
@settings(max_examples=300, deadline=None)
def test_dichotomy_rows_are_witnessed(names, sparse, dense):
    """Whichever branch comes back, every row names a block that carries it."""
    base = FilterBase([parse_set_spec(name, M) for name in names], M, names)
    assert all(spade_check(F, range(1, 9)).passed for F in base.generators)
    A = BoundedSet(sparse, M)
    if dense is not None:
        A = A.union(parse_set_spec(dense, M))
    result = spade_dichotomy(base, A, 8)
    by_label = dict(zip(base.labels, base.generators))
    for row in result.rows:
        F = by_label[row.label]
        assert row.holds
        if result.branch == "with-A":
            assert row.block >= result.tail_start
            assert _count(F.intersection(A), row.block) >= row.k
        else:
            lo, hi = block_bounds(row.block)
            F0 = base.generators[result.f0_index]
            meet = F.intersection(F0)
            assert meet.count_in(lo, hi) >= row.k + result.k0
            assert sum(1 for x in meet.slice(lo, hi) if x in A) < result.k0
            outside = sum(1 for x in F.slice(lo, hi) if x not in A)
            assert outside >= row.k


# ------------------------------ Selector split ------------------------------

def test_split_of_a_selector():
    f = GroundFunction("identity", 1024)
    split = qpoint_witness_split(BoundedSet([0, 2, 5, 9, 17, 40], 1024), f)
    assert split.U0 == [0, 5, 17]
    assert split.U1 == [2, 9, 40]
    assert split.image0_free and split.image1_free


def test_split_rejects_non_selectors():
    f = GroundFunction("identity", 1024)
    with pytest.raises(SelectorViolation) as info:
        qpoint_witness_split(BoundedSet([0, 2, 3], 1024), f)
    assert info.value.block == 1 and info.value.members == [2, 3]


@pytest.mark.property_based
@given(st.lists(st.tuples(st.integers(min_value=0, max_value=11), st.integers(min_value=0)),
                unique_by=lambda t: t[0], max_size=12))
@settings(max_examples=500, deadline=None)
def test_split_halves_are_3ap_free(picks):
    U = []
    for n, offset in picks:
        lo, hi = block_bounds(n)
        U.append(lo + offset % (hi - lo))
    split = qpoint_witness_split(BoundedSet(U, 1 << 12), GroundFunction("identity", 1 << 12))
    assert is_3ap_free(split.image0) and is_3ap_free(split.image1)
    assert sorted(split.U0 + split.U1) == sorted(set(U))


def test_domination_probe():
    G = BoundedSet([1, 4, 9, 16, 25], 64)
    assert rapid_domination_probe(G, lambda i: i).threshold == 0
    report = rapid_domination_probe(G, lambda i: 7 * i)
    assert report.first_failure == 1 and report.last_failure == 4
    assert report.threshold is None
    with pytest.raises(UsageError):
        rapid_domination_probe(BoundedSet([], 64), lambda i: i)


# ------------------------------ Stage runs ------------------------------

def test_w_not_q_stages():
    functions = [GroundFunction(kind, M) for kind in ("identity", "block_collapse", "halving")]
    run = run_w_not_q(functions, [1, 2, 3, 4], M, arity=2, margin=2, preprocess_cap=8)
    assert [s.branch for s in run.stages] == ["dense-extension", "existing-generator", "preprocessing-K"]
    assert run.stages[0].ks == [4, 8, 12, 16]
    # one extension by the 16-point greedy set in block 8 covers every smaller k
    assert [s.status for s in run.stages[0].generic.steps] == ["extended", "already-met", "already-met", "already-met"]
    assert run.stages[1].member == [1]
    # halves of 256, 257, 259, 265; 260 would close 128, 129, 130
    assert run.stages[2].preprocess_values == [128, 129, 132]
    assert run.stages[2].generator_added == [256, 257, 258, 259, 264, 265]
    assert run.passed
    assert all(stage.checks["block_mass"] for stage in run.stages)


def test_rapid_single_stage_preprocesses():
    N = 1 << 12
    run = run_rapid_no_w([(GroundFunction("identity", N), WeightFunction.reciprocal())], [1, 2, 3, 4, 5], N,
                         arity=2, margin=2, preprocess_cap=8)
    stage = run.stages[0]
    assert stage.branch == "preprocessing-K"
    assert stage.preprocess_values == [0, 2, 4, 6, 8]
    assert run.passed

    collapse = run_rapid_no_w([(GroundFunction("block_collapse", N), WeightFunction.reciprocal())], [1, 2, 3], N,
                              arity=2, margin=2, preprocess_cap=8)
    assert collapse.stages[0].preprocess_values == [0, 1]
    assert collapse.stages[0].generator_added == [0, 1, 2, 3]


def test_rapid_two_stages():
    pairs = [
        (GroundFunction("identity", M), WeightFunction.reciprocal()),
        (GroundFunction("block_collapse", M), WeightFunction.inverse_sqrt()),
    ]
    run = run_rapid_no_w(pairs, [1, 2, 3, 4, 5], M, arity=2, margin=2, preprocess_cap=8)
    assert [s.branch for s in run.stages] == ["dense-extension", "existing-generator"]
    assert run.stages[0].ks == [2, 4, 6, 8, 10]
    assert run.passed


def test_stage_runs_are_deterministic():
    functions = [GroundFunction(kind, M) for kind in ("identity", "block_collapse")]
    first = run_w_not_q(functions, [1, 2, 3], M, arity=2, margin=2)
    second = run_w_not_q(functions, [1, 2, 3], M, arity=2, margin=2)
    assert first.model_dump() == second.model_dump()


def test_stage_failure_keeps_completed_logs():
    tiny = 64
    functions = [GroundFunction("block_collapse", tiny), GroundFunction("identity", tiny)]
    # ten points share block 5 under collapse; ten of them hold no 3-AP-free ten below 64
    with pytest.raises(StageError) as info:
        run_w_not_q(functions, [10], tiny, arity=1, margin=1)
    assert len(info.value.completed) == 1
    assert info.value.completed[0].generator_added == list(range(32, 42))


def test_empty_schedule_is_a_usage_error():
    with pytest.raises(UsageError):
        run_w_not_q([GroundFunction("identity", M)], [], M)
