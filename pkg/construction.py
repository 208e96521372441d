"""
Higher-level procedures on filter bases: the block-mass property, the
A-or-complement dichotomy, the selector split, and finite-stage runs of the
two base-building constructions.
"""
import logging
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

import config
from ap_core import BoundedSet, block_bounds, block_count, completes_3ap, contains_ap, is_3ap_free
from dense import build_schedule, run_generic
from errors import ApForceError, InconclusiveError, InvariantViolation, SelectorViolation, StageError, UsageError
from ideals import WeightFunction, weight_within
from model import FilterBase, GroundFunction, PartitionSpec, selector_violation
from models import (
    ConstructionRun,
    DichotomyResult,
    DichotomyRow,
    DominationReport,
    QPointSplit,
    SpadeReport,
    SpadeRow,
    StageLog,
)

logger = logging.getLogger(__name__)

# lexicographic candidates examined by the preprocessing search
PREPROCESS_CANDIDATES = 256


# ------------------------------ Block mass ------------------------------

def spade_check(F: BoundedSet, ks: Iterable[int], label: str = "F") -> SpadeReport:
    """Least block n with |F ∩ block(n)| >= k, per requested k."""
    counts = [F.count_in(*block_bounds(n)) for n in range(block_count(F.universe_bound))]
    rows = []
    for k in ks:
        n = next((i for i, c in enumerate(counts) if c >= k), None)
        rows.append(SpadeRow(label=label, k=k, block=n, count=counts[n] if n is not None else max(counts, default=0)))
    return SpadeReport(universe_bound=F.universe_bound, rows=rows)


def spade_report(members: Sequence[Tuple[str, BoundedSet]], ks: Sequence[int], universe_bound: int) -> SpadeReport:
    rows: List[SpadeRow] = []
    for label, S in members:
        rows.extend(spade_check(S, ks, label).rows)
    return SpadeReport(universe_bound=universe_bound, rows=rows)


# ------------------------------ Dichotomy ------------------------------

def _tail_start(universe_bound: int) -> int:
    bits = universe_bound.bit_length() - 1
    return (bits + 1) // 2


def _with_a_rows(base: FilterBase, A: BoundedSet, k_cap: int, tail: int) -> Tuple[List[DichotomyRow], Optional[int]]:
    rows: List[DichotomyRow] = []
    failing = None
    nb = block_count(base.universe_bound)
    for idx, F in enumerate(base.generators):
        FA = F.intersection(A)
        counts = {n: FA.count_in(*block_bounds(n)) for n in range(tail, nb)}
        for k in range(1, k_cap + 1):
            n = next((i for i in range(tail, nb) if counts[i] >= k), None)
            holds = n is not None
            rows.append(DichotomyRow(
                label=base.labels[idx], k=k, block=n,
                meet_count=F.count_in(*block_bounds(n)) if holds else 0,
                a_count=counts[n] if holds else max(counts.values(), default=0),
                holds=holds,
            ))
            if not holds and failing is None:
                failing = idx
    return rows, failing


def _complement_rows(base: FilterBase, A: BoundedSet, f0: int, k0: int, k_cap: int) -> List[DichotomyRow]:
    F0 = base.generators[f0]
    nb = block_count(base.universe_bound)
    rows = []
    for idx, F in enumerate(base.generators):
        meet = F.intersection(F0)
        for k in range(1, k_cap + 1):
            n = next((i for i in range(nb) if meet.count_in(*block_bounds(i)) >= k + k0), None)
            if n is None:
                rows.append(DichotomyRow(label=base.labels[idx], k=k, meet_count=0, a_count=0, holds=False))
                continue
            lo, hi = block_bounds(n)
            meet_count = meet.count_in(lo, hi)
            a_count = sum(1 for x in meet.slice(lo, hi) if x in A)
            complement_count = sum(1 for x in F.slice(lo, hi) if x not in A)
            # k + k0 points of F ∩ F0, fewer than k0 of them in A: at least k outside A
            holds = meet_count >= k + k0 and a_count < k0 and complement_count >= k
            rows.append(DichotomyRow(
                label=base.labels[idx], k=k, block=n, meet_count=meet_count,
                a_count=a_count, complement_count=complement_count, holds=holds,
            ))
    return rows


def spade_dichotomy(F_base: FilterBase, A: BoundedSet, k_cap: int) -> DichotomyResult:
    """
    Decide whether the base extends by A or by its complement while keeping
    the block-mass property up to k_cap.
    """
    N = F_base.universe_bound
    if not F_base.check_centred(2):
        raise UsageError("base has an empty pairwise meet")
    missing = [
        f"{row.label} k={row.k}"
        for indices, S in F_base.members(2)
        for row in spade_check(S, range(1, k_cap + 1), "+".join(F_base.labels[i] for i in indices)).rows
        if row.block is None
    ]
    if missing:
        raise UsageError(f"base lacks the block-mass property up to k={k_cap}: {', '.join(missing)}")
    tail = _tail_start(N)
    rows, failing = _with_a_rows(F_base, A, k_cap, tail)
    if failing is None:
        logger.info(f"✅ Dichotomy: base extends by A (tail from block {tail})")
        return DichotomyResult(branch="with-A", universe_bound=N, k_cap=k_cap, tail_start=tail, rows=rows)

    F0A = F_base.generators[failing].intersection(A)
    total_k0 = len(F0A) + 1
    block_k0 = 1 + max((F0A.count_in(*block_bounds(n)) for n in range(block_count(N))), default=0)
    table = rows
    for k0, rule in ((total_k0, "total"), (block_k0, "block-max")):
        rows = _complement_rows(F_base, A, failing, k0, k_cap)
        if all(row.holds for row in rows):
            logger.info(f"✅ Dichotomy: base extends by the complement (F0={F_base.labels[failing]}, k0={k0})")
            return DichotomyResult(
                branch="with-complement", universe_bound=N, k_cap=k_cap, tail_start=tail,
                f0_index=failing, k0=k0, k0_rule=rule, rows=rows,
            )
        table = table + rows
        if block_k0 == total_k0:
            break
    logger.warning(f"❌ Dichotomy inconclusive below {N} up to k={k_cap}")
    raise InconclusiveError(f"universe {N} too small to certify either branch up to k={k_cap}", table=table)


def decide_sets(base: FilterBase, sets: Sequence[Tuple[str, BoundedSet]], k_cap: int) -> Tuple[FilterBase, List[DichotomyResult]]:
    """Run the dichotomy set by set, extending the base by A or its complement each time."""
    results = []
    for label, A in sets:
        result = spade_dichotomy(base, A, k_cap)
        if result.branch == "with-A":
            base = base.extended(A, label)
        else:
            base = base.extended(A.complement(), f"~{label}")
        results.append(result)
    return base, results


# ------------------------------ Selector split ------------------------------

def qpoint_witness_split(U: BoundedSet, f: GroundFunction) -> QPointSplit:
    violation = selector_violation(U, PartitionSpec.pullback(f))
    if violation is not None:
        block, members = violation
        raise SelectorViolation(block, members)
    values = f.image(U).to_list()
    even, odd = set(values[0::2]), set(values[1::2])
    image0, image1 = sorted(even), sorted(odd)
    # consecutive even-ranked values sit two blocks apart, so each is more than twice the previous
    free0, free1 = is_3ap_free(image0), is_3ap_free(image1)
    if not (free0 and free1):
        raise InvariantViolation(f"selector split of {U.to_list()} left a 3-term progression")
    return QPointSplit(
        U0=[x for x in U if f(x) in even],
        U1=[x for x in U if f(x) in odd],
        image0=image0,
        image1=image1,
        image0_free=free0,
        image1_free=free1,
    )


def rapid_domination_probe(G: BoundedSet, f_target: Callable[[int], int]) -> DominationReport:
    """Compare the enumeration of G with f_target index by index. A probe only."""
    if not G:
        raise UsageError("domination probe needs a nonempty set")
    failures = [i for i, e in enumerate(G.elements) if e < f_target(i)]
    if not failures:
        return DominationReport(size=len(G), threshold=0)
    last = failures[-1]
    threshold = last + 1 if last + 1 < len(G) else None
    return DominationReport(size=len(G), threshold=threshold, first_failure=failures[0], last_failure=last)


# ------------------------------ Stage runs ------------------------------

def _image_small(S: BoundedSet, f: GroundFunction, g: Optional[WeightFunction], cap: Optional[Fraction]) -> bool:
    if g is None:
        return is_3ap_free(f.image(S))
    return weight_within(f.image(S), g, cap) is not None


def _progressions(S: BoundedSet, k: int, limit: int):
    """k-term progressions inside S in lexicographic (start, step) order."""
    xs, members = S.elements, S.members
    found = 0
    top = xs[-1] if xs else -1
    for i, a in enumerate(xs):
        if k == 1:
            yield [a]
            found += 1
        else:
            for j in range(i + 1, len(xs)):
                d = xs[j] - a
                if a + (k - 1) * d > top:
                    break
                if all(a + t * d in members for t in range(2, k)):
                    yield [a + t * d for t in range(k)]
                    found += 1
                    if found >= limit:
                        return
        if found >= limit:
            return


def _free_block_candidates(S: BoundedSet, f: GroundFunction, k: int, size_cap: int, limit: int):
    """
    Per block, points of S taken value by value in increasing order, skipping
    values that would close a 3-term progression, until k points are in hand.
    """
    for n in range(block_count(S.universe_bound)):
        points = S.in_block(n)
        if len(points) < k:
            continue
        fibers: Dict[int, List[int]] = {}
        for x in points:
            fibers.setdefault(f(x), []).append(x)
        values: Set[int] = set()
        taken: List[int] = []
        for v in sorted(fibers):
            if completes_3ap(v, values):
                continue
            values.add(v)
            if len(values) > size_cap:
                break
            taken.extend(fibers[v])
            if len(taken) >= k:
                yield taken
                limit -= 1
                break
        if limit <= 0:
            return


def _preprocess(
    base: FilterBase, f: GroundFunction, g: Optional[WeightFunction], k_max: int, size_cap: int, weight_cap: Optional[Fraction]
) -> Optional[Tuple[List[int], BoundedSet]]:
    """A finite K with f^-1[K] carrying the witnesses every member needs."""
    total = base.meet(list(range(len(base))))
    if g is None:
        candidates = _free_block_candidates(total, f, k_max, size_cap, PREPROCESS_CANDIDATES)
    else:
        candidates = _progressions(total, k_max, PREPROCESS_CANDIDATES)
    for points in candidates:
        K = f.image(points)
        if len(K) > size_cap:
            continue
        if g is not None and weight_within(K, g, weight_cap) is None:
            continue
        return K.to_list(), f.preimage(K)
    return None


def _run_stages(
    mode: str,
    stages: Sequence[Tuple[GroundFunction, Optional[WeightFunction]]],
    ks: Sequence[int],
    base: FilterBase,
    arity: int,
    margin: int,
    cap: int,
) -> Tuple[List[StageLog], FilterBase]:
    if stages and not ks:
        raise UsageError("schedule ks must be nonempty")
    flavor = "W" if mode == "w-not-q" else "G"
    logs: List[StageLog] = []
    for alpha, (f, g) in enumerate(stages):
        scaled = [k * margin ** (len(stages) - 1 - alpha) for k in ks]
        label = f.name if g is None else f"{f.name}:{g.name}"
        weight_cap = 2 * g.max_value(f.codomain_bound) if g is not None else None
        before = len(base)
        logger.info(f"🔄 Stage {alpha} ({label}): ks {scaled}")
        member = preprocess_values = added = generic = None
        try:
            members = base.members(arity)
            hit = next((indices for indices, S in members if _image_small(S, f, g, weight_cap)), None)
            if hit is not None:
                branch, member = "existing-generator", list(hit)
            elif cap > 0 and (pre := _preprocess(base, f, g, max(scaled), cap, weight_cap)) is not None:
                branch = "preprocessing-K"
                preprocess_values, G = pre
                base = base.extended(G, f"stage{alpha}")
                added = G.to_list()
            else:
                branch = "dense-extension"
                schedule = build_schedule(base, scaled, flavor, arity)
                generic = run_generic(BoundedSet((), base.universe_bound), schedule, base, f, g, flavor, order="descending")
                G = BoundedSet(generic.union, base.universe_bound)
                base = base.extended(G, f"stage{alpha}")
                added = G.to_list()
            log = _stage_checks(alpha, f, g, weight_cap, branch, scaled, cap, ks, base, before, arity)
        except ApForceError as e:
            logger.error(f"❌ Stage {alpha} ({label}) failed: {e.detail}")
            raise StageError(f"stage {alpha} ({label}) failed: {e.detail}", completed=logs, cause=e)
        log = log.model_copy(update=dict(
            member=member, preprocess_values=preprocess_values, generator_added=added, generic=generic,
        ))
        status = "✅" if log.passed else "❌"
        logger.info(f"{status} Stage {alpha} ({label}): {branch}, {len(base)} generators")
        logs.append(log)
    return logs, base


def _stage_checks(alpha, f, g, weight_cap, branch, scaled, cap, ks, base, before, arity) -> StageLog:
    members = base.members(arity)
    checks = {
        "image_condition": any(_image_small(S, f, g, weight_cap) for _, S in members),
        "generator_growth": len(base) - before <= 1,
        "centred": base.check_centred(arity),
    }
    spade = None
    if g is None:
        spade = spade_report([("+".join(base.labels[i] for i in idx), S) for idx, S in members], ks, base.universe_bound)
        checks["block_mass"] = spade.passed
    else:
        checks["ap_sets"] = all(contains_ap(S, max(ks)) is not None for _, S in members)
    return StageLog(
        stage=alpha,
        f=f.name,
        g=g.name if g is not None else None,
        branch=branch,
        ks=scaled,
        search_cap=cap,
        generator_count=len(base),
        spade=spade,
        checks=checks,
    )


def run_w_not_q(
    functions: Sequence[GroundFunction],
    schedule_ks: Sequence[int],
    universe_bound: int,
    seed: Optional[FilterBase] = None,
    arity: Optional[int] = None,
    margin: Optional[int] = None,
    preprocess_cap: int = 0,
    test_set: Optional[BoundedSet] = None,
) -> ConstructionRun:
    """Finite stages of the base that is weakly W-like but not a Q-point."""
    base = seed or FilterBase.frechet(universe_bound)
    logs, final = _run_stages(
        "w-not-q", [(f, None) for f in functions], schedule_ks, base,
        arity or config.meet_arity(), margin or config.witness_margin(), preprocess_cap,
    )
    dichotomy = None
    if test_set is not None:
        dichotomy = spade_dichotomy(final, test_set, max(schedule_ks))
    return ConstructionRun(
        mode="w-not-q", universe_bound=universe_bound, seed=list(base.labels), ks=list(schedule_ks),
        stages=logs, dichotomy=dichotomy,
    )


def run_rapid_no_w(
    pairs: Sequence[Tuple[GroundFunction, WeightFunction]],
    schedule_ks: Sequence[int],
    universe_bound: int,
    seed: Optional[FilterBase] = None,
    arity: Optional[int] = None,
    margin: Optional[int] = None,
    preprocess_cap: Optional[int] = None,
) -> ConstructionRun:
    """Finite stages of the rapid base whose images land in summable ideals."""
    base = seed or FilterBase([BoundedSet.full(universe_bound)], universe_bound, ["full"])
    cap = config.preprocess_cap() if preprocess_cap is None else preprocess_cap
    logs, _ = _run_stages(
        "rapid-no-w", list(pairs), schedule_ks, base,
        arity or config.meet_arity(), margin or config.witness_margin(), cap,
    )
    return ConstructionRun(
        mode="rapid-no-w", universe_bound=universe_bound, seed=list(base.labels), ks=list(schedule_ks), stages=logs,
    )
