"""
Dense-set extension for both posets, the generic-chain builder and the
union verifier.

extend_w: given a W-condition L, a set F and k, end-extend L to K whose
image stays 3-AP-free and which has k points of F in one dyadic block.

extend_g: given a G-condition L, end-extend L by a k-term progression of F
whose weights are small enough to keep the budget inequality.

Every choice takes a minimum, so traces replay exactly.
"""
import bisect
import itertools
import logging
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from ap_core import BoundedSet, block_bounds, block_count, block_index, least_progression
from errors import (
    ApForceError,
    GenericRunError,
    InvariantViolation,
    NoProgressionError,
    UniverseExhaustedError,
    UsageError,
)
from ideals import WeightFunction, weight_sum
from model import FilterBase, GroundFunction
from models import DenseSetSpec, ExclusionStep, ExtensionTrace, GenericRun, SpecWitness, StepRecord, rational_str
from posets import (
    Condition,
    budget_cap,
    extends,
    is_condition_g,
    is_condition_w,
    meets_dense_g,
    meets_dense_w,
)

logger = logging.getLogger(__name__)

MONOTONE_KINDS = ("identity", "block_collapse", "halving")


def _as_set(L: Union[Condition, BoundedSet], universe_bound: int) -> BoundedSet:
    if isinstance(L, Condition):
        return L.set
    if isinstance(L, BoundedSet):
        return L
    return BoundedSet(L, universe_bound)


def _fibers_in(F: BoundedSet, f: GroundFunction, n: int) -> Dict[int, List[int]]:
    """value -> increasing preimages, over F ∩ block(n)."""
    out: Dict[int, List[int]] = {}
    for x in F.in_block(n):
        out.setdefault(f(x), []).append(x)
    return out


def _image_size(F: BoundedSet, f: GroundFunction, n: int) -> int:
    if f.kind == "identity":
        return F.count_in(*block_bounds(n))
    if f.kind == "block_collapse":
        return 1 if F.count_in(*block_bounds(n)) else 0
    return len({f(x) for x in F.in_block(n)})


def _survivors(F: BoundedSet, f: GroundFunction, n: int, T: int) -> Sequence[int]:
    """Points of F ∩ block(n) whose value exceeds T."""
    points = F.in_block(n)
    if f.kind == "identity":
        return points[bisect.bisect_right(points, T):]
    if f.kind == "block_collapse":
        return points if n > T else ()
    return [x for x in points if f(x) > T]


# ------------------------------ W extension ------------------------------

def _greedy_values(
    fibers: Dict[int, List[int]], f_l: List[int], L_size: int, T: int, k: int, bounded: bool
) -> Optional[Tuple[List[int], List[ExclusionStep], int]]:
    """k values l_i, each the least admissible value above max B_i."""
    a0 = sorted(v for v in fibers if not bounded or v > T)
    a0_set = set(a0)
    B = list(f_l)
    chosen: List[int] = []
    history: List[ExclusionStep] = []
    for i in range(k):
        top = B[-1] if B else -1
        excluded = {2 * b - a for a, b in itertools.combinations(B, 2)}
        excluded = {c for c in excluded if c > top and c in a0_set}
        bound = (L_size + i) * (L_size + i - 1) // 2
        if len(excluded) > bound:
            raise InvariantViolation(f"exclusion set of size {len(excluded)} exceeds {bound} at step {i}")
        pos = bisect.bisect_right(a0, top)
        value = next((v for v in a0[pos:] if v not in excluded), None)
        if value is None:
            return None
        history.append(ExclusionStep(index=i, excluded=len(excluded), bound=bound, value=value))
        chosen.append(value)
        B.append(value)
    return chosen, history, len(a0)


def extend_w(
    L: Union[Condition, BoundedSet], F: BoundedSet, f: GroundFunction, k: int
) -> Tuple[BoundedSet, ExtensionTrace]:
    N = f.universe_bound
    L = _as_set(L, N)
    if k < 1:
        raise UsageError(f"k must be >= 1, got {k}")
    if not is_condition_w(L, f):
        raise InvariantViolation(f"{L.to_list()} is not a W-condition under {f.name}")

    f_l = sorted({f(x) for x in L})
    M = f_l[-1] if f_l else 0
    T = 3 * M
    n0 = block_index(L.last) if L else -1
    nb = block_count(N)
    above = range(n0 + 1, nb)
    sizes: Dict[int, int] = {}

    def size(n: int) -> int:
        if n not in sizes:
            sizes[n] = _image_size(F, f, n)
        return sizes[n]

    def done(trace_fields: Dict[str, Any], witness: Sequence[int]) -> Tuple[BoundedSet, ExtensionTrace]:
        K = L.union(witness)
        trace = ExtensionTrace(
            flavor="W", k=k, universe_bound=N, L=L.to_list(), threshold=T,
            witness=sorted(witness), K=K.to_list(), **trace_fields,
        )
        _check_w(K, L, F, f, k)
        logger.debug(f"✅ W-extension via {trace.case}/{trace.rule} in block {trace.block}: {len(witness)} new points")
        return K, trace

    # one block with many values: greedy exclusion
    need = T + (len(L) + k) ** 2
    for n in above:
        if size(n) < need:
            continue
        fibers = _fibers_in(F, f, n)
        picked = _greedy_values(fibers, f_l, len(L), T, k, bounded=bool(L))
        if picked is None:
            continue
        values, history, a0_size = picked
        witness = [x for v in values for x in fibers[v]]
        return done(
            dict(case="W-case-II", rule="standard", block=n, a0_size=a0_size, values=values, exclusion_history=history),
            witness,
        )

    # pigeonhole on a block with many points above f^-1[[0, 3M]]
    m = max((size(n) for n in above), default=0)
    need = k * (m + 1)
    for n in above:
        if F.count_in(*block_bounds(n)) < need:
            continue
        survivors = _survivors(F, f, n, T)
        if len(survivors) < need:
            continue
        fibers: Dict[int, List[int]] = {}
        for x in survivors:
            fibers.setdefault(f(x), []).append(x)
        heavy = [v for v, xs in fibers.items() if len(xs) >= k]
        if not heavy:
            continue
        value = min(heavy)
        return done(dict(case="W-case-I", rule="standard", block=n, m=m, values=[value]), fibers[value][:k])

    scan = [{"block": n, "image_size": size(n)} for n in above]
    raise UniverseExhaustedError(
        f"No block above {n0} below {N} admits a W-extension with k={k}", scan=scan
    )


def _check_w(K: BoundedSet, L: BoundedSet, F: BoundedSet, f: GroundFunction, k: int) -> None:
    if not extends(K, L):
        raise InvariantViolation(f"{K.to_list()} does not end-extend {L.to_list()}")
    if not is_condition_w(K, f):
        raise InvariantViolation(f"image of {K.to_list()} holds a 3-term progression")
    if meets_dense_w(K, F, k) is None:
        raise InvariantViolation(f"{K.to_list()} has no block with {k} points of F")


# ------------------------------ G extension ------------------------------

def _ap_above(F: BoundedSet, f: GroundFunction, k: int, floor: int, threshold: int):
    """Least k-AP of points x in F with x > floor and f(x) > threshold."""
    xs = F.above(floor)
    if f.kind == "identity":
        xs = xs[bisect.bisect_right(xs, threshold):]
        return least_progression(xs, F.members, k)
    xs = [x for x in xs if f(x) > threshold]
    # monotone maps keep every later term of F above the threshold
    members = F.members if f.kind in MONOTONE_KINDS else frozenset(xs)
    return least_progression(xs, members, k)


def _standard_threshold(g: WeightFunction, top: Fraction, size: int, k: int, N: int) -> int:
    return g.first_below(top / (2 ** (size + 1) * k), N) - 1


def extend_g(
    L: Union[Condition, BoundedSet], F: BoundedSet, f: GroundFunction, g: WeightFunction, k: int
) -> Tuple[BoundedSet, ExtensionTrace]:
    N = f.universe_bound
    L = _as_set(L, N)
    if k < 1:
        raise UsageError(f"k must be >= 1, got {k}")
    if not is_condition_g(L, f, g):
        raise InvariantViolation(f"{L.to_list()} is not a G-condition under {f.name}/{g.name}")

    if not L:
        ap = least_progression(F.elements, F.members, k)
        if ap is not None and is_condition_g(BoundedSet(ap.terms, N), f, g):
            return _finish_g(L, BoundedSet(ap.terms, N), ap.terms, f, g, k, "standard", -1, F)
        if not F:
            raise NoProgressionError("F is empty", threshold=-1, searched_from=0, universe_bound=N)
        seed = BoundedSet.from_sorted([F.first], N)
        K, inner = extend_g(seed, F, f, g, k)
        trace = inner.model_copy(update={"rule": "bootstrap", "L": []})
        return K, trace

    top = max(g(v) for v in {f(x) for x in L})
    n_l = _standard_threshold(g, top, len(L), k, N)
    ap = _ap_above(F, f, k, L.last, n_l)
    if ap is None:
        raise NoProgressionError(
            f"No {k}-term progression in F above {L.last} with values beyond n_L={n_l} below {N}",
            threshold=n_l,
            searched_from=L.last + 1,
            universe_bound=N,
        )
    return _finish_g(L, L.union(ap.terms), ap.terms, f, g, k, "standard", n_l, F)


def _finish_g(
    L: BoundedSet, K: BoundedSet, witness: List[int], f: GroundFunction, g: WeightFunction,
    k: int, rule: str, threshold: int, F: BoundedSet,
) -> Tuple[BoundedSet, ExtensionTrace]:
    image_k = {f(x) for x in K}
    top = max(g(v) for v in image_k)
    if not extends(K, L):
        raise InvariantViolation(f"{K.to_list()} does not end-extend {L.to_list()}")
    if not is_condition_g(K, f, g):
        raise InvariantViolation(f"{K.to_list()} breaks the weight budget")
    if meets_dense_g(K, F, k) is None:
        raise InvariantViolation(f"{K.to_list()} holds no {k}-term progression of F")
    trace = ExtensionTrace(
        flavor="G",
        case="G",
        rule=rule,
        k=k,
        universe_bound=f.universe_bound,
        L=L.to_list(),
        block=block_index(witness[0]),
        threshold=threshold,
        values=sorted({f(x) for x in witness}),
        witness=list(witness),
        K=K.to_list(),
        budget=rational_str(weight_sum(image_k, g)),
        budget_cap=rational_str(budget_cap(len(K), top)),
    )
    logger.debug(f"✅ G-extension via {rule}: threshold {threshold}, progression {witness}")
    return K, trace


# ------------------------------ Replay ------------------------------

def replay_extension(trace: ExtensionTrace, F: BoundedSet, f: GroundFunction) -> BoundedSet:
    """Recompute K from the recorded block, values and thresholds."""
    N = trace.universe_bound
    L = BoundedSet(trace.L, N)
    if trace.flavor == "W":
        values = set(trace.values)
        points = [x for x in F.in_block(trace.block) if f(x) in values]
        if trace.case == "W-case-II":
            return L.union(points)
        return L.union(points[: trace.k])
    if trace.rule == "standard" and not trace.L:
        ap = least_progression(F.elements, F.members, trace.k)
        return L.union(ap.terms if ap else ())
    if trace.rule == "bootstrap":
        L = BoundedSet.from_sorted([F.first], N)
    ap = _ap_above(F, f, trace.k, L.last, trace.threshold)
    return L.union(ap.terms if ap else ())


# ------------------------------ Generic runs ------------------------------

def build_schedule(base: FilterBase, ks: Iterable[int], flavor: str, arity: int = 1) -> List[DenseSetSpec]:
    """Dense requirements (F, k) for every member of the base up to `arity`."""
    ks = list(ks)
    return [
        DenseSetSpec(generator_index=indices[0], meet_indices=indices[1:], k=k, flavor=flavor)
        for indices, _ in base.members(arity)
        for k in ks
    ]


def run_generic(
    start: Union[Condition, BoundedSet],
    schedule: Sequence[DenseSetSpec],
    base: FilterBase,
    f: GroundFunction,
    g: Optional[WeightFunction] = None,
    flavor: str = "W",
    order: str = "ascending",
) -> GenericRun:
    N = f.universe_bound
    if flavor == "G" and g is None:
        raise UsageError("a G-flavored run needs a weight function")
    current = _as_set(start, N)
    valid = is_condition_w(current, f) if flavor == "W" else is_condition_g(current, f, g)
    if not valid:
        raise UsageError(f"start {current.to_list()} is not a {flavor}-condition")
    for spec in schedule:
        if spec.flavor != flavor:
            raise UsageError(f"schedule entry {spec} does not match flavor {flavor}")

    meets = {spec.indices: base.meet(spec.indices) for spec in schedule}
    if order == "given":
        ordered = list(schedule)
    elif order in ("ascending", "descending"):
        sign = 1 if order == "ascending" else -1
        ordered = sorted(schedule, key=lambda s: (sign * s.k, len(meets[s.indices])))
    else:
        raise UsageError(f"unknown schedule order {order!r}; expected ascending, descending or given")
    logger.info(f"🔄 Generic run ({flavor}, {f.name}): {len(ordered)} dense requirements")

    chain: List[List[int]] = [current.to_list()]
    steps: List[StepRecord] = []
    for spec in ordered:
        F = meets[spec.indices]
        if flavor == "W":
            met = meets_dense_w(current, F, spec.k) is not None
        else:
            met = meets_dense_g(current, F, spec.k) is not None
        if met:
            steps.append(StepRecord(spec=spec, status="already-met"))
            continue
        try:
            if flavor == "W":
                current, trace = extend_w(current, F, f, spec.k)
            else:
                current, trace = extend_g(current, F, f, g, spec.k)
        except ApForceError as e:
            logger.error(f"❌ Generic run stopped at {spec.indices} k={spec.k}: {e.detail}")
            raise GenericRunError(
                f"extension failed for generator {list(spec.indices)} with k={spec.k}: {e.detail}",
                partial_chain=chain,
                cause=e,
            )
        chain.append(current.to_list())
        steps.append(StepRecord(spec=spec, status="extended", trace=trace))

    union = BoundedSet(itertools.chain.from_iterable(chain), N)
    run = _verify_run(flavor, start_list=chain[0], schedule=ordered, meets=meets, chain=chain,
                      steps=steps, union=union, f=f, g=g)
    if not run.passed:
        failed = [name for name, ok in run.checks.items() if not ok]
        logger.error(f"❌ Generic run failed checks: {failed}")
        raise GenericRunError(f"generic run failed checks {failed}", partial_chain=chain)
    logger.info(f"✅ Generic run done: {len(chain)} conditions, |G|={len(union)}")
    return run


def witness_for(spec: DenseSetSpec, G: BoundedSet, F: BoundedSet) -> SpecWitness:
    if spec.flavor == "W":
        n = meets_dense_w(G, F, spec.k)
        count = len([x for x in G.in_block(n) if x in F]) if n is not None else 0
        return SpecWitness(spec=spec, block=n, count=count, valid=n is not None and count >= spec.k)
    ap = meets_dense_g(G, F, spec.k)
    valid = ap is not None and all(x in G and x in F for x in ap.terms)
    return SpecWitness(spec=spec, progression=ap, block=block_index(ap.start) if ap else None, valid=valid)


def _verify_run(flavor, start_list, schedule, meets, chain, steps, union, f, g) -> GenericRun:
    N = f.universe_bound
    conditions = [BoundedSet(c, N) for c in chain]
    checks: Dict[str, bool] = {
        "chain_extends": all(extends(b, a) for a, b in zip(conditions, conditions[1:])),
    }
    weight = cap = None
    if flavor == "W":
        checks["prefix_conditions"] = all(is_condition_w(c, f) for c in conditions)
        checks["union_image_3ap_free"] = is_condition_w(union, f)
    else:
        checks["prefix_conditions"] = all(is_condition_g(c, f, g) for c in conditions)
        total = weight_sum(f.image(union), g)
        limit = 2 * g.max_value(f.codomain_bound)
        checks["union_weight_within_cap"] = total <= limit
        weight, cap = rational_str(total), rational_str(limit)
    witnesses = [witness_for(spec, union, meets[spec.indices]) for spec in schedule]
    checks["dense_witnesses"] = all(w.valid for w in witnesses)
    return GenericRun(
        flavor=flavor,
        universe_bound=N,
        start=start_list,
        schedule=list(schedule),
        chain=chain,
        steps=steps,
        union=union.to_list(),
        witnesses=witnesses,
        checks=checks,
        weight_sum=weight,
        weight_cap=cap,
    )
