"""
The bounded-universe model: ground functions, partitions, selectors and
filter bases. Infinite sets are represented by their restriction to
[0, universe_bound).
"""
import bisect
import itertools
import json
import logging
from collections import Counter
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from ap_core import BoundedSet, block_bounds, block_count, block_index
from errors import CentrednessError, UsageError
from models import FiniteToOneReport

logger = logging.getLogger(__name__)

FUNCTION_KINDS = ("identity", "block_collapse", "halving", "table")


class GroundFunction:
    """A total map f on [0, universe_bound)."""

    def __init__(self, kind: str, universe_bound: int, table: Optional[Sequence[int]] = None):
        if kind not in FUNCTION_KINDS:
            raise UsageError(f"unknown function kind {kind!r}")
        self.kind = kind
        self.universe_bound = universe_bound
        self._table: Tuple[int, ...] = ()
        self._fibers: Dict[int, List[int]] = {}
        if kind == "table":
            if table is None or len(table) < universe_bound:
                raise UsageError(f"a function table must give a value for every m < {universe_bound}")
            values = tuple(int(v) for v in table[:universe_bound])
            if any(v < 0 for v in values):
                raise UsageError("function table values must be naturals")
            self._table = values
            for m, v in enumerate(values):
                self._fibers.setdefault(v, []).append(m)

    @property
    def name(self) -> str:
        return self.kind.replace("_", "-")

    def __repr__(self) -> str:
        return f"GroundFunction({self.name}, bound={self.universe_bound})"

    @property
    def codomain_bound(self) -> int:
        if self.kind == "table":
            return max(self._table, default=0) + 1
        return max(self.universe_bound, 1)

    def __call__(self, m: int) -> int:
        if self.kind == "identity":
            return m
        if self.kind == "block_collapse":
            return block_index(m)
        if self.kind == "halving":
            return m >> 1
        return self._table[m]

    def image(self, A: Iterable[int]) -> BoundedSet:
        if self.kind == "identity" and isinstance(A, BoundedSet):
            return BoundedSet.from_sorted(A.elements, self.codomain_bound)
        return BoundedSet({self(a) for a in A}, self.codomain_bound)

    def preimage(self, B: Iterable[int]) -> BoundedSet:
        N = self.universe_bound
        values = sorted(set(B))
        if self.kind == "identity":
            return BoundedSet.from_sorted([b for b in values if b < N], N)
        if self.kind == "halving":
            return BoundedSet.from_sorted([m for b in values for m in (2 * b, 2 * b + 1) if m < N], N)
        if self.kind == "block_collapse":
            out: List[int] = []
            for n in values:
                lo, hi = block_bounds(n)
                if lo >= N:
                    break
                out.extend(range(lo, min(hi, N)))
            return BoundedSet.from_sorted(out, N)
        return BoundedSet(itertools.chain.from_iterable(self._fibers.get(b, ()) for b in values), N)

    def fiber(self, value: int) -> BoundedSet:
        return self.preimage((value,))

    def max_fiber(self) -> int:
        N = self.universe_bound
        if N <= 0:
            return 0
        if self.kind == "identity":
            return 1
        if self.kind == "halving":
            return min(2, N)
        if self.kind == "block_collapse":
            return max(min(hi, N) - lo for lo, hi in map(block_bounds, range(block_count(N))))
        return max(Counter(self._table).values())


def validate_finite_to_one(f: GroundFunction, fiber_cap: int) -> FiniteToOneReport:
    largest = f.max_fiber()
    passed = largest <= fiber_cap
    if not passed:
        logger.warning(f"❌ {f.name} has a fiber of size {largest} > cap {fiber_cap}")
    return FiniteToOneReport(
        kind=f.name, universe_bound=f.universe_bound, max_fiber=largest, fiber_cap=fiber_cap, passed=passed
    )


def image(f: GroundFunction, A: Iterable[int]) -> BoundedSet:
    return f.image(A)


def preimage(f: GroundFunction, B: Iterable[int]) -> BoundedSet:
    return f.preimage(B)


# ------------------------------ Partitions ------------------------------

class PartitionSpec:
    """
    A partition of [0, universe_bound) into finite cells: the dyadic blocks,
    their pullback under a ground function, or explicit intervals given by
    their left endpoints.
    """

    def __init__(
        self,
        kind: str,
        universe_bound: int,
        f: Optional[GroundFunction] = None,
        starts: Optional[Sequence[int]] = None,
    ):
        if kind not in ("dyadic", "pullback", "intervals"):
            raise UsageError(f"unknown partition kind {kind!r}")
        if kind == "pullback" and f is None:
            raise UsageError("a pullback partition needs a ground function")
        if kind == "intervals":
            cuts = list(starts or ())
            if not cuts or cuts[0] != 0 or any(b <= a for a, b in zip(cuts, cuts[1:])) or cuts[-1] >= universe_bound:
                raise UsageError("interval starts must begin at 0, increase strictly and stay below the bound")
            starts = cuts
        self.kind = kind
        self.universe_bound = universe_bound
        self.f = f
        self.starts: Tuple[int, ...] = tuple(starts or ())

    @classmethod
    def dyadic(cls, universe_bound: int) -> "PartitionSpec":
        return cls("dyadic", universe_bound)

    @classmethod
    def pullback(cls, f: GroundFunction) -> "PartitionSpec":
        return cls("pullback", f.universe_bound, f=f)

    @classmethod
    def intervals(cls, starts: Sequence[int], universe_bound: int) -> "PartitionSpec":
        return cls("intervals", universe_bound, starts=starts)

    def cell_of(self, m: int) -> int:
        if self.kind == "dyadic":
            return block_index(m)
        if self.kind == "pullback":
            return block_index(self.f(m))
        return bisect.bisect_right(self.starts, m) - 1


def selector_violation(A: Iterable[int], P: PartitionSpec) -> Optional[Tuple[int, List[int]]]:
    """First cell (in order of A) meeting A twice, with the members found in it."""
    seen: Dict[int, int] = {}
    for a in A:
        cell = P.cell_of(a)
        if cell in seen:
            return cell, [seen[cell], a]
        seen[cell] = a
    return None


def is_selector(A: Iterable[int], P: PartitionSpec) -> bool:
    return selector_violation(A, P) is None


# ------------------------------ Filter bases ------------------------------

class FilterBase:
    """Finitely many generators standing in for a filter base."""

    def __init__(self, generators: Sequence[BoundedSet], universe_bound: int, labels: Optional[Sequence[str]] = None):
        if not generators:
            raise UsageError("a filter base needs at least one generator")
        self.generators: Tuple[BoundedSet, ...] = tuple(generators)
        self.universe_bound = universe_bound
        self.labels: Tuple[str, ...] = tuple(labels) if labels else tuple(f"F{i}" for i in range(len(generators)))

    @classmethod
    def frechet(cls, universe_bound: int, tails: Sequence[int] = (0,)) -> "FilterBase":
        gens = [BoundedSet.interval(t, universe_bound, universe_bound) for t in tails]
        return cls(gens, universe_bound, [f"cofinite:{t}" for t in tails])

    def __len__(self) -> int:
        return len(self.generators)

    def extended(self, G: BoundedSet, label: Optional[str] = None) -> "FilterBase":
        return FilterBase(
            self.generators + (G,), self.universe_bound, self.labels + (label or f"F{len(self.generators)}",)
        )

    def meet(self, indices: Sequence[int]) -> BoundedSet:
        if not indices:
            raise UsageError("meet needs at least one generator index")
        for i in indices:
            if not 0 <= i < len(self.generators):
                raise UsageError(f"generator index {i} out of range")
        result = self.generators[indices[0]].intersection(*(self.generators[i] for i in indices[1:]))
        if not result:
            raise CentrednessError(indices, self.universe_bound)
        return result

    def members(self, arity: int) -> List[Tuple[Tuple[int, ...], BoundedSet]]:
        """Distinct nonempty meets of at most `arity` generators, first indices kept."""
        out: List[Tuple[Tuple[int, ...], BoundedSet]] = []
        seen = set()
        for size in range(1, min(arity, len(self.generators)) + 1):
            for indices in itertools.combinations(range(len(self.generators)), size):
                try:
                    S = self.meet(indices)
                except CentrednessError:
                    continue
                if S in seen:
                    continue
                seen.add(S)
                out.append((indices, S))
        return out

    def check_centred(self, arity: int) -> bool:
        for size in range(1, min(arity, len(self.generators)) + 1):
            for indices in itertools.combinations(range(len(self.generators)), size):
                try:
                    self.meet(indices)
                except CentrednessError as e:
                    logger.warning(f"❌ {e.detail}")
                    return False
        return True


# ------------------------------ Named specs ------------------------------

def _ints(args: Sequence[str], spec: str) -> List[int]:
    try:
        return [int(a) for a in args]
    except ValueError:
        raise UsageError(f"malformed set spec {spec!r}")


def _tokens(spec: str) -> Tuple[str, List[str]]:
    parts = [p for p in spec.replace(":", " ").split() if p]
    if not parts:
        raise UsageError("empty set spec")
    name = parts[0].lower().replace("_", "-")
    args = [p for p in parts[1:] if p.lower() != "step"]
    return name, args


def parse_set_spec(spec: Union[str, Sequence[int]], universe_bound: int) -> BoundedSet:
    """
    Named sets restricted to [0, universe_bound): full, empty, evens, odds,
    powers2, multiples:m, cofinite:t, ap-rich:s, interval:a:b, singleton:x,
    list:a,b,... An explicit list of naturals is taken as is.
    """
    N = universe_bound
    if not isinstance(spec, str):
        values = [int(v) for v in spec]
        if any(v < 0 or v >= N for v in values):
            raise UsageError(f"explicit set has elements outside [0, {N})")
        return BoundedSet(values, N)

    if spec.strip().lower().startswith("list:"):
        body = spec.split(":", 1)[1]
        return parse_set_spec(_ints([p for p in body.split(",") if p.strip()], spec), N)

    name, args = _tokens(spec)
    if name == "full":
        return BoundedSet.full(N)
    if name == "empty":
        return BoundedSet.from_sorted((), N)
    if name == "evens":
        return BoundedSet.from_sorted(range(0, N, 2), N)
    if name == "odds":
        return BoundedSet.from_sorted(range(1, N, 2), N)
    if name == "powers2":
        return BoundedSet.from_sorted([1 << i for i in range(max(N.bit_length(), 1)) if 1 << i < N], N)

    nums = _ints(args, spec)
    if name == "multiples" and len(nums) == 1 and nums[0] >= 1:
        return BoundedSet.from_sorted(range(0, N, nums[0]), N)
    if name in ("cofinite", "cofinite-tail") and len(nums) == 1 and nums[0] >= 0:
        return BoundedSet.interval(nums[0], N, N)
    if name == "ap-rich" and len(nums) == 1 and nums[0] >= 1:
        s = nums[0]
        values = set()
        n = 1
        while 1 << n < N:
            values.update(v for v in ((1 << n) + s * i for i in range(n)) if v < N)
            n += 1
        return BoundedSet(values, N)
    if name == "interval" and len(nums) == 2:
        return BoundedSet.interval(nums[0], nums[1], N)
    if name == "singleton" and len(nums) == 1:
        return parse_set_spec(nums, N)
    raise UsageError(f"unknown or malformed set spec {spec!r}")


def parse_function_spec(spec: Union[str, Dict[str, Any], None], universe_bound: int) -> GroundFunction:
    """identity, block-collapse, halving, table:<path> or {"kind": ..., "values": [...]}."""
    if spec is None:
        return GroundFunction("identity", universe_bound)
    if isinstance(spec, dict):
        kind = str(spec.get("kind", "identity")).replace("-", "_")
        if kind != "table":
            return parse_function_spec(kind, universe_bound)
        if "file" in spec:
            return parse_function_spec(f"table:{spec['file']}", universe_bound)
        return GroundFunction("table", universe_bound, spec.get("values"))
    name = spec.strip()
    if name.lower().startswith("table:"):
        path = name.split(":", 1)[1]
        try:
            with open(path, "r", encoding="utf-8") as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"could not read function table {path}: {e}")
        return GroundFunction("table", universe_bound, values)
    kind = name.lower().replace("-", "_")
    if kind not in FUNCTION_KINDS or kind == "table":
        raise UsageError(f"unknown function spec {spec!r}")
    return GroundFunction(kind, universe_bound)
