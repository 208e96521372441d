"""
Arithmetic-progression primitives over bounded sets of naturals, and the
dyadic block partition I_0 = {0, 1}, I_n = [2^n, 2^(n+1)).
"""
import bisect
import logging
from typing import AbstractSet, Iterable, Iterator, List, Optional, Sequence, Tuple

from models import ArithmeticProgression, DyadicBlock

logger = logging.getLogger(__name__)


class BoundedSet:
    """An immutable finite set of naturals below `universe_bound`."""

    __slots__ = ("_elements", "_bound", "_members")

    def __init__(self, elements: Iterable[int] = (), universe_bound: int = 0):
        items = sorted(set(elements))
        if items:
            if items[0] < 0:
                raise ValueError(f"elements must be naturals, got {items[0]}")
            if items[-1] >= universe_bound:
                raise ValueError(f"element {items[-1]} is not below the universe bound {universe_bound}")
        self._elements: Tuple[int, ...] = tuple(items)
        self._bound = universe_bound
        self._members: Optional[AbstractSet[int]] = None

    @classmethod
    def from_sorted(cls, elements: Sequence[int], universe_bound: int) -> "BoundedSet":
        # trusted constructor: elements already strictly increasing and in range
        obj = cls.__new__(cls)
        obj._elements = tuple(elements)
        obj._bound = universe_bound
        obj._members = None
        return obj

    @classmethod
    def interval(cls, lo: int, hi: int, universe_bound: int) -> "BoundedSet":
        lo, hi = max(lo, 0), min(hi, universe_bound)
        obj = cls.from_sorted(range(lo, hi) if lo < hi else (), universe_bound)
        obj._members = range(lo, max(lo, hi))
        return obj

    @classmethod
    def full(cls, universe_bound: int) -> "BoundedSet":
        return cls.interval(0, universe_bound, universe_bound)

    @property
    def elements(self) -> Tuple[int, ...]:
        return self._elements

    @property
    def universe_bound(self) -> int:
        return self._bound

    @property
    def members(self) -> AbstractSet[int]:
        if self._members is None:
            self._members = frozenset(self._elements)
        return self._members

    def __contains__(self, m: object) -> bool:
        return m in self.members

    def __iter__(self) -> Iterator[int]:
        return iter(self._elements)

    def __len__(self) -> int:
        return len(self._elements)

    def __bool__(self) -> bool:
        return bool(self._elements)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, BoundedSet):
            return self._elements == other._elements
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._elements)

    def __repr__(self) -> str:
        shown = ", ".join(str(e) for e in self._elements[:12])
        if len(self._elements) > 12:
            shown += f", ... ({len(self._elements)} elements)"
        return f"BoundedSet({{{shown}}}, bound={self._bound})"

    @property
    def first(self) -> Optional[int]:
        return self._elements[0] if self._elements else None

    @property
    def last(self) -> Optional[int]:
        return self._elements[-1] if self._elements else None

    def to_list(self) -> List[int]:
        return list(self._elements)

    def slice(self, lo: int, hi: int) -> Tuple[int, ...]:
        """Elements in [lo, hi), increasing."""
        i = bisect.bisect_left(self._elements, lo)
        j = bisect.bisect_left(self._elements, hi)
        return self._elements[i:j]

    def count_in(self, lo: int, hi: int) -> int:
        return bisect.bisect_left(self._elements, hi) - bisect.bisect_left(self._elements, lo)

    def above(self, t: int) -> Tuple[int, ...]:
        """Elements strictly greater than t."""
        return self._elements[bisect.bisect_right(self._elements, t):]

    def in_block(self, n: int) -> Tuple[int, ...]:
        lo, hi = block_bounds(n)
        return self.slice(lo, hi)

    def intersection(self, *others: "BoundedSet") -> "BoundedSet":
        result = self
        for other in others:
            if len(other) < len(result):
                result, other = other, result
            members = other.members
            result = BoundedSet.from_sorted([e for e in result if e in members], self._bound)
        return result

    def union(self, *others: Iterable[int]) -> "BoundedSet":
        merged = set(self._elements)
        for other in others:
            merged.update(other)
        return BoundedSet(merged, self._bound)

    def difference(self, other: Iterable[int]) -> "BoundedSet":
        drop = other.members if isinstance(other, BoundedSet) else set(other)
        return BoundedSet.from_sorted([e for e in self._elements if e not in drop], self._bound)

    def complement(self) -> "BoundedSet":
        members = self.members
        return BoundedSet.from_sorted([m for m in range(self._bound) if m not in members], self._bound)

    def issubset(self, other: "BoundedSet") -> bool:
        members = other.members
        return all(e in members for e in self._elements)


# ------------------------------ Dyadic blocks ------------------------------

def block_bounds(n: int) -> Tuple[int, int]:
    if n < 0:
        raise ValueError(f"block index must be a natural, got {n}")
    return (0 if n == 0 else 1 << n), 1 << (n + 1)


def block(n: int) -> DyadicBlock:
    lo, hi = block_bounds(n)
    return DyadicBlock(index=n, lo=lo, hi=hi)


def block_index(m: int) -> int:
    if m < 0:
        raise ValueError(f"block_index needs a natural, got {m}")
    return 0 if m < 2 else m.bit_length() - 1


def block_count(universe_bound: int) -> int:
    """Number of blocks meeting [0, universe_bound)."""
    return block_index(universe_bound - 1) + 1 if universe_bound > 0 else 0


# ------------------------------ Progressions ------------------------------

def least_progression(xs: Sequence[int], members: AbstractSet[int], k: int) -> Optional[ArithmeticProgression]:
    """
    Least (by start, then step) k-term progression with start in the sorted
    sequence `xs` and every term in `members`.
    """
    if k < 1:
        raise ValueError(f"progression length must be >= 1, got {k}")
    if not xs:
        return None
    if k == 1:
        return ArithmeticProgression(start=xs[0], step=1, length=1)
    top = xs[-1]
    n = len(xs)
    for i in range(n):
        a = xs[i]
        if a + (k - 1) > top:
            break
        for j in range(i + 1, n):
            d = xs[j] - a
            if a + (k - 1) * d > top:
                break
            if all(a + t * d in members for t in range(2, k)):
                return ArithmeticProgression(start=a, step=d, length=k)
    return None


def contains_ap(S: BoundedSet, k: int) -> Optional[ArithmeticProgression]:
    return least_progression(S.elements, S.members, k)


def find_ap_in(S: BoundedSet, k: int, min_above: int) -> Optional[ArithmeticProgression]:
    return least_progression(S.above(min_above), S.members, k)


def is_3ap_free(S: Iterable[int]) -> bool:
    values = sorted(set(S))
    members = set(values)
    n = len(values)
    if n < 3:
        return True
    top = values[-1]
    for i in range(n):
        a = values[i]
        for j in range(i + 1, n):
            c = 2 * values[j] - a
            if c > top:
                break
            if c in members:
                return False
    return True


def completes_3ap(v: int, values: AbstractSet[int]) -> bool:
    """Would adding v to a 3-AP-free `values` create a 3-term progression?"""
    for a in values:
        s = a + v
        if s % 2 == 0 and s // 2 in values:
            return True
        if 2 * v - a in values:
            return True
    return False


def longest_ap(S: BoundedSet) -> Tuple[int, Optional[ArithmeticProgression]]:
    """
    Length of the longest progression inside S and its least witness, by
    dynamic programming over pairs (quadratic in |S|).
    """
    xs = S.elements
    n = len(xs)
    if n == 0:
        return 0, None
    if n == 1:
        return 1, ArithmeticProgression(start=xs[0], step=1, length=1)
    gap = xs[1] - xs[0]
    if all(xs[i + 1] - xs[i] == gap for i in range(n - 1)):
        return n, ArithmeticProgression(start=xs[0], step=gap, length=n)

    # ending[j][d] = length of the longest progression with step d ending at xs[j]
    ending: List[dict] = [dict() for _ in range(n)]
    best, best_key = 2, (xs[0], gap)
    for j in range(1, n):
        xj = xs[j]
        row = ending[j]
        for i in range(j):
            d = xj - xs[i]
            length = ending[i].get(d, 1) + 1
            row[d] = length
            if length >= best:
                key = (xj - (length - 1) * d, d)
                if length > best or key < best_key:
                    best, best_key = length, key
    return best, ArithmeticProgression(start=best_key[0], step=best_key[1], length=best)
