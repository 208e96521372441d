"""
The two forcing posets over finite conditions K:

  W: f[K] contains no 3-term progression.
  G: sum of g over f[K] <= (2 - 1/2^|K|) * max of g over f[K].

Both are ordered by end-extension. The empty condition belongs to both.
"""
import logging
from fractions import Fraction
from typing import Iterable, Optional

from ap_core import BoundedSet, block_index, contains_ap, is_3ap_free
from ideals import WeightFunction
from model import GroundFunction
from models import ArithmeticProgression

logger = logging.getLogger(__name__)


class Condition:
    """A finite condition tagged with the poset it belongs to."""

    __slots__ = ("set", "poset_tag")

    def __init__(self, K: BoundedSet, poset_tag: str):
        if poset_tag not in ("W", "G"):
            raise ValueError(f"poset tag must be W or G, got {poset_tag!r}")
        self.set = K
        self.poset_tag = poset_tag

    def __repr__(self) -> str:
        return f"Condition({self.poset_tag}, {self.set.to_list()})"


def budget_cap(size: int, top: Fraction) -> Fraction:
    return (2 - Fraction(1, 2 ** size)) * top


def is_condition_w(K: Iterable[int], f: GroundFunction) -> bool:
    return is_3ap_free(f(m) for m in K)


def is_condition_g(K: BoundedSet, f: GroundFunction, g: WeightFunction) -> bool:
    if not K:
        return True
    weights = [g(v) for v in set(f(m) for m in K)]
    # the exponent is the size of the condition, not of its image
    return sum(weights, Fraction(0)) <= budget_cap(len(K), max(weights))


def extends(K: BoundedSet, L: BoundedSet) -> bool:
    if not L:
        return True
    if K == L:
        return True
    if len(K) <= len(L) or not L.issubset(K):
        return False
    added = K.difference(L)
    return added.first > L.last


def meets_dense_w(K: BoundedSet, F: BoundedSet, k: int) -> Optional[int]:
    """Least block n with |K ∩ F ∩ block(n)| >= k."""
    counts = {}
    members = F.members
    for m in K:
        if m in members:
            n = block_index(m)
            counts[n] = counts.get(n, 0) + 1
    hits = [n for n, c in counts.items() if c >= k]
    return min(hits) if hits else None


def meets_dense_g(K: BoundedSet, F: BoundedSet, k: int) -> Optional[ArithmeticProgression]:
    return contains_ap(K.intersection(F), k)
