"""Brute-force oracles the fast routines are checked against."""
from itertools import combinations
from typing import Iterable, Optional, Tuple


def brute_longest_ap(S: Iterable[int]) -> Tuple[int, Optional[Tuple[int, int]]]:
    """Cubic scan over all (start, step) pairs; least (start, step) among the longest."""
    xs = sorted(set(S))
    members = set(xs)
    if not xs:
        return 0, None
    best, key = 1, (xs[0], 1)
    for a, b in combinations(xs, 2):
        d = b - a
        length = 2
        while a + length * d in members:
            length += 1
        if length > best or (length == best and length > 1 and (a, d) < key):
            best, key = length, (a, d)
    return best, key


def brute_has_3ap(S: Iterable[int]) -> bool:
    xs = sorted(set(S))
    return any(b - a == c - b for a, b, c in combinations(xs, 3))


def brute_contains_ap(S: Iterable[int], k: int) -> bool:
    return brute_longest_ap(S)[0] >= k


def block_counts(S: Iterable[int]) -> dict:
    counts: dict = {}
    for x in S:
        n = 0 if x < 2 else x.bit_length() - 1
        counts[n] = counts.get(n, 0) + 1
    return counts
