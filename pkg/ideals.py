"""
Desk-scale views of the van der Waerden ideal and of summable ideals I_g.

Membership in either ideal is a property of an infinite set, so everything
here is a diagnostic over a bounded window, never a decision.
"""
import json
import logging
import math
from fractions import Fraction
from typing import Any, Dict, Iterable, Mapping, Optional, Union

from pydantic import ValidationError

from ap_core import BoundedSet, is_3ap_free, longest_ap
from errors import DomainError, InvariantViolation, UsageError
from models import IdealDiagnostic, PIdealFamily, PIdealMember, WeightEntry, rational_str

logger = logging.getLogger(__name__)

WEIGHT_KINDS = ("reciprocal", "inverse-sqrt", "table")


def _ceil_sqrt(x: int) -> int:
    return 0 if x == 0 else math.isqrt(x - 1) + 1


class WeightFunction:
    """
    A positive rational weight g. Named families are decreasing with
    g(0) = 1; tables carry explicit values on a finite domain.
    """

    def __init__(self, kind: str, table: Optional[Mapping[int, Fraction]] = None):
        if kind not in WEIGHT_KINDS:
            raise UsageError(f"unknown weight kind {kind!r}; expected one of {', '.join(WEIGHT_KINDS)}")
        if kind == "table":
            if not table:
                raise UsageError("a weight table needs at least one entry")
            if any(Fraction(v) <= 0 for v in table.values()):
                raise UsageError("weight table values must be positive")
        self.kind = kind
        self._table: Dict[int, Fraction] = {int(n): Fraction(v) for n, v in (table or {}).items()}

    @classmethod
    def reciprocal(cls) -> "WeightFunction":
        return cls("reciprocal")

    @classmethod
    def inverse_sqrt(cls) -> "WeightFunction":
        return cls("inverse-sqrt")

    @classmethod
    def from_table(cls, table: Mapping[int, Any]) -> "WeightFunction":
        return cls("table", {n: Fraction(v) for n, v in table.items()})

    @property
    def name(self) -> str:
        return self.kind

    def __repr__(self) -> str:
        if self.kind == "table":
            return f"WeightFunction(table, {len(self._table)} entries)"
        return f"WeightFunction({self.kind})"

    def __call__(self, n: int) -> Fraction:
        if self.kind == "reciprocal":
            return Fraction(1, n + 1)
        if self.kind == "inverse-sqrt":
            return Fraction(1, _ceil_sqrt(n + 1))
        try:
            return self._table[n]
        except KeyError:
            raise DomainError(f"weight table has no value at n={n}")

    def max_value(self, bound: int) -> Fraction:
        """max g(n) over n < bound."""
        if self.kind != "table":
            return Fraction(1)
        values = [v for n, v in self._table.items() if n < bound]
        if not values:
            raise DomainError(f"weight table has no values below {bound}")
        return max(values)

    def first_below(self, b: Fraction, bound: int) -> int:
        """Least n* with g(m) < b for every m in [n*, bound)."""
        b = Fraction(b)
        if b <= 0:
            return bound
        if self.kind == "reciprocal":
            return min(math.floor(1 / b), bound)
        if self.kind == "inverse-sqrt":
            return min(math.floor(1 / b) ** 2, bound)
        for n in sorted((n for n in self._table if n < bound), reverse=True):
            if self._table[n] >= b:
                return n + 1
        return 0


def parse_weight_spec(spec: Union[str, Dict[str, Any], None]) -> WeightFunction:
    """
    "reciprocal", "inverse-sqrt", "table:<path>" or a scenario object
    {"kind": ..., "entries": [...]} / {"kind": "table", "file": ...}.
    """
    if spec is None:
        return WeightFunction.reciprocal()
    if isinstance(spec, dict):
        kind = spec.get("kind", "reciprocal")
        if kind != "table":
            return parse_weight_spec(kind)
        if "file" in spec:
            return load_weight_table(spec["file"])
        return _table_from_entries(spec.get("entries", []))
    name = spec.strip().lower().replace("_", "-")
    if name == "reciprocal":
        return WeightFunction.reciprocal()
    if name in ("inverse-sqrt", "inv-sqrt"):
        return WeightFunction.inverse_sqrt()
    if name.startswith("table:"):
        return load_weight_table(spec.split(":", 1)[1])
    raise UsageError(f"unknown weight spec {spec!r}")


def _table_from_entries(raw: Iterable[Any]) -> WeightFunction:
    try:
        entries = [WeightEntry.model_validate(item) for item in raw]
    except ValidationError as e:
        raise UsageError(f"invalid weight table: {e.errors()[0]['msg']}")
    return WeightFunction.from_table({e.n: Fraction(e.num, e.den) for e in entries})


def load_weight_table(path: str) -> WeightFunction:
    """Weight table file: a JSON array of {"n", "num", "den"}."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"could not read weight table {path}: {e}")
    if not isinstance(raw, list):
        raise UsageError(f"weight table {path} must be a JSON array")
    logger.info(f"🔄 Loaded weight table {path} with {len(raw)} entries")
    return _table_from_entries(raw)


# ------------------------------ Summable ideals ------------------------------

def weight_sum(A: Iterable[int], g: WeightFunction) -> Fraction:
    return sum((g(a) for a in A), Fraction(0))


def weight_within(A: Iterable[int], g: WeightFunction, cap: Fraction) -> Optional[Fraction]:
    """Exact weight of A if it does not exceed cap, else None (stops early)."""
    total = Fraction(0)
    for a in A:
        total += g(a)
        if total > cap:
            return None
    return total


def tallness_probe(g: WeightFunction, horizon: int, eps: Fraction) -> bool:
    """True iff g(n) < eps on [horizon/2, horizon). A probe, not a limit."""
    eps = Fraction(eps)
    lo = horizon // 2
    if lo >= horizon:
        return True
    if g.kind != "table":
        # named families are decreasing
        return g(lo) < eps
    return all(g(n) < eps for n in range(lo, horizon))


def summable_diagnostic(A: BoundedSet, g: WeightFunction) -> IdealDiagnostic:
    total = weight_sum(A, g)
    return IdealDiagnostic(
        ideal_kind="summable",
        universe_bound=A.universe_bound,
        size=len(A),
        weight_sum=rational_str(total),
    )


# ------------------------------ van der Waerden ideal ------------------------------

def vdw_diagnostic(A: BoundedSet) -> IdealDiagnostic:
    length, witness = longest_ap(A)
    logger.debug(f"longest AP in a set of size {len(A)}: {length}")
    return IdealDiagnostic(
        ideal_kind="vdw",
        universe_bound=A.universe_bound,
        size=len(A),
        longest_ap=length,
        witness=witness,
    )


def not_p_ideal_witness(n_max: int, bound: int) -> PIdealFamily:
    """
    The shifted powers A_n = {2^i + n} for n < n_max, truncated below bound.
    A_0 is 3-AP-free; the union of the family holds long progressions.
    """
    if n_max < 1:
        raise UsageError(f"n_max must be >= 1, got {n_max}")
    members = []
    union = set()
    for n in range(n_max):
        elements = []
        p = 1
        while p + n < bound:
            elements.append(p + n)
            p <<= 1
        A = BoundedSet.from_sorted(elements, bound)
        if n == 0 and not is_3ap_free(A):
            raise InvariantViolation(f"A_0 below {bound} contains a 3-term progression")
        union.update(elements)
        members.append(PIdealMember(shift=n, elements=elements, diagnostic=vdw_diagnostic(A)))
    union_diag = vdw_diagnostic(BoundedSet(union, bound))
    logger.info(f"✅ Shifted-powers family: {n_max} members, union longest AP {union_diag.longest_ap}")
    return PIdealFamily(universe_bound=bound, members=members, union_diagnostic=union_diag)
