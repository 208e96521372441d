from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator


def rational_str(q: Fraction) -> str:
    """Exact text form of a rational: "n" or "n/d"."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


class ArithmeticProgression(BaseModel):
    model_config = ConfigDict(frozen=True)

    start: int = Field(ge=0)
    step: int = Field(ge=1)
    length: int = Field(ge=1)

    @property
    def terms(self) -> List[int]:
        return [self.start + i * self.step for i in range(self.length)]

    @property
    def last(self) -> int:
        return self.start + (self.length - 1) * self.step


class DyadicBlock(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int = Field(ge=0)
    lo: int
    hi: int

    @property
    def size(self) -> int:
        return self.hi - self.lo

    def __contains__(self, m: int) -> bool:
        return self.lo <= m < self.hi


class WeightEntry(BaseModel):
    n: int = Field(ge=0)
    num: int = Field(ge=1)
    den: int = Field(ge=1)


class IdealDiagnostic(BaseModel):
    ideal_kind: Literal["vdw", "summable"]
    universe_bound: int
    size: int
    longest_ap: Optional[int] = None
    witness: Optional[ArithmeticProgression] = None
    weight_sum: Optional[str] = None


class FiniteToOneReport(BaseModel):
    kind: str
    universe_bound: int
    max_fiber: int
    fiber_cap: int
    passed: bool


class PIdealMember(BaseModel):
    shift: int
    elements: List[int]
    diagnostic: IdealDiagnostic


class PIdealFamily(BaseModel):
    universe_bound: int
    members: List[PIdealMember]
    # longest AP of the union of the members, the reason no single set of the
    # ideal almost-contains all of them
    union_diagnostic: IdealDiagnostic


class DenseSetSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    generator_index: int = Field(ge=0)
    k: int = Field(ge=1)
    flavor: Literal["W", "G"]
    meet_indices: Tuple[int, ...] = ()

    @property
    def indices(self) -> Tuple[int, ...]:
        return (self.generator_index,) + tuple(self.meet_indices)


class ExclusionStep(BaseModel):
    index: int
    excluded: int
    bound: int
    value: int


class ExtensionTrace(BaseModel):
    flavor: Literal["W", "G"]
    case: Literal["W-case-I", "W-case-II", "G"]
    rule: Literal["standard", "bootstrap"]
    k: int
    universe_bound: int
    L: List[int]
    block: Optional[int] = None
    threshold: Optional[int] = None
    m: Optional[int] = None
    a0_size: Optional[int] = None
    values: List[int] = []
    exclusion_history: List[ExclusionStep] = []
    witness: List[int] = []
    K: List[int]
    budget: Optional[str] = None
    budget_cap: Optional[str] = None


class SpecWitness(BaseModel):
    spec: DenseSetSpec
    block: Optional[int] = None
    count: Optional[int] = None
    progression: Optional[ArithmeticProgression] = None
    valid: bool


class StepRecord(BaseModel):
    spec: DenseSetSpec
    status: Literal["extended", "already-met"]
    trace: Optional[ExtensionTrace] = None


class GenericRun(BaseModel):
    flavor: Literal["W", "G"]
    universe_bound: int
    start: List[int]
    schedule: List[DenseSetSpec]
    chain: List[List[int]]
    steps: List[StepRecord]
    union: List[int]
    witnesses: List[SpecWitness]
    checks: Dict[str, bool]
    weight_sum: Optional[str] = None
    weight_cap: Optional[str] = None

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


class SpadeRow(BaseModel):
    label: str
    k: int
    block: Optional[int] = None
    count: int


class SpadeReport(BaseModel):
    universe_bound: int
    rows: List[SpadeRow]

    @property
    def passed(self) -> bool:
        return all(row.block is not None for row in self.rows)


class DichotomyRow(BaseModel):
    label: str
    k: int
    block: Optional[int] = None
    meet_count: int
    a_count: int
    complement_count: Optional[int] = None
    holds: bool


class DichotomyResult(BaseModel):
    branch: Literal["with-A", "with-complement"]
    universe_bound: int
    k_cap: int
    tail_start: int
    f0_index: Optional[int] = None
    k0: Optional[int] = None
    k0_rule: Optional[Literal["total", "block-max"]] = None
    rows: List[DichotomyRow]


class QPointSplit(BaseModel):
    U0: List[int]
    U1: List[int]
    image0: List[int]
    image1: List[int]
    image0_free: bool
    image1_free: bool


class DominationReport(BaseModel):
    kind: Literal["probe"] = "probe"
    size: int
    threshold: Optional[int] = None
    first_failure: Optional[int] = None
    last_failure: Optional[int] = None


class StageLog(BaseModel):
    stage: int
    f: str
    g: Optional[str] = None
    branch: Literal["existing-generator", "preprocessing-K", "dense-extension"]
    ks: List[int]
    search_cap: int
    member: Optional[List[int]] = None
    preprocess_values: Optional[List[int]] = None
    generator_added: Optional[List[int]] = None
    generic: Optional[GenericRun] = None
    generator_count: int
    spade: Optional[SpadeReport] = None
    checks: Dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


class ConstructionRun(BaseModel):
    mode: Literal["w-not-q", "rapid-no-w"]
    universe_bound: int
    seed: List[str]
    ks: List[int]
    stages: List[StageLog]
    dichotomy: Optional[DichotomyResult] = None

    @property
    def passed(self) -> bool:
        return all(stage.passed for stage in self.stages)


class Scenario(BaseModel):
    mode: Literal["w-not-q", "rapid-no-w", "generic"] = "generic"
    universe_bound: Optional[int] = None
    generators: List[Union[str, List[int]]] = ["cofinite:0"]
    f: Union[str, Dict[str, Any]] = "identity"
    g: Union[str, Dict[str, Any]] = "reciprocal"
    flavor: Literal["W", "G"] = "W"
    stages: List[str] = []
    ks: List[int] = []
    start: List[int] = []
    test_set: Optional[str] = None
    preprocess_cap: Optional[int] = None
    witness_margin: Optional[int] = None
    output: Optional[str] = None
    seed: Optional[int] = None

    @field_validator("ks")
    @classmethod
    def ks_positive(cls, ks: List[int]) -> List[int]:
        if any(k < 1 for k in ks):
            raise ValueError("schedule ks must be >= 1")
        return ks
