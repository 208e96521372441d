from typing import Any, Dict, List, Optional


class ApForceError(Exception):
    """
    Base error for the engine. Carries a readable detail and the exit code
    the command line returns for it.
    """

    exit_code = 3

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code

    def __str__(self) -> str:
        return self.detail


class UsageError(ApForceError):
    exit_code = 2


class DomainError(ApForceError):
    """A value was requested outside a table's domain."""

    exit_code = 2


class CentrednessError(ApForceError):
    def __init__(self, indices, universe_bound: int):
        self.indices = tuple(indices)
        self.universe_bound = universe_bound
        super().__init__(
            f"Centredness violation: generators {list(self.indices)} have empty meet below {universe_bound}"
        )


class UniverseExhaustedError(ApForceError):
    def __init__(self, detail: str, scan: Optional[List[Dict[str, Any]]] = None):
        self.scan = scan or []
        super().__init__(detail)


class NoProgressionError(ApForceError):
    def __init__(self, detail: str, threshold: int, searched_from: int, universe_bound: int):
        self.threshold = threshold
        self.searched_from = searched_from
        self.universe_bound = universe_bound
        super().__init__(detail)


class InconclusiveError(ApForceError):
    def __init__(self, detail: str, table: Optional[List[Any]] = None):
        self.table = table or []
        super().__init__(detail)


class SelectorViolation(ApForceError):
    def __init__(self, block: int, members: List[int]):
        self.block = block
        self.members = members
        super().__init__(f"Selector violation: {members} all fall in block {block}")


class InvariantViolation(ApForceError):
    pass


class GenericRunError(ApForceError):
    def __init__(self, detail: str, partial_chain: List[List[int]], cause: Optional[ApForceError] = None):
        self.partial_chain = partial_chain
        self.cause = cause
        super().__init__(detail)


class StageError(ApForceError):
    def __init__(self, detail: str, completed: List[Any], cause: Optional[ApForceError] = None):
        self.completed = completed
        self.cause = cause
        super().__init__(detail)
