"""Exception types shared across the package."""


class SchurError(Exception):
    """Base class for all package errors."""


class ValidationError(SchurError):
    """An input object violates a structural invariant.

    The message always names the violated invariant and, where meaningful,
    a witness (element ids or a triple).
    """


class CapExceededError(SchurError):
    """A requested domain is larger than the configured cap."""

    def __init__(self, what: str, size: int, cap: int):
        super().__init__(f"{what}: domain size {size} exceeds cap {cap}")
        self.what = what
        self.size = size
        self.cap = cap


class BudgetExceededError(SchurError):
    """A refinement round budget or a search node budget ran out.

    Distinct from a negative verdict: callers must not interpret this as
    "no witness exists".
    """


class TheoremViolationError(SchurError):
    """A property the underlying theory guarantees failed to hold.

    Raised when e.g. a WL fixpoint fails C3 or a word predicate is not
    constant on a class; always indicates an implementation bug (or a bad
    hand-built input passed where a theorem-backed one is required).
    """
