"""Exception taxonomy shared across the toolkit.

The CLI maps these onto exit codes: DomainRejection -> 2, NumericalFailure -> 3.
"""


class DomainRejection(ValueError):
    """Input violates a structural precondition (shape, rank, degeneracy)."""


class NumericalFailure(RuntimeError):
    """A run collapsed numerically (vanishing postselection branch, annihilated chain)."""
