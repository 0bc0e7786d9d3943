"""Exception types shared across the package."""


class BudgetExceeded(Exception):
    """A full read, enumeration or solver request exceeds its configured limit."""


class PreconditionViolated(Exception):
    """An input does not satisfy the documented precondition of an operation."""


class ConstructionFailed(Exception):
    """A randomized or greedy construction could not meet its target bounds."""


class QueryBudgetExceeded(Exception):
    """An adaptive tester exceeded its hard query cap."""
