"""Semantic exceptions shared across the toolkit.

The CLI maps these onto its exit-code contract: validation and infeasibility
errors exit 1, budget errors exit 2.
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(ToolkitError, ValueError):
    """Inputs violate a contract: shapes, domains, stochasticity, syntax."""


class InfeasibleError(ToolkitError):
    """A rate formula's precondition fails; carries the violated value."""

    def __init__(self, message: str, value: float | None = None):
        super().__init__(message)
        self.value = value


class BudgetError(ToolkitError):
    """An enumeration or storage budget would be exceeded."""
