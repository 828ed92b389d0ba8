"""Exception hierarchy shared by the solver, pricing and CLI layers."""

from __future__ import annotations


class HJBPriceError(Exception):
    """Base class for all package errors."""


class ConfigError(HJBPriceError, ValueError):
    """Invalid configuration or grid parameters."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ParameterError(ConfigError):
    """Model parameters for which a formula is singular or meaningless."""


class UtilityDomainError(HJBPriceError, ValueError):
    """A utility (or its inverse) was evaluated outside its domain.

    ``value`` is the offending argument and ``node`` the mesh index
    ``(i, j, k)`` it came from, when known.
    """

    def __init__(self, message: str, value: float | None = None,
                 node: tuple[int, int, int] | None = None):
        self.value = value
        self.node = node
        if node is not None:
            message = f"{message} at node (i, j, k) = {node}"
        super().__init__(message)


class ContractViolation(HJBPriceError):
    """An operation was called outside its precondition."""


class NumericalError(HJBPriceError, ArithmeticError):
    """Zero pivot, non-finite values or similar breakdown."""
