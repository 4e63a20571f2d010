"""
Exception hierarchy shared by all services
"""

from typing import Optional

# Exit codes used by the command layer
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class TPAMetrologyException(Exception):
    """Base exception for toolkit errors"""
    exit_code: int = EXIT_FAILURE

    def __init__(self, message: str, exit_code: Optional[int] = None, details: Optional[dict] = None):
        super().__init__(message)
        if exit_code is not None:
            self.exit_code = exit_code
        self.details = details or {}


class DimensionError(TPAMetrologyException):
    """Requested Fock index does not fit the truncation dimension"""
    exit_code = EXIT_USAGE


class TruncationError(TPAMetrologyException):
    """Probability discarded by truncation exceeds the tail tolerance"""
    exit_code = EXIT_USAGE


class DomainError(TPAMetrologyException):
    """Argument outside the mathematical domain of an operation"""
    exit_code = EXIT_USAGE


class InfeasibleMeanError(TPAMetrologyException):
    """No probe in the family can reach the requested mean photon number"""
    exit_code = EXIT_USAGE


class DegenerateStateError(TPAMetrologyException):
    """Every eigenvalue pair of the state is below the SLD cutoff"""
    exit_code = EXIT_FAILURE


class IntegrationError(TPAMetrologyException):
    """Numerical integration produced a non-finite state"""
    exit_code = EXIT_FAILURE


class BoundViolationError(TPAMetrologyException):
    """A classical Fisher information exceeds the quantum bound beyond tolerance"""
    exit_code = EXIT_FAILURE
