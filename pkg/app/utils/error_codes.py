"""
Centralized error codes and messages for consistent error handling
"""
from enum import Enum
from typing import Dict, Any, Optional


class ErrorCode(Enum):
    # Input Errors
    SCHEMA_VIOLATION = "SCHEMA_VIOLATION"
    RAY_NOT_PRIMITIVE = "RAY_NOT_PRIMITIVE"
    FILE_NOT_FOUND = "FILE_NOT_FOUND"
    CONFIG_INVALID = "CONFIG_INVALID"
    INVALID_PRIME = "INVALID_PRIME"

    # Geometry Errors
    FAN_NOT_SMOOTH = "FAN_NOT_SMOOTH"
    FAN_NOT_COMPLETE = "FAN_NOT_COMPLETE"
    NOT_BIG = "NOT_BIG"
    NO_CONE = "NO_CONE"
    METRIC_NOT_SUPPORTED = "METRIC_NOT_SUPPORTED"

    # Consistency Errors
    PIC_TORSION = "PIC_TORSION"
    INVARIANT_VIOLATION = "INVARIANT_VIOLATION"
    POLE = "POLE"

    # Numerical Errors
    QUADRATURE_NONCONVERGENCE = "QUADRATURE_NONCONVERGENCE"
    DEGENERATE_GRID = "DEGENERATE_GRID"
    EMPTY_CENSUS = "EMPTY_CENSUS"

    # Outcome
    VERIFICATION_FAILED = "VERIFICATION_FAILED"

    # Internal
    INTERNAL_ERROR = "INTERNAL_ERROR"


class ErrorMessage:
    """Standard error messages"""

    # Input
    SCHEMA_VIOLATION = "Fan file does not match the expected schema"
    RAY_NOT_PRIMITIVE = "ray not primitive"
    FILE_NOT_FOUND = "File not found"
    CONFIG_INVALID = "Invalid run configuration"
    INVALID_PRIME = "Expected a prime (power) of at least 2"

    # Geometry
    FAN_NOT_SMOOTH = "Fan is not smooth"
    FAN_NOT_COMPLETE = "Fan is not complete"
    NOT_BIG = "log-anticanonical not big"
    NO_CONE = "Ray set spans no cone of the fan"
    METRIC_NOT_SUPPORTED = "Metric mode not supported for this pair"

    # Consistency
    PIC_TORSION = "Picard group of the complement has torsion"
    INVARIANT_VIOLATION = "Internal invariant violated"
    POLE = "Evaluation point lies on a pole of the characteristic function"

    # Numerical
    QUADRATURE_NONCONVERGENCE = "Quadrature did not converge"
    DEGENERATE_GRID = "Census grid is too small for a regression fit"
    EMPTY_CENSUS = "Census contains no points"

    # Outcome
    VERIFICATION_FAILED = "Prediction and census disagree"

    # Internal
    INTERNAL_ERROR = "An internal error occurred"


def create_error_response(
    error_code: ErrorCode,
    message: Optional[str] = None,
    details: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    """
    Create standardized error response

    Args:
        error_code: Error code enum
        message: Custom error message (uses default if None)
        details: Additional error details such as the location in the input
    """
    response = {
        "error_code": error_code.value,
        "detail": message or getattr(ErrorMessage, error_code.name),
    }

    if details:
        response.update(details)

    return response


# Process exit code mappings
ERROR_EXIT_CODES = {
    ErrorCode.VERIFICATION_FAILED: 2,
}


def get_exit_code(error_code: ErrorCode) -> int:
    """Get process exit code for error (1 for every input or computation error)"""
    return ERROR_EXIT_CODES.get(error_code, 1)
