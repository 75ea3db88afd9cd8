"""
Exception utilities to reduce duplication in services and commands
"""
from typing import Any, Dict, Optional

from app.utils.error_codes import ErrorCode, ErrorMessage, create_error_response


class ToricError(Exception):
    """Error raised by every service; carries a code and a structured location"""

    def __init__(self, error_code: ErrorCode, message: Optional[str] = None, details: Optional[Dict[str, Any]] = None):
        self.error_code = error_code
        self.message = message or getattr(ErrorMessage, error_code.name)
        self.details = details or {}
        super().__init__(self.message)

    def to_response(self) -> Dict[str, Any]:
        return create_error_response(self.error_code, self.message, self.details)


class ErrorHelper:
    """Helper class for creating consistent domain errors"""

    @staticmethod
    def schema_violation(message: str, location: Optional[str] = None) -> ToricError:
        details = {"location": location} if location else None
        return ToricError(ErrorCode.SCHEMA_VIOLATION, message, details)

    @staticmethod
    def ray_not_primitive(index: int, ray) -> ToricError:
        return ToricError(
            ErrorCode.RAY_NOT_PRIMITIVE,
            details={"location": f"rays[{index}]", "ray": list(ray)},
        )

    @staticmethod
    def not_big(name: str) -> ToricError:
        return ToricError(ErrorCode.NOT_BIG, details={"location": "removed", "pair": name})

    @staticmethod
    def pole(message: Optional[str] = None, **details) -> ToricError:
        return ToricError(ErrorCode.POLE, message, details or None)

    @staticmethod
    def invariant(message: str, **details) -> ToricError:
        return ToricError(ErrorCode.INVARIANT_VIOLATION, message, details or None)

    @staticmethod
    def invalid_prime(value: int) -> ToricError:
        return ToricError(ErrorCode.INVALID_PRIME, f"Expected a prime (power) of at least 2, got {value}")

    @staticmethod
    def config_invalid(message: str) -> ToricError:
        return ToricError(ErrorCode.CONFIG_INVALID, message)

    @staticmethod
    def file_not_found(path: str) -> ToricError:
        return ToricError(ErrorCode.FILE_NOT_FOUND, f"File not found: {path}", {"location": path})


# Convenience functions for common cases
def no_cone(rays) -> ToricError:
    """Standard error for a ray set that spans no cone"""
    return ToricError(ErrorCode.NO_CONE, details={"rays": sorted(rays)})


def metric_not_supported(reason: str) -> ToricError:
    """Standard error for metric modes the pair cannot carry"""
    return ToricError(ErrorCode.METRIC_NOT_SUPPORTED, f"Metric mode not supported: {reason}")
