import json
import sys
from datetime import datetime, timezone
from typing import Any, Callable, Dict, List, Optional, TextIO

from pydantic import BaseModel, ValidationError


class GsrDistError(Exception):
    """Base class for every failure raised by gsr_dist"""

    error_code = "GSR_DIST_ERROR"
    exit_code = 1


class DomainError(GsrDistError, ValueError):
    error_code = "DOMAIN_ERROR"
    exit_code = 2


class PoleError(GsrDistError, ArithmeticError):
    error_code = "POLE_ERROR"
    exit_code = 2


class DegenerateIndexError(GsrDistError):
    error_code = "DEGENERATE_INDEX"


class ConvergenceError(GsrDistError):
    error_code = "CONVERGENCE_ERROR"


class RegimeError(GsrDistError):
    """The real-root equation only exists for the pre-change regime"""

    error_code = "REGIME_ERROR"
    exit_code = 2


class BracketExhaustionError(GsrDistError):
    error_code = "BRACKET_EXHAUSTION"
    exit_code = 3

    def __init__(self, n_found: int, n_requested: int, beta_ceiling: float):
        self.n_found = n_found
        self.n_requested = n_requested
        self.beta_ceiling = beta_ceiling
        super().__init__(
            f"Found only {n_found} of {n_requested} roots below beta={beta_ceiling:g}"
        )


class NormalizationError(GsrDistError):
    error_code = "NORMALIZATION_ERROR"


class PreconvergenceError(GsrDistError):
    error_code = "PRECONVERGENCE"
    exit_code = 4


class NumericalBlowupError(GsrDistError):
    error_code = "NUMERICAL_BLOWUP"


class GridMismatchError(GsrDistError):
    error_code = "GRID_MISMATCH"


class SeriesBreakdownError(GsrDistError):
    """The truncated series lost all precision at points reported as converged"""

    error_code = "SERIES_BREAKDOWN"


class RootMultiplicityError(GsrDistError):
    error_code = "ROOT_MULTIPLICITY"


class ConvergenceWarning(UserWarning):
    """A truncated series was used where its last term is still significant"""


class ErrorDetail(BaseModel):
    field: Optional[str] = None
    message: str
    code: str


class ErrorResponse(BaseModel):
    detail: str
    error_code: str
    timestamp: str
    validation_errors: Optional[List[ErrorDetail]] = None


def create_error_response(
    detail: str,
    error_code: str,
    validation_errors: Optional[List[ErrorDetail]] = None,
) -> Dict[str, Any]:
    """Create standardized error payload"""
    response = ErrorResponse(
        detail=detail,
        error_code=error_code,
        timestamp=datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
        validation_errors=validation_errors,
    )
    return response.model_dump(exclude_none=True)


def _emit(payload: Dict[str, Any], stream: TextIO) -> None:
    stream.write(json.dumps(payload) + "\n")


def gsr_error_handler(exc: GsrDistError, stream: TextIO) -> int:
    """Report a library error with its own code and exit status"""
    _emit(create_error_response(detail=str(exc), error_code=exc.error_code), stream)
    return exc.exit_code


def validation_error_handler(exc: ValidationError, stream: TextIO) -> int:
    """Report pydantic validation failures field by field"""
    validation_errors = []

    for error in exc.errors():
        field = ".".join(str(loc) for loc in error["loc"]) if error["loc"] else None
        validation_errors.append(
            ErrorDetail(field=field, message=error["msg"], code=error["type"].upper())
        )

    _emit(
        create_error_response(
            detail="Validation failed",
            error_code="VALIDATION_ERROR",
            validation_errors=validation_errors,
        ),
        stream,
    )
    return 2


def general_error_handler(exc: Exception, stream: TextIO) -> int:
    """Report anything unexpected as an internal error"""
    _emit(
        create_error_response(
            detail=f"Internal error: {type(exc).__name__}: {exc}",
            error_code="INTERNAL_ERROR",
        ),
        stream,
    )
    return 1


ExceptionHandler = Callable[[Any, TextIO], int]

# Most specific first; the first isinstance match wins.
EXCEPTION_HANDLERS: List[tuple] = [
    (ValidationError, validation_error_handler),
    (GsrDistError, gsr_error_handler),
    (Exception, general_error_handler),
]


def handle_exception(exc: Exception, stream: Optional[TextIO] = None) -> int:
    """Dispatch an exception to its handler and return the process exit code"""
    stream = stream if stream is not None else sys.stderr
    handler: ExceptionHandler
    for exc_type, handler in EXCEPTION_HANDLERS:
        if isinstance(exc, exc_type):
            return handler(exc, stream)
    return general_error_handler(exc, stream)


__all__ = [
    "GsrDistError",
    "DomainError",
    "PoleError",
    "DegenerateIndexError",
    "ConvergenceError",
    "RegimeError",
    "BracketExhaustionError",
    "NormalizationError",
    "PreconvergenceError",
    "NumericalBlowupError",
    "GridMismatchError",
    "ConvergenceWarning",
    "ErrorDetail",
    "ErrorResponse",
    "create_error_response",
    "handle_exception",
    "EXCEPTION_HANDLERS",
]
