"""Error types shared across the package.

Every failure mode carries a stable machine-readable ``code`` string so the
CLI can emit single-line JSON diagnostics and tests can assert on the exact
failure class.
"""


class MpthermError(Exception):
    """Base class; ``code`` is a stable identifier, ``detail`` free-form."""

    code = "ERROR"

    def __init__(self, message, **detail):
        super().__init__(message)
        self.message = message
        self.detail = dict(detail)

    def to_json_dict(self):
        out = {"error": self.code, "message": self.message}
        out.update(self.detail)
        return out


class SymmetryViolation(MpthermError):
    code = "SYMMETRY_VIOLATION"


class NotPositiveDefinite(MpthermError):
    code = "NOT_POSITIVE_DEFINITE"


class NoninvertibleConductivity(MpthermError):
    code = "NONINVERTIBLE_CONDUCTIVITY"


class NonpositiveScalar(MpthermError):
    code = "NONPOSITIVE_SCALAR"


class SizeMismatch(MpthermError):
    code = "SIZE_MISMATCH"


class InvalidPartition(MpthermError):
    code = "INVALID_PARTITION"


class NonfiniteField(MpthermError):
    code = "NONFINITE_FIELD"


class GhostSolveSingular(MpthermError):
    code = "GHOST_SOLVE_SINGULAR"


class NoFront(MpthermError):
    code = "NO_FRONT"


class RangeError(MpthermError):
    code = "RANGE"


class ConstraintViolation(MpthermError):
    code = "CONSTRAINT_VIOLATION"


class ScenarioMismatch(MpthermError):
    code = "SCENARIO_MISMATCH"


class ParseError(MpthermError):
    code = "PARSE_ERROR"


class ValidationError(MpthermError):
    code = "VALIDATION_ERROR"


class UnknownKey(MpthermError):
    code = "UNKNOWN_KEY"


class DegenerateCase(MpthermError):
    code = "DEGENERATE"
