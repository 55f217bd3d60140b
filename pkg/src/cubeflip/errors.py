"""Exception hierarchy shared by every cubeflip module.

Each exception carries a short machine-readable ``code`` used by the CLI when
it reports domain errors as JSON on stderr.
"""


class CubeflipError(Exception):
    code = "error"

    def __init__(self, message="", **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        out = {"error": self.code, "message": str(self)}
        out.update({k: _jsonable(v) for k, v in self.details.items()})
        return out


def _jsonable(v):
    if isinstance(v, (set, frozenset)):
        return sorted(v)
    if isinstance(v, tuple):
        return list(v)
    return v


class InvalidComplex(CubeflipError):
    code = "invalid_complex"


class ParseError(CubeflipError):
    code = "parse_error"

    def __init__(self, message, line=None, field=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field is not None:
            loc.append(f"field {field!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message, line=line, field=field)
        self.line = line
        self.field = field


class DimensionTooLarge(CubeflipError):
    code = "dimension_too_large"


class InvalidClass(CubeflipError):
    code = "invalid_class"


class DimensionMismatch(CubeflipError):
    code = "dimension_mismatch"


class SiteStale(CubeflipError):
    code = "site_stale"


class NotAdjacent(CubeflipError):
    code = "not_adjacent"


class DegenerateUnion(CubeflipError):
    code = "degenerate_union"


class NotClosedSphere(CubeflipError):
    code = "not_closed_sphere"


class NotThreeConnected(CubeflipError):
    code = "not_three_connected"

    def __init__(self, message, witness=()):
        super().__init__(message, witness=list(witness))
        self.witness = tuple(witness)


class Disconnected(CubeflipError):
    code = "disconnected"


class NoCrossings(CubeflipError):
    code = "no_crossings"


class LocationInvalid(CubeflipError):
    code = "location_invalid"


class OddParity(CubeflipError):
    code = "odd_parity"


class PlannerStuck(CubeflipError):
    code = "planner_stuck"


class BoundaryMismatch(CubeflipError):
    code = "boundary_mismatch"


class NotSimplyConnected(CubeflipError):
    code = "not_simply_connected"


class ClassNotAutomatic(CubeflipError):
    code = "class_not_automatic"


class PatternMismatch(CubeflipError):
    code = "pattern_mismatch"


class NumericallyDegenerate(CubeflipError):
    code = "numerically_degenerate"


class ParamOutOfRange(CubeflipError):
    code = "param_out_of_range"


class NoPath(CubeflipError):
    """The reachable set within the budget was exhausted without meeting."""

    code = "no_path"


class BudgetExhausted(CubeflipError):
    code = "budget_exhausted"
