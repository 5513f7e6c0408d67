"""Exception hierarchy.

Every error raised by the library derives from :class:`PscvxError` and carries
a short machine-readable ``code`` used by the report writer.
"""
from __future__ import annotations


class PscvxError(Exception):
    code = "error"


# expression language
class ExprError(PscvxError):
    code = "expr_error"

    def __init__(self, message, offset=None, text=None):
        self.offset = offset
        self.text = text
        self.message = message
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class ExprSyntaxError(ExprError):
    code = "syntax_error"


class UnknownVariable(ExprError):
    code = "unknown_variable"


class NonIntegerExponent(ExprError):
    code = "non_integer_exponent"


class DomainError(PscvxError):
    """log/sqrt/negative power evaluated outside its smooth domain."""

    code = "domain_error"


# jet calculus
class ZeroGradient(PscvxError):
    code = "zero_gradient"


# domain model
class OnEdge(PscvxError):
    code = "on_edge"


class NotOnBoundary(PscvxError):
    code = "not_on_boundary"


class OutsideAllCharts(PscvxError):
    code = "outside_all_charts"


class SpecInvariantError(PscvxError):
    code = "invalid_spec"


# edge analysis
class EdgeMismatch(PscvxError):
    code = "edge_mismatch"


class TangentDirection(PscvxError):
    code = "tangent_direction"


class WrongOrientation(PscvxError):
    code = "wrong_orientation"


class ExceptionalPoint(PscvxError):
    code = "exceptional_point"


class DegenerateTangent(PscvxError):
    code = "degenerate_tangent"


class BranchCutIntersectsDomain(PscvxError):
    code = "branch_cut_intersects_domain"


# barrier
class ShrinkBudgetExceeded(PscvxError):
    code = "shrink_budget_exceeded"


class NotInside(PscvxError):
    code = "not_inside"


class NonNegativeRho(PscvxError):
    code = "non_negative_rho"


class OutsideBall(PscvxError):
    code = "outside_ball"


# psh verifier
class UnlistedKink(PscvxError):
    code = "unlisted_kink"


class QuadratureUnderflow(PscvxError):
    code = "quadrature_underflow"


class DiscExitsRegion(PscvxError):
    code = "disc_exits_region"


# disc witness
class NoDirectionFound(PscvxError):
    code = "no_direction_found"


class FitFailed(PscvxError):
    code = "fit_failed"


class BoundaryExitsDomain(PscvxError):
    code = "boundary_exits_domain"


# file formats
class SchemaError(PscvxError):
    code = "schema_error"

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class SpecIoError(PscvxError):
    code = "io_error"
