"""Exception hierarchy.

Every library error derives from :class:`OpenQuadError` so the CLI can map
them to exit codes. ``SolverError`` subclasses signal numerical failure,
``ParseError`` signals a malformed model file.
"""


class OpenQuadError(Exception):
    """Base class for all library errors."""


class ParseError(OpenQuadError):
    """Malformed or unknown content in a model-definition file."""


class InvalidStencil(OpenQuadError, ValueError):
    """Stencil arrays have the wrong shape or violate a hard constraint."""


class SolverError(OpenQuadError):
    """A numerical routine could not produce a trustworthy result."""


class NonRealResult(SolverError):
    """Evolution matrices came out with a non-negligible imaginary part."""


class QuadraticNotSupported(SolverError):
    """Momentum-space routes require a quasifree stencil (no quadratic Lindblad operators)."""


class SingularSteadyState(SolverError):
    """The steady-state linear map is singular, so the steady state is not unique."""


class NonFiniteSolve(SolverError):
    """A linear solve returned NaN or infinite entries."""


class SingularAtK(SolverError):
    """The per-momentum Lyapunov operator is singular at ``k``."""

    def __init__(self, k, ratio):
        self.k = tuple(float(v) for v in k)
        self.ratio = float(ratio)
        super().__init__(f"Lyapunov operator singular at k={self.k} (sigma_min/sigma_max={ratio:.3e})")


class Diverged(SolverError):
    """Time integration left the configured bound (bosonic instability)."""


class MissingRepresentation(OpenQuadError, ValueError):
    """A covariance field lacks the representation an operation needs."""


class NegativeRate(OpenQuadError, ValueError):
    """A dissipation rate was negative."""


class TooLarge(OpenQuadError, ValueError):
    """Dense many-body construction requested for too many modes."""


class NotOneDimensional(OpenQuadError, ValueError):
    """A one-dimensional analysis was requested for a D > 1 stencil."""


class SingularLeadingBlock(SolverError):
    """The leading coefficient of the matrix difference equation is not invertible."""


class IrregularPencil(SolverError):
    """The matrix pencil determinant vanishes identically."""


class PoleOnUnitCircle(SolverError):
    """A pole of the momentum-space covariance lies on the unit circle (gapless)."""


class InsufficientData(OpenQuadError, ValueError):
    """Too few usable samples for a fit."""


class GaplessInput(OpenQuadError, ValueError):
    """Closed-form expression requested at or beyond the gap-closing point."""


class PhaseSingular(OpenQuadError, ValueError):
    """Closed-form expression requested at a singular dissipation phase."""


class UnsupportedDimension(OpenQuadError, ValueError):
    """No closed form is available for the requested dimension."""


class UnknownFigure(OpenQuadError, ValueError):
    """Figure name not recognised by the CLI."""
