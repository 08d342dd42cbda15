"""Exception hierarchy shared by all modules."""


class GFNetsError(Exception):
    """Base class for workbench errors."""


class ExpressionSyntaxError(SyntaxError):
    """Malformed expression text.

    Attributes
    ----------
    position : int
        0-based character offset of the offending token.
    expected : tuple of str
        Token kinds that would have been accepted there.
    """

    def __init__(self, message, position, expected=(), text=None):
        self.position = position
        self.expected = tuple(expected)
        detail = message
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(f"{detail} at offset {position}")
        self.offset = position
        self.text = text


class EvaluationError(GFNetsError, ArithmeticError):
    """Division by zero, unbound parameter or domain violation during evaluation."""


class DomainError(GFNetsError, ValueError):
    """Evaluation requested outside a function's valid range."""


class DegenerateFit(GFNetsError):
    """All semi-norms fell below the absolute floor: the net is identically negligible."""


class InconsistentEvidence(GFNetsError):
    """Null characterization violated on the probed rectangle (grid or schedule too coarse)."""


class MomentFailure(GFNetsError):
    def __init__(self, k, residual, tol):
        self.k, self.residual, self.tol = k, residual, tol
        super().__init__(f"moment {k} residual {residual:.3e} exceeds {tol:.1e}")


class QuadratureError(GFNetsError):
    """Composite quadrature did not converge under refinement."""


class ConditioningFailure(GFNetsError):
    """Rounded Seeley weights violate the moment system beyond tolerance."""


class NoConvergentSubsequence(GFNetsError):
    """No Cauchy cluster of the required size exists in the probe sequence."""


class UniquenessViolation(GFNetsError):
    """Two decompositions of the same function disagree."""


class OrderTooHigh(GFNetsError, ValueError):
    pass


class NotTempered(GFNetsError):
    """No polynomial growth exponent up to the cap certifies the function."""


class NonHyperbolic(GFNetsError):
    """Coefficient matrix has an eigenvalue on (or too near) the imaginary axis."""
