"""Exception hierarchy.

Input problems derive from :class:`InputError` (a ``ValueError``), numerical
breakdowns from :class:`NumericalError`. The CLI maps the two families onto
exit codes 1 and 2.
"""


class UdiscError(Exception):
    pass


class InputError(UdiscError, ValueError):
    pass


class NumericalError(UdiscError, ArithmeticError):
    pass


class DimensionMismatch(InputError):
    pass


class NotNormalized(InputError):
    pass


class PriorsInvalid(InputError):
    pass


class LinearlyDependent(InputError):
    pass


class WeightsInvalid(InputError):
    pass


class StructureMismatch(InputError):
    pass


class PreconditionFailed(InputError):
    pass


class UnsupportedDimension(InputError):
    pass


class InfeasiblePoint(InputError):
    pass


class NotInteriorOptimum(NumericalError):
    pass


class ComplexResidue(NumericalError):
    pass


class SolverFailure(NumericalError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class CertificateViolation(NumericalError):
    def __init__(self, name, value, tol):
        super().__init__(f"certificate {name!r} violated: {value:.3e} (tol {tol:.1e})")
        self.name = name
        self.value = value
        self.tol = tol
