"""Exception hierarchy.

``ModelError`` covers ill-posed or inadmissible inputs (CLI exit code 2);
``NumericalError`` covers failures of the numerical machinery on an otherwise
valid model (CLI exit code 3).
"""


class ImhrateError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(ImhrateError):
    """The supplied model violates a precondition or invariant."""


class NumericalError(ImhrateError):
    """A numerical routine failed to deliver its contracted accuracy."""


class InvalidModel(ModelError):
    pass


class PointOutsideSupport(ModelError):
    pass


class ZeroProposalDensity(ModelError):
    """Proposal density vanishes where the target does not: support containment broken."""


class UnboundedWeight(ModelError):
    """sup target/proposal appears infinite; the sampler is not geometrically ergodic."""


class ZeroWeightState(ModelError):
    """Closed-form spectrum needs every state weight positive; use TV fitting instead."""


class NotStationary(ModelError):
    pass


class ZeroDensityAtStart(ModelError):
    pass


class ThetaOutOfRange(ModelError):
    pass


class ModeUndefined(ModelError):
    pass


class DeltaOutOfRange(ModelError):
    pass


class UnknownModel(ModelError):
    pass


class BudgetExhausted(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class DegeneratePerturbation(NumericalError):
    """Perturbed eigenvalue collides with a retained one; eigenvector formula undefined."""


class DegenerateFit(NumericalError):
    """Too few usable points to fit a decay rate."""


class SandwichViolated(NumericalError):
    """Exact TV escaped the proven envelope; indicates an implementation bug."""


class ResidualNegative(NumericalError):
    """Residual distribution has a negative mass; indicates an implementation bug."""


class NonMonotoneWeightWarning(UserWarning):
    """Sub-level sets resolved by indicator quadrature because no monotone hint was given."""
