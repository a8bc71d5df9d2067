"""Exception hierarchy shared by every module."""


class MdimError(Exception):
    """Base class; ``code`` is the CLI exit status the error maps to."""

    code = 3

    def diagnostics(self):
        return {"error": type(self).__name__, "message": str(self)}


class WindowExceeded(MdimError):
    code = 4


class CapExceeded(MdimError):
    code = 4


class BudgetExceeded(MdimError):
    code = 4


class IncompatibleGrid(MdimError):
    pass


class DegenerateMetric(MdimError):
    pass


class Infeasible(MdimError):
    pass


class InvalidExponent(MdimError):
    pass


class FrostmanInfeasible(Infeasible):
    """The LP optimum is below one, so no probability measure meets the constraints."""

    def __init__(self, t, optimum):
        super().__init__(f"no Frostman measure at exponent t={t:g} (LP optimum {optimum:.6g} < 1)")
        self.t = t
        self.optimum = optimum


class NoConvergence(MdimError):
    pass


class FeasibilityViolated(MdimError):
    code = 2


class NonpositiveB(MdimError):
    pass


class NotACover(MdimError):
    pass


class NonInvariantMeasure(MdimError):
    pass


class HypothesisViolated(MdimError):
    pass


class SelectionFailed(MdimError):
    code = 2


class NegativePotential(MdimError):
    pass


class NotCovering(MdimError):
    code = 2


class UnboundedRegion(MdimError):
    pass


class ConfigInvalid(MdimError):
    code = 3


class GatingViolation(MdimError):
    code = 2
