"""Exception types shared across the package."""


class CifsdimError(ValueError):
    """Base class; every error raised on bad input derives from this."""


class EmptyInput(CifsdimError):
    def __init__(self, what="empty input"):
        super().__init__(what)


class ScaleOutOfRange(CifsdimError):
    def __init__(self, r=None):
        msg = "scale out of range" if r is None else f"scale out of range: {r!r}"
        super().__init__(msg)


class ClassWindowError(CifsdimError):
    pass


class InconsistentParameters(CifsdimError):
    pass


class PressureInfinite(CifsdimError):
    def __init__(self, t):
        super().__init__(f"pressure infinite at t={t}")
        self.t = t


class Undecided(CifsdimError):
    pass


class BudgetExceeded(CifsdimError):
    """Raised when an enumeration runs past its word budget.

    ``partial`` carries whatever was computed before the budget ran out,
    flagged as incomplete.
    """

    def __init__(self, msg="budget exceeded", partial=None):
        super().__init__(msg)
        self.partial = partial


class ConstructionError(CifsdimError):
    pass
