"""Exception types shared by the genericity guards and the Bethe solver."""


class DenominatorNearZero(ArithmeticError):
    """A theta factor in a denominator fell below the genericity guard.

    Carries the label of the offending factor so samplers can tell which
    guard fired before they resample.
    """

    def __init__(self, label: str, magnitude: float = float("nan")):
        super().__init__(f"theta denominator too small: {label} (|.|={magnitude:.3e})")
        self.label = label
        self.magnitude = magnitude


class BranchSuspect(ArithmeticError):
    """A square-root radicand lies within the guard band of the branch cut."""

    def __init__(self, label: str, radicand: complex):
        super().__init__(f"radicand near branch cut: {label} ({radicand!r})")
        self.label = label
        self.radicand = radicand


class SpaceMismatch(ValueError):
    """Difference operators living on different spaces were combined."""


class RootCollision(ValueError):
    """Two spectral parameters coincide within the distinctness threshold."""


class NoConvergence(RuntimeError):
    """The multi-start Newton iteration exhausted its restart budget."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best
