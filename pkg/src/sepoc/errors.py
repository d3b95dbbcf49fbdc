"""Exception types shared across the package."""


class SepocError(Exception):
    """Base class for all package-specific failures."""


class IntegrationFailureError(SepocError):
    """Adaptive step size underflowed; carries the time of failure."""

    def __init__(self, t_fail, message=None):
        self.t_fail = float(t_fail)
        super().__init__(message or f"integration failed near t={t_fail:.6g} (step underflow)")


class DegenerateObservableError(SepocError):
    """Observable gradient requested at a state where it is undefined."""


class NoRootError(SepocError):
    """A scalar equation has no root in the admissible bracket."""


class DegenerateCostError(SepocError):
    """Cost derivative vanishes where the multiplier formula needs it."""


class TargetUnreachableError(SepocError):
    """Observable target is never attained along the scanned flow."""


class ConvergenceError(SepocError):
    """Newton iteration failed; the last iterate is attached for inspection."""

    def __init__(self, message, iterate=None, residual_norm=None):
        super().__init__(message)
        self.iterate = iterate
        self.residual_norm = residual_norm
