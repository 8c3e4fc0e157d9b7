"""Exception types raised by corrdyn."""


class CorrDynError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(CorrDynError, ValueError):
    pass


class NotHermitian(CorrDynError, ValueError):
    pass


class NotTraceless(CorrDynError, ValueError):
    pass


class NotAState(CorrDynError, ValueError):
    pass


class NotCP(CorrDynError, ValueError):
    pass


class InvalidParams(CorrDynError, ValueError):
    pass


class SingularMap(CorrDynError, ArithmeticError):
    """The uncorrelated dynamical map is not (numerically) invertible at ``t``."""

    def __init__(self, t, condition_number=float("inf"), message=None):
        self.t = float(t)
        self.condition_number = float(condition_number)
        if message is None:
            message = f"dynamical map singular at t={self.t:.12g} (cond={self.condition_number:.3e})"
        super().__init__(message)


class SingularTime(CorrDynError, ArithmeticError):
    def __init__(self, t, message=None):
        self.t = float(t)
        super().__init__(message or f"closed-form rates undefined at t={self.t:.12g}")


class ReconstructionFailure(CorrDynError, ArithmeticError):
    pass
