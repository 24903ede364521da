"""Exception hierarchy shared by every module of the package."""


class DelayFhNError(Exception):
    """Base class for all package errors."""


class InvalidInput(DelayFhNError, ValueError):
    """Non-finite or otherwise unusable numeric input."""


class InvalidConfig(DelayFhNError, ValueError):
    pass


class DomainError(DelayFhNError, ValueError):
    """Argument outside the domain where a closed form is defined."""


class DegenerateParameters(DelayFhNError, ValueError):
    pass


class BranchDomain(DelayFhNError, ValueError):
    """Invalid (branch, argument) pair for the Lambert W function."""


class OutOfRange(DelayFhNError, ValueError):
    pass


class Blowup(DelayFhNError, ArithmeticError):
    """Integration left the bounded region; ``t_blowup`` records when."""

    def __init__(self, t_blowup: float, bound: float = 1e6):
        self.t_blowup = float(t_blowup)
        self.bound = bound
        super().__init__(f"|state| exceeded {bound:g} at t={t_blowup:.6g}")


class ContourOnRoot(DelayFhNError, ArithmeticError):
    pass


class NoConvergence(DelayFhNError, ArithmeticError):
    pass


class NotOnHopfCurve(DelayFhNError, ValueError):
    pass


class IllConditioned(DelayFhNError, ArithmeticError):
    pass


class NoSignChange(DelayFhNError, ArithmeticError):
    pass


class NonConvergent(DelayFhNError, ArithmeticError):
    """A fast-subsystem orbit did not settle within the allotted time."""


class NoCycleAtStart(DelayFhNError, ArithmeticError):
    pass


class NotBistable(DelayFhNError, ArithmeticError):
    pass


class EmptySection(DelayFhNError, ArithmeticError):
    pass
