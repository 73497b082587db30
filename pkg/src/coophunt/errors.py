"""Exception hierarchy shared across the package."""


class CoophuntError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(CoophuntError, ValueError):
    """A parameter set or state violates its documented invariants."""


class ThresholdUndefinedError(CoophuntError):
    """A threshold was requested outside its domain of definition
    (the existence threshold needs p <= 1, the Hopf threshold p + b > 1)."""


class NotAtHopfError(CoophuntError):
    """Hopf normal-form data requested at a q outside the critical band."""


class HopfAssumptionError(CoophuntError):
    """Neither p > 1 nor (p <= 1 and b above the birth-rate threshold) holds,
    so no stability switch of the coexistence equilibrium occurs."""


class CycleTimeoutError(CoophuntError):
    """Cycle detection found no settled section returns within the horizon."""


class ProbeInconclusiveError(CoophuntError):
    """Some probe orbit neither converged nor escaped within the horizon."""


class NoBracketError(CoophuntError, ValueError):
    """Bisection endpoints carry the same classification label."""
