"""Exception hierarchy shared by all modules.

Every failure mode the toolkit reports is a distinct class so callers (and
the CLI exit-code logic) can react to specific conditions rather than
pattern-matching messages.
"""


class PnsError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgumentError(PnsError, ValueError):
    """An argument violates a documented precondition."""


class InvalidStateError(PnsError, RuntimeError):
    """An object is in the wrong representation/state for the operation."""


class IncompatibleRhsError(PnsError, ValueError):
    """Poisson right-hand side has a nonzero mean; no periodic solution."""


class SingularPointError(PnsError, ArithmeticError):
    """Evaluation requested exactly at (or too close to) a singular point."""

    def __init__(self, message, factor=None):
        super().__init__(message)
        self.factor = factor


class OutOfDomainError(PnsError, ValueError):
    """Evaluation outside the family's domain of definition."""


class BlowupPointError(SingularPointError):
    """Closed-form evaluation at a denominator root."""


class NoRealBlowupError(PnsError, ValueError):
    """Blowup-time formula has no real solution for these parameters."""


class PreconditionError(PnsError, ValueError):
    """A checked operation precondition failed (message names the check)."""


class DegenerateFieldError(PnsError, ValueError):
    """Field is too close to zero on too much of the lattice to divide by."""


class StepRejectedError(PnsError, RuntimeError):
    """Time step violates the stability guard.

    Carries a usable ``suggested_dt``.
    """

    def __init__(self, message, suggested_dt):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class DivergenceError(PnsError, RuntimeError):
    """Solution diverged (NaN or vorticity ceiling hit) at time ``t``."""

    def __init__(self, message, t, bkm_integral=None):
        super().__init__(message)
        self.t = t
        self.bkm_integral = bkm_integral


class InvalidExponentError(PnsError, ValueError):
    """Inequality exponents outside the admissible range."""


class InvalidRangeError(PnsError, ValueError):
    """Sample range hits a forbidden region (e.g. the zero branch)."""


class ConfigError(PnsError, ValueError):
    """Configuration file problem; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
