"""Exception hierarchy shared by all modules.

Every error carries an exit code so the command-line driver can map
failures without inspecting messages.
"""


class RelaxCoupleError(Exception):
    exit_code = 1


class ValidationError(RelaxCoupleError, ValueError):
    """Input violates a documented precondition or invariant."""

    exit_code = 1


class NotPositiveDefiniteError(ValidationError):
    pass


class SingularSystemError(RelaxCoupleError, ArithmeticError):
    exit_code = 1


class InstabilityError(RelaxCoupleError, ArithmeticError):
    """A time integrator produced non-finite values."""

    exit_code = 2
