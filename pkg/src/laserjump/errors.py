"""Exception hierarchy shared by every module."""


class LaserJumpError(Exception):
    """Base class for all package errors."""


class DomainError(LaserJumpError, ValueError):
    pass


class BoundsViolation(LaserJumpError):
    """A jump would leave the state space 0 <= n <= N, m >= 0."""


class ConfigError(LaserJumpError, ValueError):
    pass


class ZeroRateHalt(LaserJumpError):
    """The process sits in an absorbing state (total rate is zero)."""


class StepTooLarge(LaserJumpError, ValueError):
    pass


class InfeasibleError(LaserJumpError, ValueError):
    """Loss exceeds the maximum available gain (alpha > N)."""


class DegenerateError(LaserJumpError, ZeroDivisionError):
    pass


class TooFewWindows(LaserJumpError, ValueError):
    pass


class EmptyTrace(LaserJumpError, ValueError):
    pass


class MismatchedRuns(LaserJumpError, ValueError):
    pass
