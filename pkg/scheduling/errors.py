"""Exception types raised by the scheduling, milp and data packages."""


class SchedulingError(Exception):
    """Base class for every error raised by this project."""


class InvalidInputError(SchedulingError, ValueError):
    """Malformed input: dimension mismatch, violated bounds, unreadable data."""


class UnsupportedCaseError(SchedulingError):
    """An operation was called outside the show-count or cost case it supports."""


class RegimeError(UnsupportedCaseError):
    """A polynomial rule was requested outside the regime where it is optimal."""


class SolverError(SchedulingError):
    """The LP/MILP engine could not process a model (unbounded, malformed)."""


class SizeCapError(SchedulingError):
    """A brute-force oracle refused an instance above its size cap."""


class InfeasibleScheduleError(SchedulingError):
    """An audited schedule violates a waiting guarantee."""
