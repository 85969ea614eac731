"""Exception types shared across the package.

Every error that callers are expected to catch derives from CfrajError.
Exit-code mapping for the CLI: usage problems are handled by argparse
(64), CfrajError maps to 2, verification failures to 1.
"""

from __future__ import annotations


class CfrajError(Exception):
    pass


class Overflow(CfrajError):
    """A value outgrew the exact-arithmetic digit budget.

    Carries the approximate natural log of the offending magnitude and,
    where meaningful, the iteration index at which growth exploded.
    """

    def __init__(self, message: str, log_magnitude: float | None = None,
                 iteration: int | None = None):
        super().__init__(message)
        self.log_magnitude = log_magnitude
        self.iteration = iteration


class BudgetExceeded(CfrajError):
    pass


class EmptyWindow(CfrajError):
    pass


class AtomTooHeavy(CfrajError):
    pass


class NotInSupport(CfrajError):
    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class DepthExceeded(CfrajError):
    pass


class OutOfRange(CfrajError):
    pass


class PreconditionViolated(CfrajError):
    pass


class CertificationFailed(CfrajError):
    pass
