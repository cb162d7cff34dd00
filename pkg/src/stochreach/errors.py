"""Exception types shared across the package."""
from __future__ import annotations


class DivergenceError(RuntimeError):
    """An integration produced a non-finite state.

    Carries the time at which the first non-finite value appeared.
    """

    def __init__(self, time: float, message: str | None = None):
        self.time = time
        super().__init__(message or f"state became non-finite at t={time:g}")


class OrderViolationError(RuntimeError):
    """An embedding trajectory lost its lower <= upper ordering.

    Signals an invalid inclusion function; carries the offending time
    and state component.
    """

    def __init__(self, time: float, component: int):
        self.time = time
        self.component = component
        super().__init__(
            f"embedding order violated at t={time:g}, component {component}"
        )


class UnsoundInclusionError(RuntimeError):
    """A cooperativity check failed, so an endpoint-based inclusion
    function would not be sound on the requested domain."""


class CertificateInfeasibleError(RuntimeError):
    """No weight matrix could be certified at the requested rate.

    Carries the bisection bracket that was attempted.
    """

    def __init__(self, c_lo: float, c_hi: float, message: str | None = None):
        self.bracket = (c_lo, c_hi)
        super().__init__(
            message
            or f"no feasible weight matrix on bisection bracket [{c_lo:g}, {c_hi:g}]"
        )
