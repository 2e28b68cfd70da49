"""
Exception hierarchy for the analysis and simulation layers.
"""


class MemstabError(Exception):
    """Base class for every error raised by this project."""


class KernelSpecError(MemstabError, ValueError):
    """Invalid kernel specification; the message names the offending field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class DomainError(MemstabError, ValueError):
    """Argument outside the domain of a density or operator."""


class UnsupportedOrderError(MemstabError, ValueError):
    """Operation only defined for a specific number of Gamma shapes."""

    def __init__(self, required_k, got_k):
        self.required_k = required_k
        self.got_k = got_k
        super().__init__(f"operation requires k={required_k}, got k={got_k}")


class HyperbolicityError(MemstabError, ValueError):
    """The principal part of the local system is not diagonalizable."""

    def __init__(self, theta1, case):
        self.theta1 = theta1
        self.case = case
        super().__init__(f"system is not strictly hyperbolic for theta_1={theta1!r}: {case}")


class InsufficientHistoryError(MemstabError, ValueError):
    """History window too short for the Gamma tail tolerance."""

    def __init__(self, t0, tail_mass, tol):
        self.t0 = t0
        self.tail_mass = tail_mass
        super().__init__(
            f"history window T0={t0} leaves Gamma tail mass {tail_mass:.3e} (tolerance {tol:.1e})"
        )


class ConvergenceError(MemstabError, RuntimeError):
    """Polynomial roots did not meet the residual contract."""

    def __init__(self, worst_residual, xi=None):
        self.worst_residual = worst_residual
        self.xi = xi
        where = f" at xi={xi!r}" if xi is not None else ""
        super().__init__(f"root residual {worst_residual:.3e} above tolerance{where}")


class StepSizeError(MemstabError, ValueError):
    """Time step violates the explicit-integrator bound."""


class NonFiniteError(MemstabError, RuntimeError):
    """Integration overflowed."""

    def __init__(self, time):
        self.time = time
        super().__init__(f"non-finite state reached at t={time:.6g}")


class NotStableError(MemstabError, RuntimeError):
    """The dissipation bound cannot hold; carries the offending frequency."""

    def __init__(self, xi, window=None):
        self.xi = xi
        self.window = window or []
        super().__init__(f"envelope is non-negative at xi={xi:.6g}")


class ModeError(MemstabError, RuntimeError):
    """Failure while integrating one Fourier mode of a physical simulation."""

    def __init__(self, n, cause):
        self.n = n
        self.cause = cause
        super().__init__(f"mode n={n} failed: {cause}")
