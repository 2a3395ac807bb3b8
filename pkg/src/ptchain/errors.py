"""Exception hierarchy shared by every ptchain module."""


class PtchainError(Exception):
    """Base class for all library errors."""


class DomainError(PtchainError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class GainOverflowError(PtchainError, ArithmeticError):
    """A scaled gain would exceed double-precision range."""

    def __init__(self, gamma, n, limit):
        self.gamma = gamma
        self.n = n
        self.limit = limit
        super().__init__(
            f"gamma={gamma!r} with n={n} gives gamma**(2n-1) above {limit:.0e}; "
            "move the terminal guard further from T"
        )


class SingularityError(PtchainError, ArithmeticError):
    """A control law produced a non-finite value near the terminal time."""

    def __init__(self, t, gamma, what="gain"):
        self.t = t
        self.gamma = gamma
        super().__init__(f"non-finite {what} at t={t!r} (gamma={gamma!r})")


class UncertaintySpecError(PtchainError):
    """An uncertainty callable returned something unusable."""


class AssumptionViolation(PtchainError):
    """The uncertainty exceeded its declared bound table."""

    def __init__(self, t, slack):
        self.t = t
        self.slack = slack
        super().__init__(f"bound table violated at t={t!r}: slack={slack}")


class BetaTooSmallError(PtchainError, ValueError):
    """A requested gain lies below the value the design formula requires."""

    def __init__(self, beta, beta_min):
        self.beta = beta
        self.beta_min = beta_min
        super().__init__(
            f"beta={beta!r} is below the design value {beta_min:.6g}; "
            "pass allow_below_formula=True to run it anyway"
        )


class SimulationDiverged(PtchainError, ArithmeticError):
    """The integrator met a non-finite state; the last finite sample is kept."""

    def __init__(self, t, last_t, last_y, reason=""):
        self.t = t
        self.last_t = last_t
        self.last_y = last_y
        msg = f"simulation diverged near t={t!r} (last finite sample t={last_t!r})"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class ConfigError(PtchainError, ValueError):
    """Scenario configuration is malformed or inconsistent."""
