"""Exception hierarchy shared by the physics, solver and controller layers."""
from typing import Iterable, Optional


class P2HError(Exception):
    """Base class for every error raised by the p2h package."""


class ConfigError(P2HError):
    """Invalid or unreadable plant/run configuration."""


class DomainError(P2HError, ValueError):
    """A physical model was evaluated outside its domain."""


class InfeasibleControlError(P2HError):
    """The plant rejected a control action."""

    def __init__(self, stack: int, constraint: str, detail: str = ""):
        self.stack = stack
        self.constraint = constraint
        message = f"Stack {stack}: control violates {constraint}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class FitError(P2HError):
    """Surrogate construction failed (degenerate grid, rank deficiency)."""


class SolverError(P2HError):
    """The MILP kernel could not produce a usable answer."""


class ControllerInfeasibleError(P2HError):
    """The hour-ahead controller found no feasible schedule."""

    def __init__(self, hour: int, binding: Optional[Iterable[str]] = None, detail: str = ""):
        self.hour = hour
        self.binding = sorted(set(binding or []))
        message = f"No feasible schedule at hour {hour}"
        if self.binding:
            message = f"{message}; binding: {', '.join(self.binding)}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class ClockSkewError(P2HError):
    """A measurement does not belong to the hour the controller expects."""


class RankUndefinedError(P2HError):
    """Marginal production rank requested for a stack that is switched off."""


# Exit codes used by the management commands.
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (ControllerInfeasibleError, InfeasibleControlError)):
        return EXIT_INFEASIBLE
    return EXIT_NUMERICAL
