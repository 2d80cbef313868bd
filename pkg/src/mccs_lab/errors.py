"""Exception types shared across the package."""


class MccsError(Exception):
    """Base class for all package errors."""


class CurveCoverageError(MccsError):
    """A swap's cashflow schedule extends beyond the curve's last knot."""


class PanelError(MccsError):
    """The history is too short (or otherwise unusable) to build a panel."""


class GenerationError(MccsError):
    """Scenario generation could not satisfy its constraints."""


class ConvergenceError(MccsError):
    """An iterative fit failed to converge within its iteration budget."""

    def __init__(self, message: str, iterations: int):
        super().__init__(f"{message} (after {iterations} iterations)")
        self.iterations = iterations


class ConfigError(MccsError):
    """Invalid run configuration (CLI exit code 1)."""
