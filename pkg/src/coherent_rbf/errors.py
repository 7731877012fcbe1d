"""Exception hierarchy shared by all modules."""


class CoherentRBFError(Exception):
    """Base class for library errors."""


class DomainError(CoherentRBFError, ValueError):
    """Point or argument outside the admissible domain."""


class IntegrationError(CoherentRBFError):
    """A trajectory left the finite range during integration."""


class AssemblyError(CoherentRBFError):
    """Collocation matrix could not be assembled or factorized."""

    def __init__(self, message, cond_estimate=None):
        super().__init__(message)
        self.cond_estimate = cond_estimate


class EigenSolveError(CoherentRBFError):
    """Eigensolver did not reach the requested residual."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class ConfigError(CoherentRBFError, ValueError):
    """Invalid run configuration; ``violations`` lists every problem found."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ScanError(CoherentRBFError):
    """No scanned level produced a valid partition."""
