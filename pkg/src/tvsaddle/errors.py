class ValidationError(ValueError):
    """Input violates a documented precondition."""


class SolverError(RuntimeError):
    """A numerical routine could not produce a trustworthy result."""


class UnsupportedMetricError(LookupError):
    """The requested metric needs an oracle the problem does not provide."""


class ConfigError(ValueError):
    """One or more configuration fields failed to parse or validate.

    ``errors`` holds ``(line, field, message)`` triples; ``line`` is None for
    errors that are not tied to a single line (e.g. a missing required key).
    """

    def __init__(self, errors):
        self.errors = list(errors)
        lines = []
        for line, field, msg in self.errors:
            where = f"line {line}: " if line is not None else ""
            lines.append(f"{where}{field}: {msg}")
        super().__init__("; ".join(lines))


class DivergenceError(SolverError):
    """Iterates blew up. Carries the iteration index and the partial trajectory."""

    def __init__(self, message, iteration, trajectory=None):
        super().__init__(message)
        self.iteration = iteration
        self.trajectory = trajectory
