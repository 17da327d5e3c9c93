"""Exception types shared by the solvers and the CLI."""


class SolverError(RuntimeError):
    """A run produced a non-finite state; ``step`` is the offending step index."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step


class PreconditionError(ValueError):
    """Inputs outside the documented domain of an operation."""
