"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a precondition or invariant."""


class ParseError(ValidationError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NumericError(ArithmeticError):
    """Optimization produced a non-finite value."""

    def __init__(self, iteration: int, message: str):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration
