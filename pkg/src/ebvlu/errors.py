"""Exception types raised across the package."""


class ParameterError(ValueError):
    """An argument is outside its documented domain."""


class ParseError(ValueError):
    """Malformed Matrix Market input."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SingularDiagonalError(ArithmeticError):
    def __init__(self, row):
        self.row = row
        super().__init__(f"zero diagonal entry in row {row}")


class SingularPivotError(ArithmeticError):
    """Pivot magnitude at or below the threshold; ``step`` is 1-based."""

    def __init__(self, step, pivot=None, threshold=None):
        self.step = step
        self.pivot = pivot
        self.threshold = threshold
        msg = f"singular pivot at step {step}"
        if pivot is not None:
            msg += f" (|pivot|={abs(pivot):.3e} <= threshold {threshold:.3e})"
        super().__init__(msg)


class MemoryBudgetError(RuntimeError):
    def __init__(self, required, available):
        self.required = required
        self.available = available
        super().__init__(
            f"benchmark needs about {required} bytes but only {available} are available"
        )
