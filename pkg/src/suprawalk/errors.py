"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: validation failures exit 1,
IO failures exit 2 (plain OSError), numeric failures exit 3.
"""


class ValidationError(ValueError):
    """Invalid input data, configuration value, or contract violation."""


class ParseError(ValidationError):
    """Malformed line in a text input file."""

    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = str(path)
        self.lineno = lineno


class NumericError(ArithmeticError):
    """Training or evaluation produced a non-finite result."""
