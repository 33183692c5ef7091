"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes: ConfigError and DomainError
exit 2, ResourceError exits 3, NumericError exits 4.
"""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ResourceError(RuntimeError):
    """An enumeration or search would exceed its work budget."""


class NumericError(ArithmeticError):
    """A numeric routine failed to meet its accuracy or consistency contract."""


class ConfigError(ValueError):
    """Configuration text is invalid.  Carries every problem found, not just the first."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
