"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid parameters or configuration (maps to CLI exit status 2)."""


class NumericError(ArithmeticError):
    """Numerical failure such as non-convergence (CLI exit status 3)."""


class PSDError(NumericError):
    """A covariance-type object failed its positive-semidefiniteness check."""
