"""Exception types shared across the toolkit."""


class ConfigurationError(ValueError):
    """A spec, config file, or argument is outside its validity range."""


class DomainError(ValueError):
    """A mathematical precondition is violated (e.g. kernel on the diagonal)."""


class UnsolvableError(RuntimeError):
    """The minimization problem has an empty admissible class, w_f(A) = +inf."""
