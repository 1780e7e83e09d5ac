class MkdvLabError(Exception):
    pass


class DomainError(MkdvLabError, ValueError):
    """Argument outside the domain where an operation is defined."""


class SupportError(MkdvLabError, ValueError):
    """Profile is not compactly supported on its grid."""


class ConvergenceError(MkdvLabError, RuntimeError):
    pass


class InstabilityError(MkdvLabError, RuntimeError):
    """Integrator rejected a step (norm jumped by more than the guard allows)."""


class FitError(MkdvLabError, ValueError):
    pass


class ConfigError(MkdvLabError, ValueError):
    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = (", ".join(where) + ": ") if where else ""
        super().__init__(prefix + message)
