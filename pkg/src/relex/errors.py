"""Exception hierarchy shared by all relex modules."""


class RelexError(Exception):
    """Base class for every error raised deliberately by relex."""


class ConfigError(RelexError):
    """Invalid configuration, parameters or missing paths."""


class DataError(RelexError):
    """Malformed input data. Carries an optional source and line number."""

    def __init__(self, message, source=None, line=None):
        self.source = source
        self.line = line
        where = ""
        if source is not None:
            where = str(source)
        if line is not None:
            where = f"{where}:{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class ParseError(DataError):
    pass


class InvariantError(RelexError):
    """An internal invariant was violated. Always a bug."""
