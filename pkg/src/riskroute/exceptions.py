"""Exception hierarchy for riskroute."""


class RiskRouteError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(RiskRouteError, ValueError):
    pass


class MissingProfileError(RiskRouteError, KeyError):
    """Raised when an edge has no time profile."""

    def __str__(self):
        return str(self.args[0]) if self.args else "missing profile"


class ParseError(RiskRouteError, ValueError):
    """Malformed input file. The message carries file/line context."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class ReferentialIntegrityError(ParseError):
    pass


class ExplosionGuardError(RiskRouteError):
    """Path enumeration would exceed the configured limit."""

    def __init__(self, limit, estimate):
        self.limit = limit
        self.estimate = estimate
        super().__init__(
            f"refusing to enumerate: more than {limit} paths (at least {estimate} seen)"
        )
