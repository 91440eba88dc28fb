"""Exception types shared across the toolkit."""


class ParseError(ValueError):
    """Raised when an input file violates its documented format.

    The message always names the offending file and, where applicable, the
    line or field, so parsers fail with a diagnosable error instead of
    propagating arbitrary exceptions.
    """
