"""Exception hierarchy shared by every metwarp module."""

from __future__ import annotations


class MetwarpError(Exception):
    """Base class for all errors raised by this package."""


class ExprSyntaxError(MetwarpError):
    """Malformed expression text.

    ``offset`` is the byte offset of the offending token in the UTF-8 encoded
    input and ``expected`` is the set of token kinds that would have been
    accepted there.
    """

    def __init__(self, message: str, text: str, index: int, expected: frozenset[str] = frozenset()):
        self.text = text
        self.index = index
        self.offset = len(text[:index].encode("utf-8"))
        self.expected = frozenset(expected)
        detail = f"{message} at offset {self.offset}"
        if self.expected:
            detail += f" (expected one of: {', '.join(sorted(self.expected))})"
        super().__init__(detail)


class UnknownFunctionError(ExprSyntaxError):
    pass


class UnboundVariableError(MetwarpError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unbound variable {name!r}")


class ExprDomainError(MetwarpError):
    """Function evaluated outside its real domain (ln, sqrt, division, power)."""

    def __init__(self, message: str, subexpr: str):
        self.subexpr = subexpr
        super().__init__(f"{message} in {subexpr!r}")


class DegenerateMetricError(MetwarpError):
    """Metric failed the Cholesky test at a sample point."""


class NotMetallicError(MetwarpError):
    pass


class NotAlmostProductError(MetwarpError):
    pass


class MismatchedParamsError(MetwarpError):
    pass


class PreconditionError(MetwarpError):
    """A theorem hypothesis does not hold on the supplied data.

    Carries the measured residual so reports can show how badly it failed.
    """

    def __init__(self, message: str, residual: float = float("nan")):
        self.residual = residual
        super().__init__(message)


class SpecError(MetwarpError):
    """Spec file could not be loaded: parse, reference, or domain problem."""

    def __init__(self, message: str, section: str | None = None, key: str | None = None,
                 offset: int | None = None):
        self.section = section
        self.key = key
        self.offset = offset
        where = []
        if section is not None:
            where.append(f"[{section}]")
        if key is not None:
            where.append(key)
        if offset is not None:
            where.append(f"offset {offset}")
        prefix = " ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
