"""Exception types shared across the package."""


class VaritriError(Exception):
    """Base class for all errors raised by varitri."""


class ContextError(VaritriError):
    """Operands live in different jet contexts, or a name is not declared."""


class GhostError(VaritriError):
    """A ghost-number (cohomological degree) constraint is violated."""


class ReductionError(VaritriError):
    """Reduction modulo a solved differential ideal could not be carried out."""


class ParseError(VaritriError):
    """Syntax or validation error in an expression or problem file."""

    def __init__(self, message, line=None, column=None, where=None):
        self.message = message
        self.line = line
        self.column = column
        self.where = where
        super().__init__(self.__str__())

    def __str__(self):
        loc = ""
        if self.where:
            loc += f"{self.where}: "
        if self.line is not None:
            loc += f"{self.line}:{self.column}: "
        return loc + self.message
