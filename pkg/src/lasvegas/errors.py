"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line can map failures
onto stable process exit statuses (2 parse, 3 shape, 4 semantic, 5 budget).
"""

from __future__ import annotations


class LasVegasError(Exception):
    exit_code = 4


class ParseError(LasVegasError):
    exit_code = 2


class ShapeError(LasVegasError):
    exit_code = 3


class InvariantViolation(LasVegasError):
    pass


class DegenerateInput(LasVegasError):
    pass


class GramMismatch(LasVegasError):
    pass


class NotPSD(LasVegasError):
    pass


class LabelError(LasVegasError):
    pass


class RangeError(LasVegasError):
    pass


class NotASolution(LasVegasError):
    pass


class NotFeasible(LasVegasError):
    pass


class KindError(LasVegasError):
    pass


class Inconsistent(LasVegasError):
    pass


class SubspaceError(LasVegasError):
    pass


class NotSliced(LasVegasError):
    pass


class NotPosDef(LasVegasError):
    pass


class IndependenceViolation(LasVegasError):
    pass


class Infeasible(LasVegasError):
    pass


class NotACycle(LasVegasError):
    pass


class EntryDomainError(LasVegasError):
    pass


class BudgetExceeded(LasVegasError):
    exit_code = 5
