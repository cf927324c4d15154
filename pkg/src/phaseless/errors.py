"""Exception hierarchy shared by all modules."""


class PhaselessError(Exception):
    """Base class for every error raised by this package."""


class SingularLattice(PhaselessError):
    pass


class DimError(PhaselessError, ValueError):
    pass


class TooFewPoints(PhaselessError, ValueError):
    pass


class MissingClassData(PhaselessError):
    pass


class ZeroWindow(PhaselessError, ValueError):
    pass


class SupportError(PhaselessError, ValueError):
    pass


class BadDomain(PhaselessError, ValueError):
    pass


class CoverageError(PhaselessError, ValueError):
    pass


class DegenerateFlip(PhaselessError, ValueError):
    pass


class NotSeparated(PhaselessError, ValueError):
    pass


class Unclassifiable(PhaselessError):
    pass


class GateError(PhaselessError):
    """A uniqueness gate failed while the gate policy was ``enforce``."""

    def __init__(self, message, reports=()):
        super().__init__(message)
        self.reports = list(reports)


class DegenerateSystem(PhaselessError):
    pass


class ZeroSignal(PhaselessError, ValueError):
    pass


class NoCounterexample(PhaselessError):
    pass
