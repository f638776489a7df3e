"""Exception hierarchy.

Every domain failure derives from :class:`ClockplanError` so the CLI can map
it to exit code 1 without catching programming errors.
"""


class ClockplanError(Exception):
    pass


class MalformedRecord(ClockplanError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingBaseline(ClockplanError):
    pass


class NonPositiveSample(MalformedRecord):
    pass


class DuplicateRow(MalformedRecord):
    pass


class ConstraintViolation(MalformedRecord):
    pass


class UnknownKernel(ClockplanError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class FrontOverflow(ClockplanError):
    pass


class Infeasible(ClockplanError):
    pass


class NoCommonConfig(ClockplanError):
    pass


class InstanceTooLarge(ClockplanError):
    pass


class UnknownConfigInAssignment(ClockplanError):
    pass


class OrderMismatch(ClockplanError):
    pass
