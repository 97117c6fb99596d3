"""Exception types raised by the solver."""


class HopfionError(Exception):
    """Base class for all solver errors."""


class OutOfDomain(HopfionError):
    pass


class FieldCollapse(HopfionError):
    pass


class NotClosed(HopfionError):
    pass


class SolverDiverged(HopfionError):
    pass


class DegenerateSeed(HopfionError):
    pass


class OpenCurve(HopfionError):
    pass


class CurvesTooClose(HopfionError):
    pass


class NoPreimage(HopfionError):
    pass


class NotLocalized(HopfionError):
    pass


class VortexDetected(HopfionError):
    pass


class FormatError(HopfionError):
    pass


class ConfigError(HopfionError):
    pass
