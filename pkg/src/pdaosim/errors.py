"""Exception types raised by the simulator."""


class PdaoError(Exception):
    """Base class for simulator errors."""


class InvalidArgument(PdaoError, ValueError):
    pass


class TruncationOverflow(PdaoError):
    """Population leaked into the top guard band of the Fock basis."""

    def __init__(self, message, time=None, tail=None):
        super().__init__(message)
        self.time = time
        self.tail = tail


class IntegrationFailure(PdaoError):
    """The integrator could not continue; `last_good_time` is the last accepted sample."""

    def __init__(self, message, last_good_time=None):
        super().__init__(message)
        self.last_good_time = last_good_time


class NonStationary(PdaoError):
    pass


class ConfigError(PdaoError):
    pass
