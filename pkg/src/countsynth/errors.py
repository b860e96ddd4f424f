"""Exception hierarchy shared by all countsynth modules."""


class CountSynthError(Exception):
    """Base class for all errors raised by countsynth."""


class DimensionError(CountSynthError, ValueError):
    pass


class DisturbanceBoundError(CountSynthError, ValueError):
    pass


class IntegrationError(CountSynthError, ArithmeticError):
    """The flow produced a non-finite state."""


class CertificateError(CountSynthError, ValueError):
    """The stability certificate admits no bisimilarity margin."""


class GraphError(CountSynthError, ValueError):
    pass


class EnumerationOverflow(CountSynthError):
    """Cycle enumeration exceeded its configured cap."""


class ParityError(CountSynthError, ValueError):
    """Source and target histograms have incompatible periodic class sums."""

    def __init__(self, message, source_sums=None, target_sums=None):
        super().__init__(message)
        self.source_sums = source_sums
        self.target_sums = target_sums


class LcmCapExceeded(CountSynthError):
    pass


class DivisibilityError(CountSynthError, ValueError):
    pass


class ProtocolViolation(CountSynthError):
    """Fleet histogram disagrees with the solution it is executing."""


class NotSupportedError(CountSynthError, NotImplementedError):
    pass


class ConfigError(CountSynthError, ValueError):
    pass
