"""Exception hierarchy shared by every module"""


class CsmaError(Exception):
    """Base class for all errors raised by this package"""


class InvalidGraphError(CsmaError, ValueError):
    """Malformed conflict graph or link list (duplicate link, dangling endpoint)"""


class InfeasibleScheduleError(CsmaError, ValueError):
    """A set of links required to be independent is not"""


class EnumerationCapError(CsmaError, ValueError):
    """Instance too large for exact enumeration"""


class DomainError(CsmaError, ValueError):
    """Argument outside the domain of the operation"""


class DistributionError(CsmaError, ValueError):
    """Probability vectors that are not normalized or have mismatched supports"""


class NonReversibleError(CsmaError, ValueError):
    """Kernel fails detailed balance against its stationary vector"""


class ConfigError(CsmaError, ValueError):
    """Invalid experiment or graph configuration document"""


class MissingOracleError(CsmaError, ValueError):
    """A metric needs max-weight oracle data the trace does not carry"""
