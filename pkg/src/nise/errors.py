"""Exception hierarchy shared by every module in the package."""


class NiseError(Exception):
    """Base class for all errors raised by :mod:`nise`."""


# linear algebra
class NotPositiveDefinite(NiseError, ArithmeticError):
    pass


class RankDeficient(NiseError, ArithmeticError):
    pass


class NoConvergence(NiseError, ArithmeticError):
    pass


# scalar statistics
class EmptyInput(NiseError, ValueError):
    pass


class TooFewPoints(NiseError, ValueError):
    pass


class InvalidDf(NiseError, ValueError):
    pass


class ZeroVariance(NiseError, ArithmeticError):
    pass


# estimators
class EmptyExogenous(NiseError, ValueError):
    pass


class NormalizationFailure(NiseError, ArithmeticError):
    pass


class SingularA(NiseError, ArithmeticError):
    pass


class OrderConditionFailed(NiseError, ValueError):
    pass


# diagnostics
class PreconditionFailed(NiseError, ValueError):
    pass


class InvalidCorrelation(NiseError, ValueError):
    pass


class NoInstruments(NiseError, ValueError):
    pass


class JustIdentified(NiseError, ValueError):
    pass


# resampling / simulation
class InvalidB(NiseError, ValueError):
    pass


class TooManyFailures(NiseError, RuntimeError):
    pass


class UnknownScenario(NiseError, ValueError):
    pass


class ConfigError(NiseError, ValueError):
    pass


class InvalidScenario(NiseError, ValueError):
    pass
