"""
Exception hierarchy for smlab.

Every error carries the process exit code the CLI reports for it:
2 for configuration problems, 3 for numerical failures.
"""


class SmlabError(Exception):
    """Base class for all smlab errors."""

    exit_code = 1


class ConfigError(SmlabError):
    """Raised when an experiment configuration is invalid."""

    exit_code = 2


class InvalidParams(ConfigError):
    """Raised when parameters violate a law or construction constraint."""

    pass


class UnknownLaw(ConfigError):
    """Raised when a law name is not in the catalog."""

    pass


class NumericError(SmlabError):
    """Raised when a numerical procedure fails."""

    exit_code = 3


class QuadratureFailure(NumericError):
    """Adaptive quadrature did not reach the requested accuracy."""

    pass


class NonFiniteDensity(NumericError):
    """Density underflowed or became non-finite at an interior point."""

    pass


class UnstableDenominator(NumericError):
    """g*·ρ* underflowed where the Stein solution divides by it."""

    pass


class MomentUndefined(NumericError):
    """A requested moment does not exist for the law."""

    pass


class EmbeddingNotPSD(NumericError):
    """Circulant embedding produced negative eigenvalues."""

    pass


class DomainError(NumericError):
    """Point outside the support of the law."""

    pass


class UnsupportedSupport(NumericError):
    """Operation requires a full-line support."""

    pass


class AssumptionViolation(NumericError):
    """Law fails the regularity assumptions an operation needs."""

    pass


class OrderMismatch(NumericError):
    """Tensor order does not match the declared chaos order."""

    pass


class RankError(NumericError):
    """Contraction indices out of range."""

    pass


class CapExceeded(NumericError):
    """Grid, order or path budget exceeds the configured caps."""

    pass


class NonCentered(NumericError):
    """Operation requires a centered chaos vector."""

    pass


class GradientUnavailable(NumericError):
    """Functional has no usable gradient."""

    pass


class TooFewSamples(NumericError):
    """Not enough samples for a stable estimate."""

    pass


class SigmaZero(NumericError):
    """First Hermite coefficient vanishes, so the limit variance is zero."""

    pass


class Inconclusive(NumericError):
    """A numerical check could neither confirm nor reject its hypothesis."""

    pass
