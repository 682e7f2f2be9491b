"""
Exception hierarchy for relative_descent.

Numerical modules raise these; the experiment runner records them per run and
the CLI turns configuration problems into a non-zero exit code.
"""


class RelativeDescentError(Exception):
    """Base class for every error raised by this package."""


class DomainError(RelativeDescentError, ValueError):
    """A point lies outside the domain of h or the feasible set."""


class StepOutOfDomain(DomainError):
    """A mirror step has no minimizer inside the open domain of h."""

    def __init__(self, message: str, coordinates: list[int] | None = None):
        super().__init__(message)
        self.coordinates = coordinates or []


class RangeError(RelativeDescentError, ValueError):
    """A value lies outside the range of a component gradient."""


class DimensionMismatch(RelativeDescentError, ValueError):
    """Vector or matrix shapes do not agree."""


class CertificateError(RelativeDescentError):
    """A smoothness, convexity or ESO certificate is invalid."""


class InvalidCertificate(CertificateError, ValueError):
    """Certificate values are inconsistent, e.g. mu >= L."""


class MissingCertificate(CertificateError):
    """A bound needs a certificate the problem does not carry."""


class DataError(RelativeDescentError, ValueError):
    """Problem data violates a builder precondition."""


class SingularError(RelativeDescentError):
    """A matrix that must be factorized is numerically singular."""


class OracleUnavailable(RelativeDescentError):
    """The problem defines no stochastic gradient oracle."""


class MissingOptimum(RelativeDescentError):
    """The optimal value f* is required but unknown."""


class InvalidParams(RelativeDescentError, ValueError):
    """Parameters of a theory evaluator are out of range."""


class ConvergenceError(RelativeDescentError):
    """An inner scalar solve did not reach its tolerance."""


class ConfigError(RelativeDescentError):
    """An experiment configuration is malformed or references unknown names."""
