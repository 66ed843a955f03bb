"""Exception hierarchy shared by all dagwishart modules."""

from __future__ import annotations


class DagWishartError(Exception):
    """Base class for all library errors."""


class ConfigError(DagWishartError):
    """Invalid user configuration (bad JSON, bad flag combination)."""


class NumericalError(DagWishartError):
    """Base class for failures of a numerical routine."""


class NotPositiveDefinite(NumericalError):
    """A matrix required to be positive definite failed factorization."""


class NotConverged(NumericalError):
    """An iterative solver exhausted its sweep budget."""


class DegenerateWeights(NumericalError):
    """Importance weights collapsed (effective sample size too small)."""


class ImproperPosterior(NumericalError):
    """A vertex has at least as many parents as there are observations."""


class InvalidShape(DagWishartError):
    """A DAG-Wishart shape parameter violates alpha_i - nu_i > 2."""


class SupportViolation(DagWishartError):
    """A Cholesky factor has nonzero entries outside the DAG support."""


class DimensionMismatch(DagWishartError):
    """Two objects defined on different vertex counts were combined."""


class InfeasibleEdgeCount(DagWishartError):
    """A graph perturbation cannot reach the requested edge count."""


class TooLarge(DagWishartError):
    """Exhaustive enumeration requested beyond the supported size."""


class TooFewRows(DagWishartError):
    """Not enough observations for the requested data split."""


class EmptyPool(DagWishartError):
    """An operation requiring candidates received an empty pool."""
