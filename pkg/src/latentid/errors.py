"""Exception types raised across the library.

Every error is a subclass of :class:`LatentIdError`, so callers can catch the
whole family with one clause or pick out the specific failure they care about.
"""


class LatentIdError(Exception):
    """Base class for all library errors."""


# ---------------------------------------------------------------------------
# tensor / matrix primitives


class MismatchedRowsError(LatentIdError):
    """Factor matrices do not share a common row count."""


class EmptyInputError(LatentIdError):
    """An operation received an empty factor list."""


class NonFiniteEntriesError(LatentIdError):
    """A matrix or tensor contains NaN or infinite entries."""


class TooManyRowsError(LatentIdError):
    """Kruskal-rank subset enumeration would exceed the configured row cap."""


class DimensionMismatchError(LatentIdError):
    """Shapes of the provided arrays are inconsistent."""


class NotKhatriRaoError(LatentIdError):
    """The matrix is not a row tensor product of stochastic factors."""


class BadPartitionError(LatentIdError):
    """Index blocks are not disjoint, nonempty and covering."""


class DuplicateValuesError(LatentIdError):
    """Vandermonde node values are not pairwise distinct."""


# ---------------------------------------------------------------------------
# model construction


class TooLargeError(LatentIdError):
    """The requested dense object exceeds the configured entry cap."""


class NotThreeVariablesError(LatentIdError):
    """The operation is defined only for three observed variables."""


class TooFewVariablesError(LatentIdError):
    """At least three observed variables are required."""


# ---------------------------------------------------------------------------
# tensor decomposition / recovery


class DegenerateSpectrumError(LatentIdError):
    """Simultaneous diagonalization failed after all re-randomizations."""


class RankDeficientError(LatentIdError):
    """A slice mixture or unfolding has numerical rank below the target."""


class NegativeWeightsError(LatentIdError):
    """A recovered mixing weight is negative beyond tolerance."""


# ---------------------------------------------------------------------------
# hidden Markov chains


class NonUniqueStationaryError(LatentIdError):
    """The unit eigenvalue of the transition matrix is not simple."""


class NotStationaryError(LatentIdError):
    """The provided distribution is not stationary for the chain."""


class IllConditionedError(LatentIdError):
    """A linear solve required by recovery is rank deficient."""


# ---------------------------------------------------------------------------
# random graph mixtures


class BadEdgeError(LatentIdError):
    """An edge must join two distinct nodes inside the graph."""


class InconsistentOracleError(LatentIdError):
    """Row-oracle answers conflict beyond tolerance."""


class NotDistinctError(LatentIdError):
    """Fewer than three distinct connection probabilities were observed."""


# ---------------------------------------------------------------------------
# nonparametric mixtures


class GridExhaustedError(LatentIdError):
    """No candidate cut point reduces the left nullspace.

    Signals linear dependence of the component family over the span of the
    candidate grid (either the family is dependent or the grid is too coarse).
    """


class NonMonotoneCdfError(LatentIdError):
    """A CDF table produced a negative bin mass beyond tolerance."""


class AmbiguousChainingError(LatentIdError):
    """Label matching between two recovery runs is not a unique bijection."""
