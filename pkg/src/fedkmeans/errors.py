"""Exception types shared across the package."""


class FedkmeansError(Exception):
    """Base class for all package-specific errors."""


class UnsupportedModulusError(FedkmeansError):
    """Requested modulus exceeds the supported field width.

    Grids this large must go through the deterministic big-integer
    decoder (`aggregate.decode_big_deterministic`) instead.
    """


class DataError(FedkmeansError, ValueError):
    """Invalid input data (non-finite entries, ragged CSV rows, ...)."""


class GridRangeError(FedkmeansError, ValueError):
    """Coordinate or bin index outside the grid's domain."""


class ModulusTooSmallError(FedkmeansError, ValueError):
    """A bin index or count does not fit in the chosen field."""


class ProtocolError(FedkmeansError):
    """Malformed or inconsistent protocol messages."""


class DecodeFailureError(FedkmeansError):
    """Aggregate syndromes do not decode to a valid sparse multiset."""


class InfeasibleError(FedkmeansError, ValueError):
    """Clustering request cannot be satisfied (K exceeds distinct points)."""


class UndefinedObjectiveError(FedkmeansError, ValueError):
    """Objective requested against an empty centroid list."""


class OracleScaleError(FedkmeansError, ValueError):
    """Brute-force oracle invoked beyond its enumerable size."""


class PartitionError(FedkmeansError, ValueError):
    """Non-iid partition constraints cannot be met."""
