"""Exception hierarchy shared by all modules."""


class PepsDualError(Exception):
    """Base class for every error raised by this package."""


class NetworkError(PepsDualError, ValueError):
    """Malformed tensor network, order, or composition request."""


class ContractionTooLarge(PepsDualError):
    """An intermediate tensor would exceed the configured entry cap."""

    def __init__(self, size: int, cap: int):
        super().__init__(f"contraction too large: intermediate of {size} entries exceeds cap {cap}")
        self.size = size
        self.cap = cap


class OracleInconsistency(PepsDualError):
    """Values returned by a |C|^2 oracle do not fit together."""


class InvalidPostselection(PepsDualError):
    """A postselected outcome has (numerically) zero probability."""


class ZeroNormError(PepsDualError):
    """The state has zero norm, so normalized quantities are undefined."""


class DegenerateGroundState(PepsDualError):
    """The ground state is not unique within tolerance."""


class CapExceeded(PepsDualError):
    """A desk-scale resource cap (qubits, paths, dimension) was exceeded."""


class ParseError(PepsDualError, ValueError):
    """Input file or option string could not be parsed."""


class NumericToleranceError(PepsDualError):
    """A result failed a numeric sanity gate (e.g. rounding residue)."""
