"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage/parameter errors (plain
``ValueError`` included) exit 2, malformed input data exits 3 and
numerical breakdowns exit 4.
"""


class KronolabError(Exception):
    """Base class for package-specific failures."""


class DomainError(KronolabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """Evaluation requested at (or numerically on top of) a pole."""


class DenseCapError(KronolabError):
    """A dense materialization or eigensolve would exceed the size cap."""


class DataFormatError(KronolabError):
    """Serialized input failed parsing or validation."""


class NumericalFailure(KronolabError):
    """A solver or factorization broke down, or a computed spectrum is invalid."""
