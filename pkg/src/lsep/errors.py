"""Exception taxonomy shared by every lsep module.

Everything raised on purpose derives from :class:`LsepError` so the CLI can
map library failures to exit code 1 while argparse keeps 2 for usage errors.
"""


class LsepError(Exception):
    """Base class for all errors raised by lsep."""


class FormatError(LsepError):
    """A binary or JSON container is malformed (bad magic, bad header)."""


class UnsupportedFormatError(FormatError):
    """The container is well-formed but uses an encoding we do not read."""


class LengthError(FormatError):
    """Declared sizes disagree with the actual payload."""


class ValidationError(LsepError):
    """A value-level invariant is violated (NaN/Inf, out-of-range field)."""


class SchemaError(LsepError):
    """A manifest violates its schema (duplicate ids, bad label domain)."""


class MissingResourceError(LsepError):
    """A manifest reference does not resolve to a readable resource."""


class InsufficientInputError(LsepError):
    """The input is too short or too small for the requested operation."""


class ShapeError(LsepError):
    """Array dimensions are inconsistent with the operation's contract."""


class DegenerateSimilarityError(LsepError):
    """Cosine similarity was requested against a zero-norm vector."""


class DivergenceError(LsepError):
    """An iterative optimization produced a non-finite objective."""


class BalanceError(LsepError):
    """Class balancing is impossible (only one class present)."""


class TrainingError(LsepError):
    """A classifier cannot be trained on the given data."""


class MissingRowError(LsepError):
    """A sentence id has no trained dense-vector row."""


class UsageError(LsepError):
    """Bad command-line usage; mapped to exit code 2."""
