"""Exception hierarchy shared across the toolkit.

All domain errors derive from :class:`LidPartError` so callers (and the CLI)
can distinguish data/validation failures from programming errors. Every class
takes a single message argument; helper code re-raises them with extra context
(layer index, round, node id) prepended to the message.
"""


class LidPartError(Exception):
    """Base class for all toolkit errors."""


# --- distance / estimator -------------------------------------------------

class KTooLargeError(LidPartError):
    """Requested more neighbors than the batch can supply (k > b-1)."""


class InvalidIndexError(LidPartError):
    """Reference row index outside the batch."""


class ZeroDistanceError(LidPartError):
    """A neighbor distance of exactly zero (duplicate points)."""


class DegenerateNeighborhoodError(LidPartError):
    """All k neighbor distances equal; the log-ratio estimator is undefined."""


class InvalidDimsError(LidPartError):
    """Intrinsic dimension exceeds the ambient dimension."""


# --- search space ---------------------------------------------------------

class EmptyMaskError(LidPartError):
    """An operation mask with no active bits."""


class AlreadySplitError(LidPartError):
    """Attempt to split a layer whose mask is not full."""


class IncompatibleSubsError(LidPartError):
    """Sub-supernets that cannot be merged (differ outside the merge layer)."""


class SpecMismatchError(LidPartError):
    """Architecture encoding and space disagree in shape."""


class UnknownOpError(LidPartError):
    """An encoding references an operation index the space does not define."""


# --- tensor container / providers ----------------------------------------

class BadMagicError(LidPartError):
    """File does not start with the tensor-container magic bytes."""


class UnsupportedVersionError(LidPartError):
    """Tensor container version not understood by this reader."""


class UnsupportedDtypeError(LidPartError):
    """Tensor container carries a dtype code other than float32."""


class TruncatedPayloadError(LidPartError):
    """Tensor container payload shorter (or longer) than the header declares."""


class NonFiniteValueError(LidPartError):
    """NaN or Inf encountered where finite values are required."""


class MissingEntryError(LidPartError):
    """Activation manifest has no blob for a queried (layer, op) pair."""


class ShapeMismatchError(LidPartError):
    """Batches that must agree in shape do not."""


class InvalidPlanError(LidPartError):
    """Synthetic dimension plan is incomplete or exceeds the feature width."""


# --- partition ------------------------------------------------------------

class LengthMismatchError(LidPartError):
    """Vectors that must have equal length do not."""


class ConstantProfileError(LidPartError):
    """Pearson similarity is undefined for a constant profile."""


class TooManyOpsError(LidPartError):
    """Exhaustive bipartition enumeration refused (n > 20)."""


class NoSplittableLayerError(LidPartError):
    """Every layer of the sub-supernet is already partitioned."""


# --- evolutionary search --------------------------------------------------

class ParseError(LidPartError):
    """Malformed benchmark or prediction file."""


class DuplicateEncodingError(LidPartError):
    """The same architecture encoding appears twice in one file."""


class CoverageGapError(LidPartError):
    """An encoding reachable by the search is missing from the benchmark."""


class AllTiedError(LidPartError):
    """Rank correlation is undefined when a list is constant."""


# --- CLI / config ---------------------------------------------------------

class ConfigError(LidPartError):
    """Run configuration file is invalid or references missing files."""
