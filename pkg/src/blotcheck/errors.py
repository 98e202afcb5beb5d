"""Exception types raised across the pipeline.

Everything derives from :class:`BlotcheckError` so callers can catch the
whole family at the CLI boundary. I/O failures use the builtin ``OSError``.
"""


class BlotcheckError(Exception):
    """Base class for all pipeline errors."""


# -- corpus ----------------------------------------------------------------

class MalformedManifest(BlotcheckError):
    """Manifest row is missing a required field or cannot be parsed."""


class DuplicateKey(BlotcheckError):
    """Two manifest rows share the same (doi, figure_id)."""


class FetchFailed(BlotcheckError):
    """A figure source could not be retrieved."""


class DecodeFailed(BlotcheckError):
    """Fetched bytes are not a decodable PNG or JPEG image."""


class EmptyImage(BlotcheckError):
    """Decoded image has zero area."""


# -- annotate --------------------------------------------------------------

class NotColorImage(BlotcheckError):
    """Annotation detection needs a 3-channel image."""


class DegenerateInterior(BlotcheckError):
    """Stripping a ring would leave an interior smaller than 1x1."""


# -- roi / segment ---------------------------------------------------------

class ConstantImage(BlotcheckError):
    """All pixels are equal; no threshold separates two classes."""


class OutOfBounds(BlotcheckError):
    """A crop box reaches outside the host image."""


# -- pairing ---------------------------------------------------------------

class UnknownPanelIndex(BlotcheckError):
    """Ground truth references a panel index that does not exist."""


class TooFewFigures(BlotcheckError):
    """Fewer figures than non-empty splits requested."""


# -- net -------------------------------------------------------------------

class ShapeMismatch(BlotcheckError):
    """Tensor shapes are inconsistent with the layer or model."""


class InputTooSmall(BlotcheckError):
    """Spatial input is too small for the requested operation."""


class LengthMismatch(BlotcheckError):
    """Prediction and label lists differ in length."""


class EmptyBatch(BlotcheckError):
    """Loss requested over zero samples."""


class NonFiniteGradient(BlotcheckError):
    """A gradient contains NaN or infinity."""


class ChecksumMismatch(BlotcheckError):
    """Checkpoint bytes fail CRC validation (corrupt or truncated)."""


class VersionMismatch(BlotcheckError):
    """Checkpoint format version is not supported."""


# -- runner ----------------------------------------------------------------

class SingleClassTrainingSet(BlotcheckError):
    """Training split contains only one label class."""


class EmptySplit(BlotcheckError):
    """Evaluation requested on an empty split."""
