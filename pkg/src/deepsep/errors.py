"""Exception types shared across the package."""


class DeepsepError(Exception):
    """Base class for all deepsep errors."""


# --- feature extraction ---

class UnknownLayer(DeepsepError):
    """Layer name not present in the registry for the given network."""


class ImageTooSmall(DeepsepError):
    """Input image too small for the tap's receptive stack (spatial dims would collapse)."""


class BackendFailure(DeepsepError):
    """Inference backend failed while producing activations."""


class TapMismatch(DeepsepError):
    """Operation on vectors from different (network, layer) taps."""


# --- feature dump files ---

class BadMagic(DeepsepError):
    """File does not start with the feature-dump magic bytes."""


class VersionMismatch(DeepsepError):
    """Feature-dump format version not supported by this reader."""


class CorruptIndex(DeepsepError):
    """Feature-dump record index inconsistent with the payload."""


# --- separability indices ---

class DegenerateWithin(DeepsepError):
    """Within-cluster scatter is zero; variance ratio undefined."""


class CoincidentCentroids(DeepsepError):
    """Two cluster centroids coincide; centroid-distance ratio undefined."""


class ConstantIndex(DeepsepError):
    """An index takes a single value across the table; min-max normalization undefined."""


class KeyMismatch(DeepsepError):
    """Tables to be aggregated do not share the same (network, layer) keys."""


# --- correlation / splits ---

class ConstantInput(DeepsepError):
    """Correlation of a constant series is undefined."""


class DegenerateSplit(DeepsepError):
    """A train/test split leaves too few test references to evaluate."""


class MissingVector(DeepsepError):
    """A manifest image has no pooled vector in the dump."""


# --- recognition ---

class EmptyTrainSet(DeepsepError):
    """k-NN prediction requested with no training vectors."""


# --- manifests ---

class ParseError(DeepsepError):
    """Manifest file could not be parsed."""


class SchemaViolation(DeepsepError):
    """Manifest contents violate the schema (duplicate ids, bad fields...)."""


class DanglingReference(DeepsepError):
    """A manifest row points at a reference id that does not resolve."""


# --- reporting ---

class MissingInput(DeepsepError):
    """A report was requested but no usable result files were found."""
