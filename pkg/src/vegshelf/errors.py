"""Exception hierarchy shared across the toolkit."""


class VegshelfError(Exception):
    """Base class for all toolkit errors."""


class ParseError(VegshelfError):
    """A folder or file name does not follow the dataset naming convention."""


class LabelError(VegshelfError):
    """A label value is outside its registered domain."""


class EmptyDatasetError(VegshelfError):
    """A dataset root yielded no usable samples."""


class ImageError(VegshelfError):
    """An image file could not be decoded."""


class SpecError(VegshelfError):
    """An invalid configuration object (noise spec, model spec, train config)."""


class RegistryError(VegshelfError):
    """Unknown backbone or model identifier."""


class WeightsError(VegshelfError):
    """Pretrained weights are unavailable (missing package or download failure)."""


class ConstructionError(VegshelfError):
    """Model assembly failed (e.g. dimension mismatch at the fusion point)."""


class EvaluationError(VegshelfError):
    """Metric computation received degenerate or mismatched inputs."""


class PairingError(VegshelfError):
    """Two report sets could not be matched by model id."""


class SamplingError(VegshelfError):
    """Perturbation sampling was asked for fewer samples than unknowns."""
