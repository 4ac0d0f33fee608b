"""Exception types shared across the package."""


class VortlabError(Exception):
    """Base class for all package-specific errors."""


class OutOfDomainError(VortlabError):
    """A field was queried outside its label-space box or time window."""


class DegenerateMapError(VortlabError):
    """The label map has a (numerically) singular Jacobian at the query point."""


class FoldedRelabelingError(VortlabError):
    """A relabeling displacement folds the label domain (non-positive local volume factor)."""


class NonPositiveDensityError(VortlabError):
    """A density evaluation produced a value <= 0."""


class GridFormatError(VortlabError):
    """A sampled-grid file does not conform to the documented format."""
