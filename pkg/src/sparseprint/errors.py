"""Exception hierarchy shared by every sparseprint module."""


class SparsePrintError(Exception):
    """Base class for all library errors."""


class MalformedHeader(SparsePrintError):
    pass


class TruncatedPayload(SparsePrintError):
    pass


class DimensionMismatch(SparsePrintError, ValueError):
    pass


class EmptyMeasurement(SparsePrintError):
    pass


class EmptyGallery(SparsePrintError):
    pass


class DuplicateLabel(SparsePrintError):
    pass


class EmptyLabel(SparsePrintError, ValueError):
    pass


class VersionMismatch(SparsePrintError):
    pass


class CorruptManifest(SparsePrintError):
    pass


class ParamsMismatch(SparsePrintError):
    pass
