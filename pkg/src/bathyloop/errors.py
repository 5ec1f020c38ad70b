"""Exception types shared across the package."""


class BathyError(Exception):
    """Base class for all package errors."""


class InvalidInputError(BathyError):
    """An argument violates a documented precondition."""


class InvalidShapeError(BathyError):
    """Tensor shapes are incompatible for a primitive."""

    def __init__(self, primitive: str, message: str):
        super().__init__(f"{primitive}: {message}")
        self.primitive = primitive


class DegenerateGeometryError(BathyError):
    """Point configuration is rank-deficient for pose estimation."""


class NoOverlapError(BathyError):
    """Two clouds share no overlapping region under the current gate/grid."""


class DegenerateSupportError(BathyError):
    """Too few neighbors to build a local descriptor."""


class ShortfallError(BathyError):
    """Requested dataset counts could not be met; carries achieved counts."""

    def __init__(self, message: str, achieved: dict):
        super().__init__(f"{message} (achieved: {achieved})")
        self.achieved = achieved


class ConfigError(BathyError):
    """Malformed or unknown configuration keys."""
