"""Exception types shared across the package."""


class CrowdMPMError(Exception):
    """Base class for all package errors."""


class OutOfDomain(CrowdMPMError):
    """A position left the padded grid interior (no full 3x3 stencil)."""


class DimensionTooSmall(CrowdMPMError):
    """Grid too small for the requested finite-difference stencil."""


class DimMismatch(CrowdMPMError):
    """Two fields/sequences do not share grid or image dimensions."""


class NonFiniteForce(CrowdMPMError):
    """A force field contains NaN or Inf."""


class NonFiniteField(CrowdMPMError):
    """A field input/output contains NaN or Inf."""


class NonFiniteGradient(CrowdMPMError):
    """Reverse-mode gradient came back NaN or Inf."""


class StabilityViolation(CrowdMPMError):
    """dt exceeds the CFL-like bound for the current particle speeds."""


class BadMagic(CrowdMPMError):
    """File does not start with the expected magic bytes."""


class TruncatedFile(CrowdMPMError):
    """File ended before the declared payload was read."""


class EmptyMask(CrowdMPMError):
    """Loss mask selects no frames."""


class MissingFrames(CrowdMPMError):
    """A run directory holds no frame outputs."""


class Diverged(CrowdMPMError):
    """Training loss became non-finite; carries the last good parameters."""

    def __init__(self, message, last_good=None):
        super().__init__(message)
        self.last_good = last_good


class InvalidScenario(CrowdMPMError):
    """Scenario failed schema or geometric validation."""
