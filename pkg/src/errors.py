"""Errors raised by the splitting computations.

Every error carries the exit code the CLI reports for it.
"""


class TunnelError(Exception):
    """Base class for all domain errors."""

    exit_code: int = 1


class ValidationFailure(TunnelError):
    """Input rejected before any computation started."""

    exit_code = 2


class InvalidSpin(ValidationFailure):
    """Spin text is malformed, non-positive or not a half-integer."""


class InvalidField(ValidationFailure):
    """Field text is malformed, or the field is zero where a gap is requested."""


class InvalidLevel(ValidationFailure):
    """Doublet index is out of range for the spin, or the formula branch does not apply."""


class UnsupportedLevel(ValidationFailure):
    """The quantity is only defined for the ground doublet."""


class OutOfRange(ValidationFailure):
    """A magnetic quantum number lies outside the admissible range."""


class InvalidPrecision(ValidationFailure):
    """Precision text is malformed or below the working floor."""


class InvalidConfig(ValidationFailure):
    """A sweep or command configuration is inconsistent."""


class DegenerateFit(ValidationFailure):
    """A power-law fit was requested on too few or non-positive values."""


class RegimeFailure(TunnelError):
    """The computation left the perturbative tunnelling regime."""

    exit_code = 3


class DoubletBroken(RegimeFailure):
    """The two members of a doublet are not adjacent in the merged spectrum."""


class NoConvergence(RegimeFailure):
    """An iterative solver hit its iteration cap."""


class BracketFailure(RegimeFailure):
    """No sign change inside the root bracket."""


class PrecisionExhausted(TunnelError):
    """The requested resolution is below what the working precision can certify."""

    exit_code = 4
