"""Exception hierarchy shared across the package.

ConfigError maps to CLI exit code 2, NumericalError to exit code 1.
"""


class ConfigError(ValueError):
    """Invalid parameters or malformed configuration input."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (search, bracketing, blow-up, resonance)."""


class SearchError(NumericalError):
    """Band search exhausted its scan range before finding enough bands."""


class GaugeError(NumericalError):
    """Phase fixing of a Bloch function failed (reference overlap too small)."""


class BlowUpError(NumericalError):
    """Time integration aborted on norm growth or NaN."""


class ResonanceError(NumericalError):
    """A spectral solve hit a near-resonant denominator."""
