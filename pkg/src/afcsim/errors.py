"""Exception hierarchy shared across the simulator."""


class AfcSimError(Exception):
    """Base class for all afcsim errors."""


class ConfigError(AfcSimError):
    """Bad run configuration (unknown key, parse failure, range violation)."""


class ValidationError(AfcSimError):
    """Numerical or physical validation failure."""


class GridResolutionError(ValidationError):
    """Frequency grid too coarse for the requested structure."""


class GridMismatchError(ValidationError):
    """Operands defined on different or non-conjugate grids."""


class PulseClippedError(ValidationError):
    """Pulse does not fit the time window with the required margin."""


class NoResonanceError(ValidationError):
    """Transfer function has no resonance feature to analyze."""


class UnmatchedConfigError(ValidationError):
    """Mirror/loss combination cannot be impedance matched."""


class BalanceError(ValidationError):
    """Analyzer comb cannot be balanced within the search interval."""
