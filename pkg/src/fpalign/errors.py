"""Exception types shared across the package.

Exit-code mapping used by the CLI: ConfigError -> 4,
DensityDegeneracyError (and other solver failures) -> 3,
monitor failures -> 2.
"""


class ConfigError(ValueError):
    """Invalid configuration: bad grid sizes, CFL violation, unknown keys, ..."""


class GridMismatchError(ValueError):
    """Field shape does not match the grid it claims to live on."""


class DensityDegeneracyError(RuntimeError):
    """Mollified density fell below the floor (continuation guard trigger)."""

    def __init__(self, message, time=None, min_rho_phi=None, location=None):
        super().__init__(message)
        self.time = time
        self.min_rho_phi = min_rho_phi
        self.location = location
