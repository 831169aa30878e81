"""Periodic spatial grid, truncated velocity grid, and midpoint quadrature.

All solvers and diagnostics share these primitives.  Spatial cells are
centered at x_i = i*dx on [0, L); velocity cells are centered symmetrically
about 0, built by mirroring the positive half so that v_j = -v_{nv-1-j}
holds bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GridMismatchError


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on [0, length)."""

    length: float
    nx: int
    dx: float = field(init=False)

    def __post_init__(self):
        if not self.length > 0:
            raise ConfigError(f"torus length must be positive, got {self.length}")
        if self.nx < 4:
            raise ConfigError(f"nx must be >= 4, got {self.nx}")
        dx = self.length / self.nx
        # Snap the stored length to nx*dx so periodic arithmetic is exact.
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "length", dx * self.nx)

    @property
    def centers(self) -> np.ndarray:
        return np.arange(self.nx) * self.dx


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform grid on [-vmax, vmax], cell-centered, symmetric about 0."""

    vmax: float
    nv: int
    dv: float = field(init=False)

    def __post_init__(self):
        if not self.vmax > 0:
            raise ConfigError(f"vmax must be positive, got {self.vmax}")
        if self.nv < 8 or self.nv % 2 != 0:
            raise ConfigError(f"nv must be even and >= 8, got {self.nv}")
        object.__setattr__(self, "dv", 2.0 * self.vmax / self.nv)

    @property
    def centers(self) -> np.ndarray:
        half = (np.arange(self.nv // 2) + 0.5) * self.dv
        return np.concatenate([-half[::-1], half])

    @property
    def faces(self) -> np.ndarray:
        """nv+1 cell faces, the outermost at +-vmax."""
        return -self.vmax + np.arange(self.nv + 1) * self.dv


@dataclass(frozen=True)
class PhaseGrid:
    """Product of a TorusGrid and a VelocityGrid; cell weight dx*dv."""

    x: TorusGrid
    v: VelocityGrid

    @property
    def cell_weight(self) -> float:
        return self.x.dx * self.v.dv


def make_grids(length: float, nx: int, vmax: float, nv: int) -> PhaseGrid:
    """Build the phase grid, validating sizes."""
    return PhaseGrid(TorusGrid(length, nx), VelocityGrid(vmax, nv))


def periodic_distance(x, y, length: float):
    """Shortest distance on the circle of circumference `length`; <= length/2."""
    r = np.mod(np.asarray(x, dtype=float) - y, length)
    return np.minimum(r, length - r)


def integrate(fld: np.ndarray, grid, domain: str) -> float:
    """Midpoint-rule integral of a sampled field over x, v, or x*v."""
    fld = np.asarray(fld)
    if domain == "x":
        if not isinstance(grid, TorusGrid) or fld.shape != (grid.nx,):
            raise GridMismatchError(f"expected shape ({getattr(grid, 'nx', '?')},), got {fld.shape}")
        return float(fld.sum() * grid.dx)
    if domain == "v":
        if not isinstance(grid, VelocityGrid) or fld.shape != (grid.nv,):
            raise GridMismatchError(f"expected shape ({getattr(grid, 'nv', '?')},), got {fld.shape}")
        return float(fld.sum() * grid.dv)
    if domain == "xv":
        if not isinstance(grid, PhaseGrid) or fld.shape != (grid.x.nx, grid.v.nv):
            raise GridMismatchError(f"expected phase-grid shape, got {fld.shape}")
        return float(fld.sum() * grid.cell_weight)
    raise ConfigError(f"unknown integration domain {domain!r}")
