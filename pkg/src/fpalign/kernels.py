"""Communication kernels, periodic convolution, and the Favre filtration.

A kernel is a nonnegative, even, unit-mass convolution profile on the torus.
Three families: `global_uniform` (constant 1/L), `bump` (C-infinity bump
supported exactly on {dist < r0}), and `wrapped_gaussian` (periodized
Gaussian of width r0, strictly positive).  Discrete samples are renormalized
so that sum(phi_k) * dx == 1, which makes the mass and momentum identities
of the filtration exact at quadrature level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import core
from .errors import ConfigError, DensityDegeneracyError, GridMismatchError
from .grids import TorusGrid, periodic_distance

KERNEL_FAMILIES = ("global_uniform", "bump", "wrapped_gaussian")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its range r0 and lower-bound constant c0.

    c0 is optional; when omitted it defaults to the discretized kernel's
    minimum over {dist < r0}, the largest value the lower-bound property
    can hold with.
    """

    family: str
    r0: float | None = None
    c0: float | None = None

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise ConfigError(f"unknown kernel family {self.family!r}")
        if self.family != "global_uniform":
            if self.r0 is None or not self.r0 > 0:
                raise ConfigError(f"kernel family {self.family!r} requires r0 > 0")
        if self.c0 is not None and not self.c0 > 0:
            raise ConfigError("c0 must be positive when given")


@dataclass(frozen=True)
class DiscreteKernel:
    """Kernel samples on torus offsets, renormalized to unit discrete mass."""

    grid: TorusGrid
    samples: np.ndarray
    r0: float
    c0: float
    family: str

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.shape != (self.grid.nx,):
            raise GridMismatchError("kernel samples do not match the grid")
        object.__setattr__(self, "samples", s)

    @property
    def min_value(self) -> float:
        return float(self.samples.min())


def build_kernel(spec: KernelSpec, grid: TorusGrid) -> DiscreteKernel:
    """Discretize a kernel spec on the grid offsets and renormalize."""
    L = grid.length
    d = periodic_distance(grid.centers, 0.0, L)
    if spec.family == "global_uniform":
        if spec.r0 is not None and abs(spec.r0 - L / 2) > 1e-12 * L:
            raise ConfigError("global_uniform implies r0 = L/2; omit r0 or set it to L/2")
        r0 = L / 2
        phi = np.full(grid.nx, 1.0 / L)
    else:
        r0 = float(spec.r0)
        if r0 > L / 2:
            raise ConfigError(f"r0 = {r0} exceeds L/2 = {L / 2} for family {spec.family!r}")
        if spec.family == "bump":
            phi = np.zeros(grid.nx)
            inside = d < r0
            phi[inside] = np.exp(-r0**2 / (r0**2 - d[inside] ** 2))
        else:  # wrapped_gaussian
            images = max(5, int(np.ceil(8.0 * r0 / L)) + 2)
            m = np.arange(-images, images + 1)
            phi = np.exp(-((d[:, None] + m[None, :] * L) ** 2) / (2.0 * r0**2)).sum(axis=1)
        phi = phi / (phi.sum() * grid.dx)

    if spec.c0 is not None:
        if spec.c0 * 2.0 * r0 > 1.0:
            raise ConfigError(f"c0 = {spec.c0} incompatible with unit mass: c0 * 2 r0 > 1")
        lower = phi[d < r0]
        if lower.size and lower.min() < spec.c0:
            raise ConfigError(
                f"discretized kernel dips to {lower.min():.3e} below c0 = {spec.c0} on dist < r0"
            )
        c0 = float(spec.c0)
    else:
        c0 = float(phi[d < r0].min())
    return DiscreteKernel(grid=grid, samples=phi, r0=r0, c0=c0, family=spec.family)


def convolve_periodic(g: np.ndarray, kern: DiscreteKernel) -> np.ndarray:
    """(g)_phi on the kernel's grid."""
    g = np.asarray(g, dtype=float)
    if g.shape != (kern.grid.nx,):
        raise GridMismatchError(f"field shape {g.shape} does not match grid nx={kern.grid.nx}")
    return core.convolve_circ(np.ascontiguousarray(g), kern.samples, kern.grid.dx)


def default_density_floor(mass: float, length: float) -> float:
    """Floor distinguishing genuine density degeneracy from roundoff."""
    return 1e-10 * mass / length


def favre_filter(rho, m, kern: DiscreteKernel, floor: float,
                 time: float | None = None) -> np.ndarray:
    """Favre-filtered velocity (m)_phi / (rho)_phi, guarded by the floor."""
    rho_phi = convolve_periodic(rho, kern)
    _check_floor(rho_phi, floor, kern.grid, time)
    return convolve_periodic(m, kern) / rho_phi


def mollified_filter(rho, m, kern: DiscreteKernel, floor: float,
                     time: float | None = None) -> np.ndarray:
    """The communication-protocol velocity: one more mollification of u_F."""
    return convolve_periodic(favre_filter(rho, m, kern, floor, time), kern)


def _check_floor(rho_phi, floor, grid, time):
    i = int(np.argmin(rho_phi))
    lo = float(rho_phi[i])
    if lo < floor:
        raise DensityDegeneracyError(
            f"mollified density {lo:.6e} below floor {floor:.6e} at x = {grid.centers[i]:.6f}"
            + ("" if time is None else f", t = {time:.6f}"),
            time=time, min_rho_phi=lo, location=float(grid.centers[i]),
        )


def hydrodynamic_density_margin(rho, r: float, mass: float, grid: TorusGrid) -> float:
    """min over x of the mass fraction within periodic distance r of x."""
    if not 0 < r <= grid.length / 2:
        raise ConfigError(f"window radius r = {r} not in (0, L/2]")
    rho = np.asarray(rho, dtype=float)
    # Window sum as a convolution with the indicator of {dist < r}.
    d = periodic_distance(grid.centers, 0.0, grid.length)
    window = (d < r).astype(float)
    frac = core.convolve_circ(np.ascontiguousarray(rho), window, grid.dx) / mass
    return float(frac.min())
