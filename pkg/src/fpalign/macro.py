"""Finite-volume solver for the 1D isothermal Euler-Alignment system.

rho_t + (rho u)_x = 0
(rho u)_t + (rho u^2 + rho)_x = rho (u_filt - u)

Conservative Rusanov (local dissipative) fluxes with wave speed |u| + 1
(isothermal sound speed 1), followed by the explicit alignment source.
Mass is conserved exactly by the telescoping fluxes; the source integrates
to zero through the filtration momentum identity, so momentum is conserved
to roundoff accumulation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DensityDegeneracyError
from .grids import TorusGrid
from .kernels import DiscreteKernel, default_density_floor, mollified_filter


@dataclass
class MacroState:
    grid: TorusGrid
    rho: np.ndarray
    m: np.ndarray
    t: float

    def __post_init__(self):
        self.rho = np.ascontiguousarray(self.rho, dtype=float)
        self.m = np.ascontiguousarray(self.m, dtype=float)
        if self.rho.shape != (self.grid.nx,) or self.m.shape != (self.grid.nx,):
            raise ConfigError("macro fields do not match the grid")
        if np.any(self.rho <= 0.0):
            raise ConfigError("macro density must be positive")

    @property
    def mass(self) -> float:
        return float(self.rho.sum() * self.grid.dx)

    @property
    def u(self) -> np.ndarray:
        return self.m / self.rho


def macro_step(state: MacroState, dt: float, kern: DiscreteKernel,
               floor: float | None = None) -> MacroState:
    """One Rusanov step plus the alignment source on the momentum."""
    grid = state.grid
    rho, m = state.rho, state.m
    u = m / rho
    if (np.abs(u).max() + 1.0) * dt > grid.dx * (1.0 + 1e-12):
        raise ConfigError(
            f"CFL violated: (max|u|+1)*dt = {(np.abs(u).max() + 1.0) * dt:.3e} "
            f"> dx = {grid.dx:.3e}")
    if floor is None:
        floor = default_density_floor(state.mass, grid.length)

    # Interface i+1/2 couples cell i with cell i+1 (periodic).
    rho_r = np.roll(rho, -1)
    m_r = np.roll(m, -1)
    u_r = np.roll(u, -1)
    speed = np.maximum(np.abs(u) + 1.0, np.abs(u_r) + 1.0)
    flux_rho = 0.5 * (m + m_r) - 0.5 * speed * (rho_r - rho)
    flux_m = 0.5 * (m * u + rho + m_r * u_r + rho_r) - 0.5 * speed * (m_r - m)

    lam = dt / grid.dx
    rho_new = rho - lam * (flux_rho - np.roll(flux_rho, 1))
    m_new = m - lam * (flux_m - np.roll(flux_m, 1))
    if rho_new.min() < floor:
        i = int(np.argmin(rho_new))
        raise DensityDegeneracyError(
            f"vacuum: rho = {rho_new[i]:.6e} below floor at x = {grid.centers[i]:.6f}, "
            f"t = {state.t + dt:.6f}",
            time=state.t + dt, min_rho_phi=float(rho_new[i]),
            location=float(grid.centers[i]))

    u_filt = mollified_filter(rho_new, m_new, kern, floor, time=state.t + dt)
    m_new = m_new + dt * (rho_new * u_filt - m_new)
    return replace(state, rho=rho_new, m=m_new, t=state.t + dt)


@dataclass
class MacroReport:
    t: float
    mass: float
    momentum: float
    Ecal: float
    Ephi: float
    Ephiphi: float
    A: float

    CSV_COLUMNS = ("t", "mass", "momentum", "Ecal", "Ephi", "Ephiphi", "A")

    def csv_values(self):
        return [getattr(self, c) for c in self.CSV_COLUMNS]


def macro_report(state: MacroState, kern: DiscreteKernel, floor: float) -> MacroReport:
    from .kernels import _check_floor, convolve_periodic

    grid = state.grid
    rho, m = state.rho, state.m
    dx = grid.dx
    rho_phi = convolve_periodic(rho, kern)
    _check_floor(rho_phi, floor, grid, state.t)
    m_phi = convolve_periodic(m, kern)
    u_f = m_phi / rho_phi
    u_filt = convolve_periodic(u_f, kern)
    ecal = float((m**2 / rho).sum() * dx)
    ephi = float((m_phi**2 / rho_phi).sum() * dx)
    ephiphi = float((rho * u_filt**2).sum() * dx)
    return MacroReport(t=state.t, mass=float(rho.sum() * dx),
                       momentum=float(m.sum() * dx),
                       Ecal=ecal, Ephi=ephi, Ephiphi=ephiphi, A=ephi - ephiphi)


@dataclass
class MacroRunResult:
    reports: list
    state: MacroState
    snapshots: list
    states: list
    degeneracy: dict | None = None

    @property
    def ok(self) -> bool:
        return self.degeneracy is None


def macro_run(state: MacroState, kern: DiscreteKernel, t_end: float, dt: float,
              report_every: float, floor: float | None = None,
              snapshot_every: float | None = None,
              keep_states: bool = False) -> MacroRunResult:
    """Advance to t_end; optionally keep (rho, m) at every report time."""
    from .kinetic import _exact_steps

    nsteps = _exact_steps(t_end - state.t, dt, "t_end")
    cadence = _exact_steps(report_every, dt, "report_every")
    snap_cad = None if snapshot_every is None else _exact_steps(snapshot_every, dt,
                                                                "snapshot_every")
    if floor is None:
        floor = default_density_floor(state.mass, state.grid.length)

    reports = [macro_report(state, kern, floor)]
    snapshots = [(state.t, state.rho.copy(), state.m.copy())] if snap_cad else []
    states = [(state.t, state.rho.copy(), state.m.copy())] if keep_states else []
    for k in range(1, nsteps + 1):
        try:
            state = macro_step(state, dt, kern, floor)
        except DensityDegeneracyError as err:
            return MacroRunResult(reports=reports, state=state, snapshots=snapshots,
                                  states=states,
                                  degeneracy={"message": "density degeneracy",
                                              "time": err.time,
                                              "min_rho_phi": err.min_rho_phi,
                                              "location": err.location})
        if k % cadence == 0:
            reports.append(macro_report(state, kern, floor))
            if keep_states:
                states.append((state.t, state.rho.copy(), state.m.copy()))
        if snap_cad is not None and k % snap_cad == 0:
            snapshots.append((state.t, state.rho.copy(), state.m.copy()))
    return MacroRunResult(reports=reports, state=state, snapshots=snapshots,
                          states=states)


def init_macro(grid: TorusGrid, mass: float, rho_amplitude: float = 0.0,
               u_amplitude: float = 0.0, wavenumber: int = 1) -> MacroState:
    """rho = (M/L)(1 + a cos(2 pi k x / L)), u = b sin(2 pi k x / L)."""
    if abs(rho_amplitude) >= 1.0:
        raise ConfigError("rho_amplitude must satisfy |a| < 1")
    x = grid.centers
    L = grid.length
    phase = 2.0 * np.pi * wavenumber * x / L
    rho = (mass / L) * (1.0 + rho_amplitude * np.cos(phase))
    u = u_amplitude * np.sin(phase)
    return MacroState(grid=grid, rho=rho, m=rho * u, t=0.0)
