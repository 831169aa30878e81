"""Scalar functionals of kinetic states: entropy, energies, Fisher terms.

Conventions shared by every functional here:
  * 0*log(0) = 0 wherever an entropy integrand appears;
  * Fisher integrands |num|^2 / f skip cells where both f and the stencil
    numerator are below dust thresholds (the continuum integrand is 0*(0/0)
    there); the same cell mask is shared by all three Fisher terms so the
    pointwise Cauchy-Schwarz bound |I_xv| <= (I_vv + I_xx)/2 survives
    discretization exactly;
  * derivatives are centered differences, periodic in x, zero-extended in v.

The energy hierarchy E >= Ecal >= Ephi >= Ephiphi and the alignment-
functional identity A = Ephi - Ephiphi = (double-convolution form) are exact
at quadrature level because the discrete kernel has unit mass and even
symmetry; the corresponding tests assert them at roundoff tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grids import PhaseGrid, TorusGrid
from .kernels import (DiscreteKernel, convolve_periodic,
                      hydrodynamic_density_margin)


def maxwellian_grid(grid: PhaseGrid, sigma: float, ubar: float,
                    mass: float) -> np.ndarray:
    """Spatially uniform Gaussian-in-v samples, renormalized to mass exactly."""
    if abs(ubar) + 6.0 * math.sqrt(sigma) > grid.v.vmax:
        raise ConfigError(f"ubar = {ubar} too close to vmax = {grid.v.vmax}")
    q = np.exp(-((grid.v.centers - ubar) ** 2) / (2.0 * sigma))
    mu = np.broadcast_to(q, (grid.x.nx, grid.v.nv)).copy()
    return mu * (mass / (mu.sum() * grid.cell_weight))


def moments(f: np.ndarray, grid: PhaseGrid):
    """(rho, m, E, Ecal): density, momentum, total and macroscopic energy."""
    dv = grid.v.dv
    v = grid.v.centers
    rho = f.sum(axis=1) * dv
    m = f.dot(v) * dv
    E = float(f.dot(v**2).sum() * grid.cell_weight)
    with np.errstate(divide="ignore", invalid="ignore"):
        ek = np.where(rho > 0.0, m**2 / np.where(rho > 0.0, rho, 1.0), 0.0)
    return rho, m, E, float(ek.sum() * grid.x.dx)


def relative_entropy(f: np.ndarray, mu: np.ndarray, grid: PhaseGrid,
                     sigma: float) -> float:
    """H(f|mu) = sigma * integral of f log(f/mu), with 0 log 0 = 0."""
    pos = f > 0.0
    integ = np.zeros_like(f)
    integ[pos] = f[pos] * np.log(f[pos] / mu[pos])
    return float(sigma * integ.sum() * grid.cell_weight)


def l1_distance(f: np.ndarray, g: np.ndarray, grid: PhaseGrid) -> float:
    return float(np.abs(f - g).sum() * grid.cell_weight)


def _dv_centered(f: np.ndarray, dv: float) -> np.ndarray:
    g = np.zeros((f.shape[0], f.shape[1] + 2))
    g[:, 1:-1] = f
    return (g[:, 2:] - g[:, :-2]) / (2.0 * dv)


def _dx_centered(f: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2.0 * dx)


def _dust_floors(grid: PhaseGrid, sigma: float, mass: float):
    scale = mass / (grid.x.length * grid.v.vmax)
    floor_f = 1e-30 * scale
    floor_num = 1e-15 * scale * (grid.v.vmax + sigma / grid.v.dv)
    return floor_f, floor_num


def _fisher_cells(f, num_v, num_x, sigma, floor_f, floor_num):
    """Shared cell mask and guarded denominator for the Fisher quadratures."""
    ok = f > floor_f
    hot = (~ok) & ((np.abs(num_v) > floor_num)
                   | (math.sqrt(sigma) * np.abs(num_x) > floor_num))
    use = ok | hot
    den = np.where(ok, f, floor_f)
    return use, den


def fisher_vv(f: np.ndarray, u_center, grid: PhaseGrid, sigma: float,
              mass: float | None = None) -> float:
    """I_vv(f, u) = integral of |sigma d_v f + (v - u) f|^2 / f."""
    if mass is None:
        mass = float(f.sum() * grid.cell_weight)
    floor_f, floor_num = _dust_floors(grid, sigma, mass)
    v = grid.v.centers
    u = np.broadcast_to(np.asarray(u_center, dtype=float), (grid.x.nx,))
    num = sigma * _dv_centered(f, grid.v.dv) + (v[None, :] - u[:, None]) * f
    use, den = _fisher_cells(f, num, np.zeros_like(f), sigma, floor_f, floor_num)
    return float(((num**2 / den) * use).sum() * grid.cell_weight)


def fisher_cross(f: np.ndarray, grid: PhaseGrid, sigma: float,
                 mass: float | None = None):
    """(I_xv, I_xx) with the hypocoercivity weights sigma^{3/2} and sigma."""
    if mass is None:
        mass = float(f.sum() * grid.cell_weight)
    floor_f, floor_num = _dust_floors(grid, sigma, mass)
    v = grid.v.centers
    num_v = sigma * _dv_centered(f, grid.v.dv) + v[None, :] * f
    num_x = _dx_centered(f, grid.x.dx)
    use, den = _fisher_cells(f, num_v, num_x, sigma, floor_f, floor_num)
    w = grid.cell_weight
    i_xv = math.sqrt(sigma) * float(((num_v * num_x / den) * use).sum() * w)
    i_xx = sigma * float(((num_x**2 / den) * use).sum() * w)
    return i_xv, i_xx


def _filtration_fields(rho, m, kern: DiscreteKernel, floor: float, time=None):
    from .kernels import _check_floor

    rho_phi = convolve_periodic(rho, kern)
    _check_floor(rho_phi, floor, kern.grid, time)
    m_phi = convolve_periodic(m, kern)
    u_f = m_phi / rho_phi
    u_filt = convolve_periodic(u_f, kern)
    return rho_phi, m_phi, u_f, u_filt


def energies(f: np.ndarray, kern: DiscreteKernel, grid: PhaseGrid,
             floor: float):
    """(E, Ecal, Ephi, Ephiphi): the energy hierarchy of one state."""
    rho, m, E, Ecal = moments(f, grid)
    rho_phi, m_phi, u_f, u_filt = _filtration_fields(rho, m, kern, floor)
    dx = grid.x.dx
    ephi = float((m_phi**2 / rho_phi).sum() * dx)
    ephiphi = float((rho * u_filt**2).sum() * dx)
    return E, Ecal, ephi, ephiphi


def alignment_functional(data, kern: DiscreteKernel, grid, floor: float):
    """(A_direct, A_double): energy-difference and double-convolution forms.

    `data` is either a phase-space distribution (with `grid` a PhaseGrid) or
    a (rho, m) pair of macroscopic fields (with `grid` a TorusGrid).
    """
    if isinstance(data, tuple):
        rho, m = data
        xgrid: TorusGrid = grid if isinstance(grid, TorusGrid) else grid.x
    else:
        dv = grid.v.dv
        rho = data.sum(axis=1) * dv
        m = data.dot(grid.v.centers) * dv
        xgrid = grid.x
    rho_phi, m_phi, u_f, u_filt = _filtration_fields(rho, m, kern, floor)
    dx = xgrid.dx
    a_direct = float((m_phi**2 / rho_phi).sum() * dx - (rho * u_filt**2).sum() * dx)

    n = xgrid.nx
    offs = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    circ = kern.samples[offs]                     # circ[xi, i] = phi(xi - x_i)
    pairing = circ.T @ (circ * (rho * dx)[:, None])
    du2 = (u_f[:, None] - u_f[None, :]) ** 2
    a_double = float(0.5 * (pairing * du2).sum() * dx * dx)
    return a_direct, a_double


@dataclass
class EntropyReport:
    """Every scalar functional evaluated at one time, plus identity residuals."""

    t: float
    mass: float
    momentum: float
    E: float
    Ecal: float
    Ephi: float
    Ephiphi: float
    A_direct: float
    A_double: float
    H: float
    Ivv0: float
    Ivv_filt: float
    Ixv: float
    Ixx: float
    I_full: float
    Itilde: float
    fisher_identity_residual: float
    pinsker_slack: float
    logsob_ratio: float
    L1_to_maxwellian: float
    min_rho_phi: float
    density_margin: float

    CSV_COLUMNS = ("t", "mass", "momentum", "E", "Ecal", "Ephi", "Ephiphi",
                   "A_direct", "A_double", "H", "Ivv0", "Ivv_filt", "Ixv",
                   "Ixx", "Itilde", "fisher_identity_residual", "pinsker_slack",
                   "logsob_ratio", "L1_to_maxwellian", "min_rho_phi",
                   "density_margin")

    def csv_values(self):
        return [getattr(self, c) for c in self.CSV_COLUMNS]


def report(f: np.ndarray, sigma: float, ubar: float, mass: float,
           kern: DiscreteKernel, margin_r: float, grid: PhaseGrid,
           floor: float, t: float = 0.0) -> EntropyReport:
    """Assemble the full EntropyReport for one state."""
    rho, m, E, Ecal = moments(f, grid)
    rho_phi, m_phi, u_f, u_filt = _filtration_fields(rho, m, kern, floor)
    dx = grid.x.dx
    ephi = float((m_phi**2 / rho_phi).sum() * dx)
    ephiphi = float((rho * u_filt**2).sum() * dx)
    a_direct, a_double = alignment_functional((rho, m), kern, grid.x, floor)

    mu = maxwellian_grid(grid, sigma, ubar, mass)
    H = relative_entropy(f, mu, grid, sigma)
    l1 = l1_distance(f, mu, grid)
    pinsker_slack = H - (sigma / (2.0 * mass)) * l1**2

    floor_f, floor_num = _dust_floors(grid, sigma, mass)
    v = grid.v.centers
    num_v0 = sigma * _dv_centered(f, grid.v.dv) + v[None, :] * f
    num_x = _dx_centered(f, grid.x.dx)
    use, den = _fisher_cells(f, num_v0, num_x, sigma, floor_f, floor_num)
    w = grid.cell_weight
    ivv0 = float(((num_v0**2 / den) * use).sum() * w)
    num_vu = num_v0 - u_filt[:, None] * f
    ivv_filt = float(((num_vu**2 / den) * use).sum() * w)
    ixv = math.sqrt(sigma) * float(((num_v0 * num_x / den) * use).sum() * w)
    ixx = sigma * float(((num_x**2 / den) * use).sum() * w)

    i_full = ivv0 + ixx
    itilde = ivv0 + ixv + ixx
    fisher_residual = ivv_filt - ivv0 - ephiphi + 2.0 * ephi
    logsob = i_full / H if H > 1e-14 else float("nan")

    return EntropyReport(
        t=t, mass=float(rho.sum() * dx), momentum=float(m.sum() * dx),
        E=E, Ecal=Ecal, Ephi=ephi, Ephiphi=ephiphi,
        A_direct=a_direct, A_double=a_double, H=H,
        Ivv0=ivv0, Ivv_filt=ivv_filt, Ixv=ixv, Ixx=ixx,
        I_full=i_full, Itilde=itilde,
        fisher_identity_residual=fisher_residual,
        pinsker_slack=pinsker_slack, logsob_ratio=logsob,
        L1_to_maxwellian=l1,
        min_rho_phi=float(rho_phi.min()),
        density_margin=hydrodynamic_density_margin(rho, margin_r, mass, grid.x),
    )


def ismall_check(f: np.ndarray, sigma: float, mass: float, grid: PhaseGrid):
    """Full Fisher information I(f) and the ratio I/(sigma M).

    The velocity part differentiates the ratio f/gaussian(v - ubar), which
    vanishes identically for flocking states rho0(x) * maxwellian(v) and
    keeps the check's sigma-scaling exact.
    """
    dx, w = grid.x.dx, grid.cell_weight
    v = grid.v.centers
    m = f.dot(v) * grid.v.dv
    ubar = float(m.sum() * dx / mass)
    g = np.exp(-((v - ubar) ** 2) / (2.0 * sigma))
    num_v = sigma * _dv_centered(f / g[None, :], grid.v.dv) * g[None, :]
    num_x = _dx_centered(f, grid.x.dx)
    floor_f, floor_num = _dust_floors(grid, sigma, mass)
    use, den = _fisher_cells(f, num_v, num_x, sigma, floor_f, floor_num)
    i_vv = float(((num_v**2 / den) * use).sum() * w)
    i_xx = sigma * float(((num_x**2 / den) * use).sum() * w)
    total = i_vv + i_xx
    return total, total / (sigma * mass)


def fit_decay_rate(times, values, window):
    """Least-squares fit of values ~ c1 exp(-c2 t) on the window; returns R^2.

    R^2 is NaN for degenerate (constant) data.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    a, b = window
    mask = (times >= a) & (times <= b)
    if mask.sum() < 8:
        raise ConfigError(f"fit window [{a}, {b}] holds {int(mask.sum())} < 8 samples")
    y = values[mask]
    if np.any(y <= 0.0):
        raise ConfigError("nonpositive samples in the fit window")
    tt = times[mask]
    ly = np.log(y)
    slope, intercept = np.polyfit(tt, ly, 1)
    resid = ly - (slope * tt + intercept)
    ss_res = float((resid**2).sum())
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else float("nan")
    return float(np.exp(intercept)), float(-slope), r2


@dataclass
class HydroReport:
    """Kinetic-vs-macro entropies for one penalized state (unit temperature)."""

    t: float
    H_rel: float            # H(f^eps | local Maxwellian of the macro solution)
    H_eps: float            # kinetic part (entropy against the global Maxwellian)
    G_eps: float            # macroscopic part
    H_macro: float          # H(mu^eps | mu) >= 0
    decomp_residual: float  # H_rel - H(f|mu^eps) - H_macro, exact identity
    reynolds_L1: float
    I_eps: float
    l1_rho: float
    l1_mom: float

    CSV_COLUMNS = ("t", "H_rel", "H_eps", "G_eps", "H_macro", "decomp_residual",
                   "reynolds_L1", "I_eps", "l1_rho", "l1_mom")

    def csv_values(self):
        return [getattr(self, c) for c in self.CSV_COLUMNS]


def hydro_report(f: np.ndarray, rho_macro: np.ndarray, m_macro: np.ndarray,
                 grid: PhaseGrid, eps_pen: float, t: float = 0.0) -> HydroReport:
    """Compare a penalized kinetic state against a macro solution (sigma_eff = 1)."""
    if np.any(rho_macro <= 0.0):
        raise ConfigError("macro reference has vacuum cells")
    dx, dv, w = grid.x.dx, grid.v.dv, grid.cell_weight
    v = grid.v.centers
    rho = f.sum(axis=1) * dv
    m = f.dot(v) * dv
    u_eps = m / np.maximum(rho, 1e-300)
    u_mac = m_macro / rho_macro

    log_2pi = math.log(2.0 * math.pi)

    def local_log(rho_a, u_a):
        # log of rho(x) exp(-(v-u)^2/2) / sqrt(2 pi)
        return (np.log(rho_a)[:, None] - 0.5 * log_2pi
                - 0.5 * (v[None, :] - u_a[:, None]) ** 2)

    pos = f > 0.0
    logf = np.zeros_like(f)
    logf[pos] = np.log(f[pos])

    h_rel = float((np.where(pos, f * (logf - local_log(rho_macro, u_mac)), 0.0)).sum() * w)
    # H(f | mu^eps): guard the log against vacuum columns of f itself.
    safe_rho = np.maximum(rho, 1e-300)
    h_f_mueps = float((np.where(pos, f * (logf - local_log(safe_rho, u_eps)), 0.0)).sum() * w)
    rpos = rho > 0.0
    h_macro = float(0.5 * (rho * (u_eps - u_mac) ** 2).sum() * dx
                    + (np.where(rpos, rho * np.log(np.where(rpos, rho / rho_macro, 1.0)),
                                0.0)).sum() * dx)

    mass = float(rho.sum() * dx)
    h_eps = float((np.where(pos, f * logf, 0.0) + 0.5 * v[None, :] ** 2 * f).sum() * w
                  + 0.5 * mass * log_2pi)
    g_eps = float((0.5 * rho * u_mac**2 - m * u_mac - rho * np.log(rho_macro)).sum() * dx)

    reynolds = ((f * (v[None, :] ** 2 - 1.0)).sum(axis=1) * dv - rho * u_eps**2)
    reynolds_l1 = float(np.abs(reynolds).sum() * dx)

    num = _dv_centered(f, dv) + (1.0 + 0.5 * eps_pen) * (v[None, :] - u_eps[:, None]) * f
    floor_f, floor_num = _dust_floors(grid, 1.0, mass)
    use, den = _fisher_cells(f, num, np.zeros_like(f), 1.0, floor_f, floor_num)
    i_eps = float(((num**2 / den) * use).sum() * w)

    return HydroReport(
        t=t, H_rel=h_rel, H_eps=h_eps, G_eps=g_eps, H_macro=h_macro,
        decomp_residual=h_rel - h_f_mueps - h_macro,
        reynolds_L1=reynolds_l1, I_eps=i_eps,
        l1_rho=float(np.abs(rho - rho_macro).sum() * dx),
        l1_mom=float(np.abs(m - m_macro).sum() * dx),
    )
