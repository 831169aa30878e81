"""Pure-numpy implementations of the hot kernels.

Same call signatures as the compiled extension `fpalign._core`; selected
automatically when the extension is unavailable (or when the environment
variable FPALIGN_PURE_PYTHON is set).
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"

_offset_cache: dict[int, np.ndarray] = {}


def _offsets(n: int) -> np.ndarray:
    idx = _offset_cache.get(n)
    if idx is None:
        idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
        _offset_cache[n] = idx
    return idx


def convolve_circ(g: np.ndarray, phi: np.ndarray, dx: float) -> np.ndarray:
    """Periodic convolution (phi * g)(x_i) = sum_k phi[i-k] g[k] dx."""
    n = phi.shape[0]
    circ = phi[_offsets(n)]
    return circ.dot(np.asarray(g, dtype=float)) * dx


def advect_rows(f: np.ndarray, k: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """Advect each v-column of f by k[j] + nu[j] cells (0 <= nu < 1), periodic.

    Integer part: circular shift.  Fractional part: flux-form step with an
    unlimited parabolic (PPM) reconstruction; fluxes are clamped to the
    donor-cell content, which preserves positivity without touching mass
    and stays inactive on smooth resolved data.
    """
    nx, nv = f.shape
    rows = np.arange(nx)[:, None]
    cols = np.arange(nv)[None, :]
    g = f[(rows - k[None, :]) % nx, cols]

    gm1 = np.roll(g, 1, axis=0)
    gp1 = np.roll(g, -1, axis=0)
    gp2 = np.roll(g, -2, axis=0)
    # 4th-order face values; fr[i] sits at face i+1/2, fl[i] at i-1/2.
    fr = (-gm1 + 7.0 * g + 7.0 * gp1 - gp2) / 12.0
    fl = np.roll(fr, 1, axis=0)
    df = fr - fl
    p6 = 6.0 * g - 3.0 * (fl + fr)
    nuv = nu[None, :]
    flux = nuv * (fl + df * (1.0 - 0.5 * nuv)) + p6 * nuv**2 * (0.5 - nuv / 3.0)
    flux = np.clip(flux, 0.0, g)
    return g - (flux - np.roll(flux, 1, axis=0))


def thomas_columns(sub: np.ndarray, diag: np.ndarray, sup: np.ndarray,
                   rhs: np.ndarray) -> np.ndarray:
    """Solve one tridiagonal system per x-row, along the v-axis.

    For each i: sub[i,j] x[i,j-1] + diag[i,j] x[i,j] + sup[i,j] x[i,j+1] = rhs[i,j],
    with sub[:,0] and sup[:,-1] ignored.
    """
    nx, nv = rhs.shape
    cp = np.empty_like(rhs)
    dp = np.empty_like(rhs)
    cp[:, 0] = sup[:, 0] / diag[:, 0]
    dp[:, 0] = rhs[:, 0] / diag[:, 0]
    for j in range(1, nv):
        m = diag[:, j] - sub[:, j] * cp[:, j - 1]
        cp[:, j] = sup[:, j] / m
        dp[:, j] = (rhs[:, j] - sub[:, j] * dp[:, j - 1]) / m
    x = np.empty_like(rhs)
    x[:, nv - 1] = dp[:, nv - 1]
    for j in range(nv - 2, -1, -1):
        x[:, j] = dp[:, j] - cp[:, j] * x[:, j + 1]
    return x
